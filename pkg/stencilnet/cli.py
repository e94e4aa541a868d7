"""
命令行入口
stencilnet {generate,train,predict,denoise,evaluate,bench} [--config PATH] [--seed N] [--out DIR] [--threads N]
"""

import argparse
import contextlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError
from threadpoolctl import threadpool_limits

from . import __version__
from .commands import cmd_bench, cmd_denoise, cmd_evaluate, cmd_generate, cmd_predict, cmd_train
from .config import EXIT_CONFIG_ERROR, EXIT_OK, get_recipe_names, settings
from .errors import BlowUpError, ConfigError, StencilNetError, TrainingError
from .schemas import ExperimentConfig

logger = logging.getLogger(__name__)

VERBS = ("generate", "train", "predict", "denoise", "evaluate", "bench")


def configure_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """配置日志：控制台，加上可选的日志文件"""
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    log_file = log_file or settings.LOG_FILE
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, (level or settings.LOG_LEVEL).upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stencilnet", description="学习一维偏微分方程的粗网格离散化")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="实验配置JSON")
    common.add_argument("--seed", type=int, help="根随机种子")
    common.add_argument("--out", help="输出目录")
    common.add_argument("--threads", type=int, help="数值库线程数上限")
    common.add_argument("--recipe", choices=get_recipe_names(), help="基准问题预设")
    common.add_argument("--dataset", help="数据集元数据JSON或粗网格STN1")
    common.add_argument("--checkpoint", help="模型检查点STNM")
    common.add_argument("--log-level", help="日志级别")

    gen = sub.add_parser("generate", parents=[common], help="生成细网格与粗网格数据")
    gen.add_argument("--sigma", type=float, help="噪声幅度（std(U)的倍数）")
    gen.add_argument("--coarse", type=int, nargs="+", help="空间粗化因子C")
    gen.add_argument("--domain-scale", type=int, help="区域放大倍数")

    tr = sub.add_parser("train", parents=[common], help="训练离散算子")
    tr.add_argument("--noise", choices=["none", "learn"], help="是否同时学习噪声估计")
    tr.add_argument("--q", type=int, help="训练时间窗口")
    tr.add_argument("--epochs", type=int)
    tr.add_argument("--batch-size", type=int)
    tr.add_argument("--lr", type=float)

    pr = sub.add_parser("predict", parents=[common], help="自主预测")
    pr.add_argument("--steps", type=int, help="预测步数")
    pr.add_argument("--horizon-factor", type=float, help="预测时长相对训练窗口的倍数")

    sub.add_parser("denoise", parents=[common], help="去噪并与真实噪声比较")

    ev = sub.add_parser("evaluate", parents=[common], help="评估预测误差、谱与Lyapunov指数")
    ev.add_argument("--horizon-factor", type=float, help="预测时长相对训练窗口的倍数")
    ev.add_argument("--domain-scale", type=int, help="在放大的区域上评估")
    ev.add_argument("--lyapunov", action="store_true", default=None, help="估计最大Lyapunov指数")

    be = sub.add_parser("bench", parents=[common], help="单线程计时基准")
    be.add_argument("--grid", type=int, nargs="+", help="网格点数")
    be.add_argument("--repetitions", type=int, default=10, help="重复次数（≥10）")
    return parser


def _set(section: Dict[str, Any], key: str, value: Any) -> None:
    if value is not None:
        section[key] = value


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """读取JSON配置并用命令行参数覆盖，计算开始前完成校验"""
    raw: Dict[str, Any] = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from e

    opts = vars(args)
    _set(raw, "recipe", opts.get("recipe"))
    _set(raw, "seed", opts.get("seed"))
    _set(raw, "threads", opts.get("threads"))

    overrides = raw.setdefault("overrides", {})
    _set(overrides, "sigma", opts.get("sigma"))
    if opts.get("coarse"):
        overrides["coarse_variants"] = opts["coarse"]
        overrides["C_space"] = opts["coarse"][0]
    if args.verb == "generate":
        _set(overrides, "domain_scale", opts.get("domain_scale"))

    train = raw.setdefault("train", {})
    _set(train, "noise", opts.get("noise"))
    _set(train, "q", opts.get("q"))
    _set(train, "epochs", opts.get("epochs"))
    _set(train, "batch_size", opts.get("batch_size"))
    _set(train, "lr", opts.get("lr"))
    if "seed" not in train and "seed" in raw:
        train["seed"] = raw["seed"]

    evaluation = raw.setdefault("eval", {})
    _set(evaluation, "horizon_factor", opts.get("horizon_factor"))
    _set(evaluation, "lyapunov", opts.get("lyapunov"))
    if args.verb == "evaluate":
        _set(evaluation, "domain_scale", opts.get("domain_scale"))

    paths = raw.setdefault("paths", {})
    _set(paths, "out_dir", opts.get("out"))
    _set(paths, "dataset", opts.get("dataset"))
    _set(paths, "checkpoint", opts.get("checkpoint"))
    return ExperimentConfig.model_validate(raw)


def run(args: argparse.Namespace) -> Dict[str, Any]:
    config = load_config(args)
    threads = config.threads or settings.THREADS
    limits = threadpool_limits(limits=threads) if threads else contextlib.nullcontext()
    with limits:
        if args.verb == "generate":
            return cmd_generate(config)
        if args.verb == "train":
            return cmd_train(config)
        if args.verb == "predict":
            return cmd_predict(config, steps=args.steps)
        if args.verb == "denoise":
            return cmd_denoise(config)
        if args.verb == "evaluate":
            return cmd_evaluate(config)
        return cmd_bench(config, grid_sizes=args.grid, repetitions=args.repetitions)


def main(argv: Optional[List[str]] = None) -> int:
    """解析参数并执行；异常统一转换为退出码"""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        run(args)
    except ValidationError as e:
        logger.error(f"配置无效: {e}")
        return EXIT_CONFIG_ERROR
    except BlowUpError as e:
        logger.error(f"数值发散: t={e.time}, step={e.step}: {e}")
        return e.exit_code
    except TrainingError as e:
        logger.error(f"训练失败（epoch {e.epoch}）: {e}")
        return e.exit_code
    except StencilNetError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"未处理的异常: {e}")
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
