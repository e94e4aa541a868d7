"""
train：在粗网格数据上训练滑动MLP离散算子
"""

import logging
from typing import Any, Dict

from ..errors import BlowUpError, TrainingError
from ..metrics import evaluation_report, predict
from ..operator import save_model
from ..schemas import ExperimentConfig, NoiseMode
from ..storage import write_csv, write_json, write_trajectory
from ..training import denoised, train
from .common import checkpoint_path, known_forcing, open_dataset, output_dir, write_summary

logger = logging.getLogger(__name__)


def cmd_train(config: ExperimentConfig) -> Dict[str, Any]:
    """
    训练模型

    Args:
        config: 实验配置；训练参数取自 config.train

    Returns:
        检查点路径、最终损失与训练窗口上的评估摘要
    """
    cfg = config.train
    dataset, meta_path = open_dataset(config)
    data = dataset.coarse
    out = output_dir(config)
    prefix = checkpoint_path(config, dataset).stem
    forcing = None if cfg.fold_forcing else known_forcing(dataset, data.grid)

    try:
        result = train(data, cfg, forcing=forcing, problem=dataset.metadata.kind.value)
    except TrainingError as e:
        if e.history is not None:
            path = write_csv(out / f"{prefix}_loss_partial.csv", e.history)
            logger.error(f"训练发散（epoch {e.epoch}），部分损失历史已保存: {path}")
        raise

    ckpt = save_model(result.model, checkpoint_path(config, dataset), cfg, str(meta_path), forcing is not None)
    loss_path = write_csv(out / f"{prefix}_loss.csv", result.history)

    summary: Dict[str, Any] = {
        "checkpoint": str(ckpt),
        "loss_history": str(loss_path),
        "seed": cfg.seed,
        "best_epoch": result.best_epoch,
        "initial_loss": float(result.history["loss"].iloc[0]),
        "final_loss": float(result.history["loss"].iloc[result.best_epoch]),
    }

    start = data
    if cfg.noise == NoiseMode.LEARN:
        noise_path = out / f"{prefix}_noise_estimate.stn1"
        write_trajectory(noise_path, data.with_data(result.noise.matrix))
        summary["noise_estimate"] = str(noise_path)
        start = denoised(data, result.noise)

    # 训练窗口上的自主预测
    truth = dataset.clean if dataset.clean is not None else data
    try:
        pred = predict(result.model, start.data[0], data.n_steps - 1, forcing, data.grid)
        report = evaluation_report(pred, truth)
        report_path = write_json(out / f"{prefix}_train_eval.json", report)
        summary["train_window_mse"] = report.mse
        summary["eval_report"] = str(report_path)
    except BlowUpError as e:
        logger.warning(f"训练窗口上的预测发散（t={e.time}），不生成评估报告")
        summary["train_window_mse"] = None

    print(
        f"[train {prefix}] loss {summary['initial_loss']:.4e} -> {summary['final_loss']:.4e} "
        f"(best epoch {result.best_epoch}), checkpoint {ckpt}"
    )
    write_summary(out / f"{prefix}_train.json", summary)
    return summary


__all__ = ["cmd_train"]
