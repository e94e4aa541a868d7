"""
evaluate：在（可能更长、更大的）区域上比较模型预测与参考解
"""

import logging
from typing import Any, Dict

import pandas as pd

from ..datagen import Dataset, coarsen, generate_fine
from ..errors import InvalidArgumentError
from ..metrics import evaluation_report, lyapunov_max, power_spectrum, predict
from ..schemas import ExperimentConfig, Recipe
from ..storage import write_csv, write_json
from .common import known_forcing, open_dataset, open_model, output_dir, write_summary

logger = logging.getLogger(__name__)

DT_TOLERANCE = 1e-9


def reference_recipe(config: ExperimentConfig, dataset: Dataset, horizon: float) -> Recipe:
    """与训练数据同一预设、同一种子，延长时间并按domain_scale放大区域"""
    meta = dataset.metadata
    recipe = config.resolve_recipe() if config.recipe == meta.recipe else Recipe.from_name(meta.recipe)
    return recipe.model_copy(update={
        "T": max(recipe.T, horizon),
        "T_train": horizon,
        "domain_scale": config.eval.domain_scale,
        "sigma": 0.0,
    })


def reference_solution(config: ExperimentConfig, dataset: Dataset, horizon: float) -> Dataset:
    """重新模拟并以训练数据的粗化因子得到无噪声参考解"""
    meta = dataset.metadata
    recipe = reference_recipe(config, dataset, horizon)
    fine, problem = generate_fine(recipe, meta.seed)
    return coarsen(fine, recipe, problem, meta.seed, meta.C_space, meta.C_time, horizon, 0.0)


def spectrum_table(pred, truth) -> pd.DataFrame:
    model_spec = power_spectrum(pred)
    truth_spec = power_spectrum(truth)
    table = model_spec.rename(columns={"power": "power_model"})
    table["power_truth"] = truth_spec["power"].to_numpy()
    return table


def cmd_evaluate(config: ExperimentConfig) -> Dict[str, Any]:
    """
    评估模型

    Args:
        config: 实验配置；评估选项取自 config.eval

    Returns:
        评估摘要（MSE、谱与可选的Lyapunov指数）
    """
    options = config.eval
    dataset, _ = open_dataset(config)
    model, metadata, ckpt = open_model(config, dataset)
    _, t_window = dataset.metadata.crop_window
    horizon = options.horizon_factor * t_window
    logger.info(f"评估 {ckpt.name}: 预测时长 {horizon:.4g}（训练窗口 {t_window:.4g}），区域放大 {options.domain_scale}×")

    reference = reference_solution(config, dataset, horizon)
    truth = reference.coarse
    model.check_resolution(truth.grid)
    if abs(truth.dt - model.trained_dt) > DT_TOLERANCE * model.trained_dt:
        raise InvalidArgumentError(
            f"reference data has dt={truth.dt:.10g} but the model was trained with dt={model.trained_dt:.10g}"
        )

    forcing = known_forcing(reference, truth.grid, metadata)
    pred = predict(model, truth.data[0], truth.n_steps - 1, forcing, truth.grid)

    out = output_dir(config)
    prefix = ckpt.stem if options.domain_scale == 1 else f"{ckpt.stem}_x{options.domain_scale}"
    files = {}

    lyapunov = None
    if options.lyapunov:
        lyap_horizon = options.lyapunov_horizon or horizon
        # 从参考解末行（吸引子上）出发
        lyapunov, trace = lyapunov_max(model, truth.data[-1], horizon=lyap_horizon,
                                       n_directions=options.lyapunov_directions, seed=config.seed, forcing=forcing)
        files["lyapunov"] = str(write_csv(out / f"{prefix}_lyapunov.csv", trace))

    report = evaluation_report(pred, truth, lyapunov)
    files["report"] = str(write_json(out / f"{prefix}_eval.json", report))
    errors = pd.DataFrame({"time": pred.times(), "mse": report.per_time_errors})
    files["mse"] = str(write_csv(out / f"{prefix}_mse.csv", errors))
    files["spectrum"] = str(write_csv(out / f"{prefix}_spectrum.csv", spectrum_table(pred, truth)))

    summary: Dict[str, Any] = {
        "checkpoint": str(ckpt),
        "horizon": horizon,
        "domain_scale": options.domain_scale,
        "mse": report.mse,
        "lyapunov": lyapunov.exponent if lyapunov else None,
        "files": files,
    }
    lyap_text = f", λ_max={lyapunov.exponent:.4f}" if lyapunov else ""
    print(f"[evaluate {prefix}] MSE={report.mse:.4e} over t∈[0, {horizon:.4g}]{lyap_text}")
    write_summary(out / f"{prefix}_evaluate.json", summary)
    return summary


__all__ = ["cmd_evaluate", "reference_recipe", "reference_solution", "spectrum_table"]
