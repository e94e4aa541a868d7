"""
predict / denoise：用训练好的模型推进，或检查学到的噪声估计
"""

import logging
from typing import Any, Dict, Optional

import pandas as pd

from ..errors import ConfigError
from ..metrics import denoise_report, predict
from ..schemas import ExperimentConfig
from ..storage import read_trajectory, sidecar_path, write_csv, write_json, write_trajectory
from ..training import NoiseEstimate, denoised
from .common import checkpoint_path, known_forcing, open_dataset, open_model, output_dir, require_file, write_summary

logger = logging.getLogger(__name__)


def prediction_steps(n_rows: int, horizon_factor: float, steps: Optional[int] = None) -> int:
    """显式步数，否则为训练窗口步数乘以horizon_factor"""
    if steps is not None:
        if steps < 1:
            raise ConfigError(f"--steps must be positive, got {steps}")
        return int(steps)
    return int(round((n_rows - 1) * horizon_factor))


def cmd_predict(config: ExperimentConfig, steps: Optional[int] = None) -> Dict[str, Any]:
    """
    从数据集第一行出发自主预测

    Args:
        config: 实验配置
        steps: 预测步数（缺省按 eval.horizon_factor）

    Returns:
        预测轨迹路径与形状
    """
    dataset, _ = open_dataset(config)
    model, metadata, ckpt = open_model(config, dataset)
    data = dataset.coarse
    # 学到的模板只在训练分辨率上有效
    model.check_resolution(data.grid)

    n_steps = prediction_steps(data.n_steps, config.eval.horizon_factor, steps)
    u0 = (dataset.clean if dataset.clean is not None else data).data[0]
    pred = predict(model, u0, n_steps, known_forcing(dataset, data.grid, metadata), data.grid)

    out = output_dir(config)
    path = write_trajectory(out / f"{ckpt.stem}_pred.stn1", pred)
    write_json(sidecar_path(path), {
        "checkpoint": str(ckpt),
        "origin": data.grid.origin,
        "dx": data.grid.dx,
        "dt": pred.dt,
        "n_steps": n_steps,
        "seed": dataset.metadata.seed,
    })
    print(f"[predict {ckpt.stem}] {n_steps} steps -> {path}")
    return {"trajectory": str(path), "shape": list(pred.shape), "dt": pred.dt}


def cmd_denoise(config: ExperimentConfig) -> Dict[str, Any]:
    """
    去噪：v − N̂，并在有真实噪声时与之比较

    Args:
        config: 实验配置；需先以 --noise learn 训练

    Returns:
        去噪轨迹路径与（可选）去噪报告
    """
    dataset, _ = open_dataset(config)
    data = dataset.coarse
    out = output_dir(config)
    prefix = checkpoint_path(config, dataset).stem
    estimate_path = require_file(out / f"{prefix}_noise_estimate.stn1", "noise estimate (train with --noise learn)")
    estimate = NoiseEstimate(read_trajectory(estimate_path, data.grid.origin).data)

    cleaned = denoised(data, estimate)
    path = write_trajectory(out / f"{prefix}_denoised.stn1", cleaned)
    summary: Dict[str, Any] = {"denoised": str(path), "noise_energy": estimate.energy()}

    if dataset.noise is None:
        logger.warning("数据集没有真实噪声，只写出去噪轨迹")
    else:
        report = denoise_report(estimate, dataset.noise)
        report_path = write_json(out / f"{prefix}_denoise.json", report)
        centers = 0.5 * (pd.Series(report.bin_edges[:-1]) + pd.Series(report.bin_edges[1:]))
        histogram = pd.DataFrame({
            "bin_center": centers,
            "estimate_count": report.estimate_counts,
            "truth_count": report.truth_counts,
        })
        write_csv(out / f"{prefix}_denoise_histogram.csv", histogram)
        summary.update({
            "report": str(report_path),
            "correlation": report.correlation,
            "std_ratio": report.std_ratio,
            "ks_statistic": report.ks_statistic,
        })
        print(f"[denoise {prefix}] corr={report.correlation:.3f} std ratio={report.std_ratio:.3f} "
              f"KS={report.ks_statistic:.3f}")

    write_summary(out / f"{prefix}_denoise_summary.json", summary)
    return summary


__all__ = ["cmd_predict", "cmd_denoise", "prediction_steps"]
