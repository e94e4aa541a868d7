"""
bench：单线程下比较参考离散与网络的每点右端项开销，并给出预测加速比
"""

import logging
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from ..grid import make_grid
from ..metrics import speedup_bench
from ..neural.mlp import init_mlp
from ..operator import StencilNetModel, load_model
from ..schemas import ExperimentConfig, PdeProblem, ProblemKind, Recipe
from ..solvers import reference_rhs
from ..storage import write_csv
from .common import output_dir, require_file, write_summary

logger = logging.getLogger(__name__)

DEFAULT_BENCH_GRID = (8192,)


def baseline_rhs(problem: PdeProblem, length: float) -> Callable[[np.ndarray], np.ndarray]:
    """按网格点数缓存参考右端项，计时不含网格构造"""
    cache: Dict[int, Callable] = {}

    def rhs(u: np.ndarray) -> np.ndarray:
        n = u.shape[-1]
        if n not in cache:
            cache[n] = reference_rhs(problem, make_grid(length, n))
        return cache[n](u, 0.0)

    return rhs


def has_diffusion(problem: PdeProblem) -> bool:
    """抛物型CFL（Δt ∝ Δx²）的问题"""
    return problem.kind == ProblemKind.KS or problem.D > 0


def bench_model(config: ExperimentConfig, recipe: Recipe) -> StencilNetModel:
    """检查点中的网络；没有检查点时用同形状的随机网络（计时与权重无关）"""
    if config.paths.checkpoint:
        model, _ = load_model(require_file(Path(config.paths.checkpoint), "checkpoint"))
        return model
    cfg = config.train
    theta = init_mlp([2 * cfg.m + 1, *cfg.hidden, 1], cfg.seed, cfg.activation)
    return StencilNetModel(theta, cfg.m, recipe.L / recipe.n_points, 1.0, recipe.name)


def cmd_bench(config: ExperimentConfig, grid_sizes: Optional[Sequence[int]] = None,
              repetitions: int = 10) -> Dict[str, Any]:
    """
    计时基准

    Args:
        config: 实验配置
        grid_sizes: 计时用的网格点数
        repetitions: 每个网格的重复次数（≥10）

    Returns:
        计时表路径与各网格的 t_n/t_s
    """
    recipe = config.resolve_recipe()
    problem = recipe.problem()
    grid_sizes = list(grid_sizes or DEFAULT_BENCH_GRID)
    model = bench_model(config, recipe)
    factors = list(recipe.coarse_variants) or [recipe.C_space]

    table = speedup_bench(
        baseline_rhs(problem, recipe.L),
        model,
        grid_sizes,
        repetitions=repetitions,
        coarse_factors=factors,
        has_diffusion=has_diffusion(problem),
        seed=config.seed,
    )
    out = output_dir(config)
    path = write_csv(out / f"{recipe.name}_bench.csv", table)
    for row in table.itertuples():
        print(f"[bench N_x={row.n_points} C={row.C}] t_s={row.t_s:.3e}s t_n={row.t_n:.3e}s "
              f"t_n/t_s={row.ratio:.2f} κ={row.kappa:.2f}{'' if row.reliable else ' (unreliable)'}")

    summary = {
        "table": str(path),
        "grid_sizes": grid_sizes,
        "repetitions": repetitions,
        "ratio": {int(n): float(r) for n, r in table.groupby("n_points")["ratio"].first().items()},
    }
    write_summary(out / f"{recipe.name}_bench.json", summary)
    return summary


__all__ = ["cmd_bench", "baseline_rhs", "has_diffusion"]
