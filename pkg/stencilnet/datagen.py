"""
基准数据集生成
强迫Burgers、KS、KdV（以及热方程、线性对流）的初值、外力、噪声与粗化训练数据
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidArgumentError
from .grid import Grid, Trajectory, crop_time, make_grid, subsample
from .schemas import DatasetMetadata, ForcingParams, NoiseSpec, PdeProblem, ProblemKind, Recipe
from .solvers import simulate
from .storage import read_json, read_trajectory, sidecar_path, write_json, write_trajectory

logger = logging.getLogger(__name__)

# 外力参数范围
FORCING_AMPLITUDE = 0.1
FORCING_FREQUENCY = 0.4
FORCING_MODES = 20

# KS初值参数
KS_AMPLITUDE = 0.5
KS_WAVENUMBERS = (1, 2, 3)

# 同一根种子派生的独立子流编号
FORCING_STREAM = 0
IC_STREAM = 1
NOISE_STREAM = 2


def make_rng(seed: int, stream: Optional[int] = None) -> np.random.Generator:
    """基于计数器的Philox生成器

    给定stream时由 SeedSequence(seed) 的第stream个子序列派生密钥，
    不同根种子、不同子流的序列互不重叠
    """
    if stream is None:
        return np.random.Generator(np.random.Philox(int(seed)))
    if stream < 0:
        raise InvalidArgumentError(f"stream index must be non-negative, got {stream}")
    child = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(child))


def forcing_wavenumbers(L: float) -> List[int]:
    """保持波数范围不变：L=2π 时为 {2..5}，L=2πs 时为 {2s..10s}"""
    s = L / (2.0 * math.pi)
    if s < 1.0 - 1e-9:
        raise InvalidArgumentError(f"forcing wavenumbers are defined for L >= 2π, got L={L}")
    if abs(s - 1.0) < 1e-9:
        return [2, 3, 4, 5]
    lo, hi = int(round(2 * s)), int(round(10 * s))
    return list(range(lo, hi + 1))


def sample_forcing(seed: int, L: float, wavenumbers: Optional[Sequence[int]] = None,
                   n_modes: Optional[int] = None) -> ForcingParams:
    """均匀采样外力参数；大区域上模态数取波数集合大小"""
    wavenumbers = list(wavenumbers) if wavenumbers is not None else forcing_wavenumbers(L)
    if not wavenumbers:
        raise InvalidArgumentError("wavenumber set must not be empty")
    if n_modes is None:
        n_modes = FORCING_MODES if abs(L - 2 * math.pi) < 1e-9 else len(wavenumbers)
    rng = make_rng(seed, FORCING_STREAM)
    amplitudes = rng.uniform(-FORCING_AMPLITUDE, FORCING_AMPLITUDE, n_modes)
    frequencies = rng.uniform(-FORCING_FREQUENCY, FORCING_FREQUENCY, n_modes)
    phases = rng.uniform(0.0, 2.0 * math.pi, n_modes)
    ls = rng.choice(np.asarray(wavenumbers), size=n_modes)
    return ForcingParams(
        amplitudes=amplitudes.tolist(),
        frequencies=frequencies.tolist(),
        wavenumbers=[int(l) for l in ls],
        phases=phases.tolist(),
        L=L,
    )


def eval_forcing(fp: ForcingParams, x, t) -> np.ndarray:
    """f(x,t) = Σ A_i sin(ω_i t + 2π l_i x/L + φ_i)"""
    return fp.evaluate(x, t)


class KnownForcing:
    """固定网格上的已知外力 f(t)；t为向量时返回逐行外力"""

    def __init__(self, params: ForcingParams, grid: Grid):
        self.params = params
        self.grid = grid
        self._x = grid.points()

    def __call__(self, t) -> np.ndarray:
        return self.params.evaluate(self._x, t)


# 初始条件
def burgers_ic(grid: Grid) -> np.ndarray:
    return np.exp(-(grid.points() - 3.0) ** 2)


def ks_ic(seed: int, grid: Grid) -> np.ndarray:
    """Σ A_i sin(2π l_i x/L + φ_i)，l ∈ {1,2,3}"""
    rng = make_rng(seed, IC_STREAM)
    n = len(KS_WAVENUMBERS)
    amplitudes = rng.uniform(-KS_AMPLITUDE, KS_AMPLITUDE, n)
    phases = rng.uniform(0.0, 2.0 * math.pi, n)
    x = grid.points()
    u = np.zeros(grid.n_points)
    for A, l, phi in zip(amplitudes, KS_WAVENUMBERS, phases):
        u += A * np.sin(2.0 * math.pi * l * x / grid.length + phi)
    return u


def kdv_ic(grid: Grid) -> np.ndarray:
    return np.cos(math.pi * grid.points())


def heat_ic(grid: Grid) -> np.ndarray:
    x = 2.0 * math.pi * grid.points() / grid.length
    return np.sin(x) + 0.5 * np.cos(3.0 * x)


def advection_ic(grid: Grid) -> np.ndarray:
    """方形脉冲，x ∈ [1, 2)"""
    x = grid.points()
    return ((x >= 1.0) & (x < 2.0)).astype(np.float64)


def initial_condition(kind: ProblemKind, grid: Grid, seed: int) -> np.ndarray:
    if kind == ProblemKind.FORCED_BURGERS:
        return burgers_ic(grid)
    if kind == ProblemKind.KS:
        return ks_ic(seed, grid)
    if kind == ProblemKind.KDV:
        return kdv_ic(grid)
    if kind == ProblemKind.HEAT:
        return heat_ic(grid)
    return advection_ic(grid)


# 噪声
def add_noise(traj: Trajectory, spec: NoiseSpec) -> Tuple[Trajectory, np.ndarray]:
    """V = U + η，η ~ σ·N(0, std²(U))，std取整条轨迹；返回的噪声矩阵精确等于 V − U"""
    if spec.sigma < 0:
        raise InvalidArgumentError(f"sigma must be non-negative, got {spec.sigma}")
    clean = traj.data
    if spec.sigma == 0:
        return traj.with_data(clean), np.zeros_like(clean)
    scale = spec.sigma * float(np.std(clean))
    eta = scale * make_rng(spec.seed, NOISE_STREAM).standard_normal(clean.shape)
    noisy = clean + eta
    meta = dict(traj.meta, sigma=spec.sigma, noise_seed=spec.seed)
    return Trajectory(traj.grid, traj.dt, noisy, meta), noisy - clean


# 粗化
def coarse_time_factor(fine_dt: float, dx_c: float, D: float) -> int:
    """满足 C_time·dt ≤ (Δx_c)²/D 的最大整数C_time"""
    if D <= 0:
        raise InvalidArgumentError("the coarse diffusive CFL bound needs D > 0")
    return max(int(math.floor((dx_c * dx_c / D) / fine_dt + 1e-9)), 1)


def hyperdiffusive_time_factor(fine_dt: float, dx_c: float, kappa: float = 1.0) -> int:
    """满足 C_time·dt ≤ (Δx_c)⁴/(8κ) 的最大整数C_time（∂x⁴项的中心差分显式稳定界）"""
    if kappa <= 0:
        raise InvalidArgumentError("the hyperdiffusive CFL bound needs kappa > 0")
    return max(int(math.floor((dx_c**4 / (8.0 * kappa)) / fine_dt + 1e-9)), 1)


def resolve_time_factor(recipe: Recipe, fine_dt: float, C_space: int, dx: float,
                        C_time: Optional[int] = None) -> int:
    """显式C_time > 训练步长train_dt > 粗网格CFL（KS取四阶耗散界，其余取扩散界） > 1"""
    if C_time is not None:
        return int(C_time)
    if recipe.C_time is not None:
        return recipe.C_time
    if recipe.train_dt is not None:
        ratio = recipe.train_dt / fine_dt
        factor = int(round(ratio))
        if factor < 1 or abs(ratio - factor) > 1e-6 * ratio:
            raise InvalidArgumentError(
                f"training dt {recipe.train_dt} is not an integer multiple of the generation dt {fine_dt}"
            )
        return factor
    if recipe.kind == ProblemKind.KS:
        return hyperdiffusive_time_factor(fine_dt, C_space * dx)
    if recipe.D > 0:
        return coarse_time_factor(fine_dt, C_space * dx, recipe.D)
    return 1


@dataclass
class Dataset:
    """一组数据：细网格解、粗网格训练数据、（可选）干净数据与真实噪声"""

    fine: Trajectory
    coarse: Trajectory
    metadata: DatasetMetadata
    clean: Optional[Trajectory] = None
    noise: Optional[np.ndarray] = None
    forcing: Optional[ForcingParams] = None

    def summary(self) -> Dict[str, object]:
        m = self.metadata
        return {
            "recipe": m.recipe,
            "fine_shape": list(self.fine.shape),
            "coarse_shape": list(self.coarse.shape),
            "fine_dx": self.fine.grid.dx,
            "coarse_dx": self.coarse.grid.dx,
            "fine_dt": self.fine.dt,
            "coarse_dt": self.coarse.dt,
            "diffusion_number": m.coefficients.get("D", 0.0) * self.coarse.dt / self.coarse.grid.dx**2,
            "sigma": m.sigma,
        }


def scaled_grid(recipe: Recipe) -> Grid:
    """按domain_scale放大区域，保持dx不变"""
    s = recipe.domain_scale
    return make_grid(recipe.L * s, recipe.n_points * s, recipe.origin * s)


def generate_fine(recipe: Recipe, seed: int) -> Tuple[Trajectory, PdeProblem]:
    """在细网格上运行参考求解器"""
    grid = scaled_grid(recipe)
    forcing = None
    if recipe.forcing:
        forcing = sample_forcing(seed, grid.length)
    problem = recipe.problem(forcing)
    u0 = initial_condition(recipe.kind, grid, seed)
    dt = recipe.dt if recipe.dt is not None else "auto"
    fine = simulate(problem, grid, u0, recipe.T, recipe.scheme, dt)
    return fine, problem


def coarsen(fine: Trajectory, recipe: Recipe, problem: PdeProblem, seed: int, C_space: Optional[int] = None,
            C_time: Optional[int] = None, T_train: Optional[float] = None,
            sigma: Optional[float] = None) -> Dataset:
    """裁剪到训练窗口、粗化并（可选）加噪"""
    C_space = recipe.C_space if C_space is None else int(C_space)
    T_train = recipe.T_train if T_train is None else float(T_train)
    sigma = recipe.sigma if sigma is None else float(sigma)
    if T_train > fine.times()[-1] + 1e-9:
        raise InvalidArgumentError(f"T_train={T_train} exceeds simulated horizon {fine.times()[-1]:.6g}")

    factor = resolve_time_factor(recipe, fine.dt, C_space, fine.grid.dx, C_time)
    cropped = crop_time(fine, T_train)
    clean = subsample(cropped, C_space, factor)

    noise = None
    clean_copy = None
    coarse = clean
    if sigma > 0:
        coarse, noise = add_noise(clean, NoiseSpec(sigma=sigma, seed=seed))
        clean_copy = clean

    coefficients = {"D": problem.D, "delta": problem.delta, "c": problem.c}
    metadata = DatasetMetadata(
        recipe=recipe.name,
        kind=problem.kind,
        coefficients={k: v for k, v in coefficients.items() if v},
        seed=seed,
        L=fine.grid.length,
        origin=fine.grid.origin,
        fine_n_points=fine.grid.n_points,
        fine_dt=fine.dt,
        coarse_n_points=coarse.grid.n_points,
        coarse_dt=coarse.dt,
        C_space=C_space,
        C_time=factor,
        crop_window=clean.meta["crop_window"],
        forcing=problem.forcing,
        n_forcing_modes=problem.forcing.n_modes if problem.forcing else None,
        sigma=sigma,
        truncated_rows=clean.meta.get("truncated_rows", 0),
    )
    logger.info(
        f"粗化数据 C_space={C_space}, C_time={factor}: {coarse.shape[0]}×{coarse.shape[1]}, "
        f"dx_c={coarse.grid.dx:.5g}, dt_c={coarse.dt:.5g}"
    )
    return Dataset(fine, coarse, metadata, clean_copy, noise, problem.forcing)


def make_dataset(recipe: Union[Recipe, str], seed: int, C_space: Optional[int] = None,
                 C_time: Optional[int] = None, T_train: Optional[float] = None,
                 sigma: Optional[float] = None) -> Dataset:
    """模拟→裁剪→粗化（→加噪）"""
    if isinstance(recipe, str):
        recipe = Recipe.from_name(recipe)
    fine, problem = generate_fine(recipe, seed)
    return coarsen(fine, recipe, problem, seed, C_space, C_time, T_train, sigma)


def make_variants(recipe: Recipe, seed: int, factors: Iterable[int],
                  sigma: Optional[float] = None) -> List[Dataset]:
    """同一条细网格解的多个粗化版本"""
    fine, problem = generate_fine(recipe, seed)
    return [coarsen(fine, recipe, problem, seed, C_space=c, sigma=sigma) for c in factors]


# 读写
def save_dataset(dataset: Dataset, out_dir: Union[str, Path], prefix: Optional[str] = None) -> Path:
    """写入STN1文件与JSON元数据，返回元数据路径"""
    out_dir = Path(out_dir)
    prefix = prefix or f"{dataset.metadata.recipe}_C{dataset.metadata.C_space}"
    files = {
        "fine": f"{dataset.metadata.recipe}_fine.stn1",
        "coarse": f"{prefix}.stn1",
    }
    write_trajectory(out_dir / files["fine"], dataset.fine)
    write_trajectory(out_dir / files["coarse"], dataset.coarse)
    if dataset.clean is not None:
        files["clean"] = f"{prefix}_clean.stn1"
        write_trajectory(out_dir / files["clean"], dataset.clean)
    if dataset.noise is not None:
        files["noise"] = f"{prefix}_noise.stn1"
        write_trajectory(out_dir / files["noise"], dataset.coarse.with_data(dataset.noise))
    dataset.metadata = dataset.metadata.model_copy(update={"files": files})
    meta_path = sidecar_path(out_dir / files["coarse"])
    write_json(meta_path, dataset.metadata)
    logger.info(f"数据集已写入: {meta_path}")
    return meta_path


def load_dataset(path: Union[str, Path]) -> Dataset:
    """从元数据JSON（或其对应的STN1）读取数据集"""
    path = Path(path)
    meta_path = path if path.suffix == ".json" else sidecar_path(path)
    metadata = read_json(meta_path, DatasetMetadata)
    base = meta_path.parent
    origin = metadata.origin
    coarse_file = metadata.files.get("coarse", path.name if path.suffix != ".json" else None)
    if coarse_file is None:
        raise InvalidArgumentError(f"{meta_path} lists no coarse trajectory")
    coarse = read_trajectory(base / coarse_file, origin)
    fine = read_trajectory(base / metadata.files["fine"], origin) if "fine" in metadata.files else coarse
    clean = read_trajectory(base / metadata.files["clean"], origin) if "clean" in metadata.files else None
    noise = read_trajectory(base / metadata.files["noise"], origin).data if "noise" in metadata.files else None
    return Dataset(fine, coarse, metadata, clean, noise, metadata.forcing)


__all__ = [
    "make_rng",
    "forcing_wavenumbers",
    "sample_forcing",
    "eval_forcing",
    "KnownForcing",
    "burgers_ic",
    "ks_ic",
    "kdv_ic",
    "heat_ic",
    "advection_ic",
    "initial_condition",
    "add_noise",
    "coarse_time_factor",
    "hyperdiffusive_time_factor",
    "resolve_time_factor",
    "Dataset",
    "scaled_grid",
    "generate_fine",
    "coarsen",
    "make_dataset",
    "make_variants",
    "save_dataset",
    "load_dataset",
]
