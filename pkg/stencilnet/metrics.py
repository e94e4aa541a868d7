"""
评估指标
自主预测、MSE、功率谱、最大Lyapunov指数、去噪质量、自由度缩减与加速比
"""

import logging
import time
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import ks_2samp
from sklearn.linear_model import LinearRegression
from threadpoolctl import threadpool_limits

from .datagen import make_rng
from .errors import InvalidArgumentError, NumericalError
from .grid import Grid, Trajectory
from .operator import Forcing, StencilNetModel, apply_operator, rollout_k
from .schemas import DenoiseReport, EvalReport, LyapunovFit
from .training import NoiseEstimate

logger = logging.getLogger(__name__)

ArrayOrTrajectory = Union[Trajectory, np.ndarray]

# Lyapunov拟合窗口
LYAPUNOV_R2 = 0.98
LYAPUNOV_MIN_SAMPLES = 20
LYAPUNOV_SATURATION = 0.1

# 计时
TIMING_SPREAD_LIMIT = 0.2


def _values(x: ArrayOrTrajectory) -> np.ndarray:
    return x.data if isinstance(x, Trajectory) else np.asarray(x, dtype=np.float64)


# 预测
def predict(model: StencilNetModel, u0: np.ndarray, n_steps: int, forcing: Optional[Forcing] = None,
            grid: Optional[Grid] = None, t0: float = 0.0) -> Trajectory:
    """自主推进n_steps步并逐步记录"""
    u0 = np.asarray(u0, dtype=np.float64)
    if grid is None:
        grid = Grid(length=model.trained_dx * u0.shape[-1], n_points=u0.shape[-1])
    model.check_resolution(grid)
    if u0.shape != (grid.n_points,):
        raise InvalidArgumentError(f"initial field length {u0.shape} does not match grid ({grid.n_points} points)")
    rows = [u0]
    if n_steps > 0:
        rows.extend(rollout_k(model, u0, n_steps, forcing, t0))
    logger.info(f"预测完成: {n_steps} 步, max|u|={np.max(np.abs(rows[-1])):.4g}")
    return Trajectory(grid, model.trained_dt, np.stack(rows), {"source": "stencilnet", "t0": t0})


# 误差
def mse(pred: ArrayOrTrajectory, truth: ArrayOrTrajectory) -> float:
    """(1/(N_t N_x)) Σ_n Σ_i (û − u)²"""
    a, b = _values(pred), _values(truth)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def per_time_mse(pred: ArrayOrTrajectory, truth: ArrayOrTrajectory) -> np.ndarray:
    a, b = _values(pred), _values(truth)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    return np.mean((a - b) ** 2, axis=-1)


# 功率谱
def power_spectrum(traj: Trajectory, window: Optional[Tuple[float, float]] = None) -> pd.DataFrame:
    """时间平均的单边空间功率谱，按N_x²归一化；缺省窗口为后半段"""
    times = traj.times()
    if window is None:
        rows = np.arange(traj.n_steps // 2, traj.n_steps)
    else:
        t_start, t_end = window
        if t_start > t_end or t_start < -1e-12 or t_end > times[-1] + 1e-9:
            raise InvalidArgumentError(f"spectral window {window} is outside the trajectory [0, {times[-1]:.6g}]")
        rows = np.nonzero((times >= t_start - 1e-12) & (times <= t_end + 1e-12))[0]
    if len(rows) == 0:
        raise InvalidArgumentError("spectral window contains no rows")

    n = traj.grid.n_points
    coeffs = np.fft.rfft(traj.data[rows], axis=-1)
    power = np.mean(np.abs(coeffs) ** 2, axis=0) / n**2
    # 正负频率合并，0模态与Nyquist模态只出现一次
    power[1:] *= 2.0
    if n % 2 == 0:
        power[-1] /= 2.0
    modes = np.arange(len(power))
    return pd.DataFrame({"mode": modes, "wavenumber": 2.0 * np.pi * modes / traj.grid.length, "power": power})


def spectrum_ratio(model_spec: pd.DataFrame, truth_spec: pd.DataFrame, modes: Iterable[int] = range(1, 21)) -> np.ndarray:
    """逐模态功率比（用于 2 倍以内的检查）"""
    modes = list(modes)
    a = model_spec.set_index("mode").loc[modes, "power"].to_numpy()
    b = truth_spec.set_index("mode").loc[modes, "power"].to_numpy()
    return a / np.maximum(b, np.finfo(float).tiny)


# Lyapunov指数
def _best_linear_window(t: np.ndarray, y: np.ndarray, min_len: int, r2_min: float) -> Optional[Tuple[int, int, float]]:
    """最长的 r² > r2_min 连续区间（长度相同时取r²较大者），用累积和向量化计算"""
    n = len(t)
    if n < min_len:
        return None
    cs = lambda v: np.concatenate([[0.0], np.cumsum(v)])
    St, Sy, Stt, Syy, Sty = cs(t), cs(y), cs(t * t), cs(y * y), cs(t * y)
    stride = max(1, n // 200)
    best = None
    for s in range(0, n - min_len + 1, stride):
        e = np.arange(s + min_len, n + 1)
        k = e - s
        st, sy = St[e] - St[s], Sy[e] - Sy[s]
        var_t = (Stt[e] - Stt[s]) - st * st / k
        var_y = (Syy[e] - Syy[s]) - sy * sy / k
        cov = (Sty[e] - Sty[s]) - st * sy / k
        with np.errstate(divide="ignore", invalid="ignore"):
            r2 = np.where((var_t > 0) & (var_y > 0), cov * cov / (var_t * var_y), 0.0)
        ok = np.nonzero(r2 > r2_min)[0]
        if len(ok) == 0:
            continue
        j = ok[-1]
        cand = (int(k[j]), float(r2[j]), s, int(e[j]))
        if best is None or cand[:2] > best[:2]:
            best = cand
    if best is None:
        return None
    return best[2], best[3], best[1]


def lyapunov_from_stepper(step: Callable[[np.ndarray, float], np.ndarray], dt: float, u0: np.ndarray,
                          horizon: float, delta0: Optional[float] = None, n_directions: int = 10,
                          seed: int = 0) -> Tuple[LyapunovFit, pd.DataFrame]:
    """相邻轨迹距离增长的斜率；step(批量状态, t) 推进一步"""
    u0 = np.asarray(u0, dtype=np.float64)
    if n_directions < 1:
        raise InvalidArgumentError("need at least one perturbation direction")
    if delta0 is None:
        delta0 = 1e-7 * float(np.linalg.norm(u0))
    if not delta0 > 0:
        raise InvalidArgumentError(f"perturbation size must be positive, got {delta0}")
    n_steps = int(round(horizon / dt))
    if n_steps < LYAPUNOV_MIN_SAMPLES:
        raise InvalidArgumentError(f"horizon {horizon} gives only {n_steps} steps; need >= {LYAPUNOV_MIN_SAMPLES}")

    rng = make_rng(seed)
    directions = rng.standard_normal((n_directions, u0.size))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    state = np.vstack([u0[None, :], u0[None, :] + delta0 * directions])

    base = np.empty((n_steps + 1, u0.size))
    dist = np.empty((n_steps + 1, n_directions))
    base[0] = u0
    dist[0] = delta0
    for n in range(1, n_steps + 1):
        state = step(state, (n - 1) * dt)
        base[n] = state[0]
        dist[n] = np.linalg.norm(state[1:] - state[0], axis=1)
    if np.any(dist <= 0) or not np.all(np.isfinite(dist)):
        raise NumericalError("perturbation distance collapsed to zero or became non-finite")

    t = dt * np.arange(n_steps + 1)
    log_d = np.log(dist)
    mean_log = log_d.mean(axis=1)

    diameter = 2.0 * np.max(np.linalg.norm(base - base.mean(axis=0), axis=1))
    saturated = np.nonzero(dist.mean(axis=1) >= LYAPUNOV_SATURATION * diameter)[0] if diameter > 0 else []
    limit = int(saturated[0]) if len(saturated) else n_steps + 1

    window = _best_linear_window(t[:limit], mean_log[:limit], LYAPUNOV_MIN_SAMPLES, LYAPUNOV_R2)
    found = window is not None
    if found:
        s, e, r2 = window
    else:
        s, e = 0, max(limit, 2)
    reg = LinearRegression().fit(t[s:e, None], mean_log[s:e])
    exponent = float(reg.coef_[0])
    r2 = float(reg.score(t[s:e, None], mean_log[s:e]))
    slopes = [float(LinearRegression().fit(t[s:e, None], log_d[s:e, j]).coef_[0]) for j in range(n_directions)]
    if not found:
        logger.warning(f"未找到线性增长窗口（非混沌？），报告 λ ≤ 0；全段斜率={exponent:.4g}")
        exponent = min(exponent, 0.0)

    fit_line = np.full(n_steps + 1, np.nan)
    fit_line[s:e] = reg.predict(t[s:e, None])
    trace = pd.DataFrame({"time": t, "log_distance": mean_log, "fit": fit_line})
    result = LyapunovFit(exponent=exponent, window_start=s, window_end=e, r2=r2, found=found,
                         slopes=slopes, n_directions=n_directions)
    logger.info(f"最大Lyapunov指数 λ={exponent:.4f} (窗口 {s}:{e}, r²={r2:.4f}, 找到={found})")
    return result, trace


def lyapunov_max(model: StencilNetModel, u0: np.ndarray, delta0: Optional[float] = None, horizon: float = 100.0,
                 n_directions: int = 10, seed: int = 0, forcing: Optional[Forcing] = None) -> Tuple[LyapunovFit, pd.DataFrame]:
    """学到的离散化作为自治系统的最大Lyapunov指数"""

    def step(state, t):
        return rollout_k(model, state, 1, forcing, t)[0]

    return lyapunov_from_stepper(step, model.trained_dt, u0, horizon, delta0, n_directions, seed)


# 自由度与加速比
def dof_reduction(C: int, d: int = 1, has_diffusion: bool = True) -> int:
    """扩散型CFL下为 C^{d+2}，否则为 C^{d+1}"""
    if int(C) != C or C < 1:
        raise InvalidArgumentError(f"coarsening factor must be a positive integer, got {C}")
    if d not in (1, 2, 3):
        raise InvalidArgumentError(f"dimension must be 1, 2 or 3, got {d}")
    return int(C) ** (d + 2 if has_diffusion else d + 1)


def speedup_factor(t_s: float, t_n: float, C: int, d: int = 1, has_diffusion: bool = True) -> float:
    """κ = (t_s/t_n)·DOF缩减"""
    if not (t_s > 0 and t_n > 0):
        raise InvalidArgumentError("timings must be positive")
    return (t_s / t_n) * dof_reduction(C, d, has_diffusion)


def _time_call(fn: Callable[[np.ndarray], np.ndarray], u: np.ndarray, repetitions: int, warmup: int,
               timer: Callable[[], float]) -> Tuple[float, float]:
    for _ in range(warmup):
        fn(u)
    samples = []
    for _ in range(repetitions):
        start = timer()
        fn(u)
        samples.append(timer() - start)
    samples = np.asarray(samples)
    return float(np.median(samples)), float(np.std(samples))


def speedup_bench(baseline: Callable[[np.ndarray], np.ndarray], model: Union[StencilNetModel, Callable],
                  grid_sizes: Sequence[int], repetitions: int = 10, warmup: int = 3,
                  coarse_factors: Sequence[int] = (2, 4, 8), d: int = 1, has_diffusion: bool = True,
                  seed: int = 0, timer: Callable[[], float] = time.perf_counter) -> pd.DataFrame:
    """单线程下每网格点的右端项开销（WENO t_s 与网络 t_n）与预测加速比κ"""
    if repetitions < 10:
        raise InvalidArgumentError(f"benchmark needs at least 10 repetitions, got {repetitions}")
    network = (lambda u: apply_operator(model, u)) if isinstance(model, StencilNetModel) else model
    rng = make_rng(seed)
    rows = []
    with threadpool_limits(limits=1):
        for n in grid_sizes:
            x = 2.0 * np.pi * np.arange(n) / n
            u = np.sin(x) + 0.1 * rng.standard_normal(n)
            t_s, sd_s = _time_call(baseline, u, repetitions, warmup, timer)
            t_n, sd_n = _time_call(network, u, repetitions, warmup, timer)
            reliable = sd_s <= TIMING_SPREAD_LIMIT * t_s and sd_n <= TIMING_SPREAD_LIMIT * t_n
            if not reliable:
                logger.warning(f"N_x={n}: 计时波动超过中位数的20%，结果不可靠")
            for C in coarse_factors:
                rows.append({
                    "n_points": n,
                    "C": C,
                    "t_s": t_s / n,
                    "t_n": t_n / n,
                    "ratio": t_n / t_s,
                    "dof_reduction": dof_reduction(C, d, has_diffusion),
                    "kappa": speedup_factor(t_s, t_n, C, d, has_diffusion),
                    "reliable": reliable,
                })
            logger.info(f"N_x={n}: t_s={t_s / n:.3e}s/点, t_n={t_n / n:.3e}s/点, t_n/t_s={t_n / t_s:.2f}")
    return pd.DataFrame(rows)


# 去噪
def denoise_report(estimate: Union[NoiseEstimate, np.ndarray], truth: np.ndarray, bins: int = 50) -> DenoiseReport:
    """逐点相关系数、标准差之比、公共区间上的直方图与KS统计量"""
    est = estimate.matrix if isinstance(estimate, NoiseEstimate) else np.asarray(estimate, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if est.shape != truth.shape:
        raise InvalidArgumentError(f"shape mismatch: {est.shape} vs {truth.shape}")
    a, b = est.ravel(), truth.ravel()
    sa, sb = float(np.std(a)), float(np.std(b))
    correlation = float(np.corrcoef(a, b)[0, 1]) if sa > 0 and sb > 0 else 0.0
    std_ratio = sa / sb if sb > 0 else 0.0
    lo, hi = float(min(a.min(), b.min())), float(max(a.max(), b.max()))
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    est_counts, _ = np.histogram(a, edges)
    truth_counts, _ = np.histogram(b, edges)
    statistic = float(ks_2samp(a, b).statistic)
    return DenoiseReport(
        correlation=correlation,
        std_ratio=std_ratio,
        ks_statistic=statistic,
        bin_edges=edges.tolist(),
        estimate_counts=est_counts.tolist(),
        truth_counts=truth_counts.tolist(),
    )


def evaluation_report(pred: Trajectory, truth: Trajectory, lyapunov: Optional[LyapunovFit] = None,
                      speedup: Optional[Dict[str, float]] = None) -> EvalReport:
    """汇总预测与真值的误差与谱"""
    spectrum = power_spectrum(pred)
    return EvalReport(
        mse=mse(pred, truth),
        per_time_errors=per_time_mse(pred, truth).tolist(),
        spectrum={int(k): float(p) for k, p in zip(spectrum["mode"], spectrum["power"])},
        lyapunov=lyapunov,
        speedup=speedup,
        horizon=float(pred.times()[-1]),
        n_steps=pred.n_steps - 1,
    )


__all__ = [
    "predict",
    "mse",
    "per_time_mse",
    "power_spectrum",
    "spectrum_ratio",
    "lyapunov_from_stepper",
    "lyapunov_max",
    "dof_reduction",
    "speedup_factor",
    "speedup_bench",
    "denoise_report",
    "evaluation_report",
]
