"""
参考求解器驱动：按问题类型选择离散格式并推进整条轨迹
"""

import logging
import math
from typing import Callable, Optional, Union

import numpy as np

from ..config import settings
from ..errors import BlowUpError, InvalidArgumentError, NumericalError
from ..grid import Grid, Trajectory
from ..schemas import PdeProblem, ProblemKind, Scheme
from .spectral import EtdRk4Stepper, spectral_linear_symbol, spectral_nonlinear, spectral_rhs
from .time_stepping import cfl_dt, rk3_tvd_step
from .weno import heat_rhs, weno_rhs_advection, weno_rhs_burgers

logger = logging.getLogger(__name__)

# 谱方法默认步长
SPECTRAL_DT = {ProblemKind.KS: 0.05, ProblemKind.KDV: 5e-4}

# 自动步长时对初始最大波速预留的倍数
WAVE_SPEED_HEADROOM = 2.0


def reference_rhs(problem: PdeProblem, grid: Grid) -> Callable:
    """参考离散算子 rhs(u, t)，含已知外力"""
    dx = grid.dx
    kind = problem.kind
    if kind == ProblemKind.FORCED_BURGERS:
        x = grid.points()
        forcing = problem.forcing

        def rhs(u, t=0.0):
            f = forcing.evaluate(x, t) if forcing is not None else None
            return weno_rhs_burgers(u, problem.D, f, dx)

        return rhs
    if kind == ProblemKind.ADVECTION:
        return lambda u, t=0.0: weno_rhs_advection(u, problem.c, dx)
    if kind == ProblemKind.HEAT:
        return lambda u, t=0.0: heat_rhs(u, problem.D, dx)
    return spectral_rhs(problem, grid)


def wave_speed(problem: PdeProblem, u: np.ndarray) -> float:
    """max |f′(u)|"""
    if problem.kind == ProblemKind.FORCED_BURGERS:
        return float(np.max(np.abs(2.0 * u)))
    if problem.kind == ProblemKind.ADVECTION:
        return abs(problem.c)
    return 0.0


def default_scheme(problem: PdeProblem) -> Scheme:
    if problem.kind in (ProblemKind.KS, ProblemKind.KDV):
        return Scheme.SPECTRAL
    return Scheme.WENO_RK3


def auto_dt(problem: PdeProblem, grid: Grid, u0: np.ndarray, scheme: Scheme) -> float:
    """自动时间步长：WENO用CFL条件（波速预留2倍），谱方法用固定步长"""
    if scheme == Scheme.SPECTRAL:
        return SPECTRAL_DT[problem.kind]
    u_max = WAVE_SPEED_HEADROOM * wave_speed(problem, u0) if problem.kind == ProblemKind.FORCED_BURGERS \
        else wave_speed(problem, u0)
    return cfl_dt(grid.dx, problem.D, u_max)


def _check_scheme(problem: PdeProblem, scheme: Scheme) -> None:
    spectral_kinds = (ProblemKind.KS, ProblemKind.KDV)
    if scheme == Scheme.SPECTRAL and problem.kind not in spectral_kinds:
        raise InvalidArgumentError(f"spectral scheme does not support {problem.kind.value}")
    if scheme == Scheme.WENO_RK3 and problem.kind in spectral_kinds:
        raise InvalidArgumentError(f"{problem.kind.value} is stiff; use the spectral scheme")


def simulate(problem: PdeProblem, grid: Grid, u0: np.ndarray, T: float,
             scheme: Optional[Union[Scheme, str]] = None, dt: Union[float, str] = "auto") -> Trajectory:
    """从u0积分到 ≥ T，逐步记录，返回轨迹"""
    u0 = np.asarray(u0, dtype=np.float64)
    if u0.shape != (grid.n_points,):
        raise InvalidArgumentError(f"initial field length {u0.shape} does not match grid ({grid.n_points} points)")
    if not T > 0:
        raise InvalidArgumentError(f"T must be positive, got {T}")
    scheme = default_scheme(problem) if scheme is None else Scheme(scheme)
    _check_scheme(problem, scheme)
    if dt == "auto":
        dt = auto_dt(problem, grid, u0, scheme)
    dt = float(dt)
    if not dt > 0:
        raise InvalidArgumentError(f"dt must be positive, got {dt}")

    n_steps = int(math.ceil(T / dt - 1e-9))
    logger.info(f"开始模拟 {problem.kind.value}: 格式={scheme.value}, N_x={grid.n_points}, dt={dt:.6g}, 步数={n_steps}")

    data = np.empty((n_steps + 1, grid.n_points))
    data[0] = u0
    threshold = settings.BLOWUP_THRESHOLD

    if scheme == Scheme.SPECTRAL:
        stepper = EtdRk4Stepper(spectral_linear_symbol(problem, grid), spectral_nonlinear(problem, grid), dt)
        v = np.fft.rfft(u0)

        def advance(u, t):
            nonlocal v
            v = stepper.step(v)
            return np.fft.irfft(v, n=grid.n_points)
    else:
        rhs = reference_rhs(problem, grid)

        def advance(u, t):
            return rk3_tvd_step(u, rhs, dt, t)

    u = u0
    report_every = max(n_steps // 10, 1)
    for n in range(1, n_steps + 1):
        t = (n - 1) * dt
        try:
            u = advance(u, t)
        except NumericalError as e:
            raise BlowUpError(f"simulation failed at t={t + dt:.6g} (step {n}): {e}", time=t + dt, step=n) from e
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > threshold:
            raise BlowUpError(f"solution blew up at t={t + dt:.6g} (step {n}): |u| exceeded {threshold:g}",
                              time=t + dt, step=n)
        data[n] = u
        if n % report_every == 0:
            logger.debug(f"模拟进度 {n}/{n_steps}, t={n * dt:.4g}, max|u|={np.max(np.abs(u)):.4g}")

    if scheme == Scheme.WENO_RK3:
        courant = wave_speed(problem, data) * dt / grid.dx
        if courant > 1.0:
            logger.warning(f"实际CFL数 {courant:.3f} 超过1，结果可能不可靠")

    meta = {"scheme": scheme.value, "kind": problem.kind.value}
    logger.info(f"模拟完成: {n_steps + 1} 行, max|u|={np.max(np.abs(data)):.4g}")
    return Trajectory(grid, dt, data, meta)


__all__ = ["simulate", "reference_rhs", "auto_dt", "wave_speed", "default_scheme", "SPECTRAL_DT"]
