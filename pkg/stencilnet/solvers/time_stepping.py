"""
三阶TVD Runge–Kutta 与 CFL 时间步长
"""

import logging
import math
from typing import Callable

import numpy as np

from ..config import settings
from ..errors import InvalidArgumentError, NumericalError

logger = logging.getLogger(__name__)

# rhs(u, t) -> du/dt
Rhs = Callable[..., object]


def _value(u):
    # Tape上的Variable通过 .value 暴露数值
    return getattr(u, "value", u)


def _check_stage(u, stage: int, t: float):
    if not np.all(np.isfinite(_value(u))):
        raise NumericalError(f"non-finite state in RK3 stage {stage} (t={float(np.min(t)):.6g})")


def rk3_tvd_step(u, rhs: Rhs, dt: float, t: float = 0.0):
    """Shu–Osher三级TVD-RK3；dt可为负（反向积分）。rhs只经运算符重载使用，数组与Tape变量均适用"""
    if dt == 0:
        raise InvalidArgumentError("dt must be non-zero")
    # 增量形式：u² = ¾u + ¼(u¹ + dt·F(u¹)) 等价于 u + ¼(k1 + k2)，零动力学下精确保持u
    k1 = dt * rhs(u, t)
    u1 = u + k1
    _check_stage(u1, 1, t)
    k2 = dt * rhs(u1, t + dt)
    u2 = u + 0.25 * (k1 + k2)
    _check_stage(u2, 2, t)
    k3 = dt * rhs(u2, t + 0.5 * dt)
    u3 = u + (k1 + k2 + 4.0 * k3) / 6.0
    _check_stage(u3, 3, t)
    return u3


def cfl_dt(dx: float, D: float, u_max: float, safety: float = None) -> float:
    """dt = safety · min(dx²/(2D), dx/u_max)"""
    safety = settings.CFL_SAFETY if safety is None else safety
    if dx <= 0:
        raise InvalidArgumentError(f"dx must be positive, got {dx}")
    if not 0 < safety <= 1:
        raise InvalidArgumentError(f"CFL safety factor must be in (0, 1], got {safety}")
    if D < 0 or u_max < 0:
        raise InvalidArgumentError("D and u_max must be non-negative")
    diffusive = dx * dx / (2.0 * D) if D > 0 else math.inf
    advective = dx / u_max if u_max > 0 else math.inf
    dt = min(diffusive, advective)
    if math.isinf(dt):
        raise InvalidArgumentError("time step is unbounded: both D and u_max are zero")
    return safety * dt


__all__ = ["rk3_tvd_step", "cfl_dt"]
