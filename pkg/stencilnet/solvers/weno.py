"""
五阶WENO重构（Jiang–Shu权重）与通量分裂右端项
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config import WENO_EPS, WENO_OPTIMAL_WEIGHTS, WENO_POWER
from ..errors import InvalidArgumentError, NumericalError
from ..grid import stencil_patches
from .finite_difference import fd_weights

logger = logging.getLogger(__name__)

_OPTIMAL = np.asarray(WENO_OPTIMAL_WEIGHTS)
# 粘性项的三点二阶导数模板，导入时构造一次
_SECOND_DERIVATIVE = fd_weights(2, 2, (-1, 0, 1))


@dataclass
class WenoWorkspace:
    """重构中间量，最后一维为三个候选模板"""

    candidates: np.ndarray
    indicators: np.ndarray
    weights: np.ndarray
    eps: float
    p: int
    optimal: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return np.sum(self.weights * self.candidates, axis=-1)


def _check_flux_values(f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape[-1:] != (5,):
        raise InvalidArgumentError(f"WENO5 needs 5 values along the last axis, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise NumericalError("non-finite value in WENO reconstruction input")
    return f


def weno5_workspace(f, eps: float = WENO_EPS, p: int = WENO_POWER) -> WenoWorkspace:
    """对 f_{i-2} … f_{i+2} 计算候选重构、光滑指示子与非线性权重"""
    if eps <= 0:
        raise InvalidArgumentError(f"eps must be positive, got {eps}")
    f = _check_flux_values(f)
    v0, v1, v2, v3, v4 = (f[..., j] for j in range(5))

    q0 = (2.0 * v0 - 7.0 * v1 + 11.0 * v2) / 6.0
    q1 = (-v1 + 5.0 * v2 + 2.0 * v3) / 6.0
    q2 = (2.0 * v2 + 5.0 * v3 - v4) / 6.0

    is0 = 13.0 / 12.0 * (v0 - 2.0 * v1 + v2) ** 2 + 0.25 * (v0 - 4.0 * v1 + 3.0 * v2) ** 2
    is1 = 13.0 / 12.0 * (v1 - 2.0 * v2 + v3) ** 2 + 0.25 * (v1 - v3) ** 2
    is2 = 13.0 / 12.0 * (v2 - 2.0 * v3 + v4) ** 2 + 0.25 * (3.0 * v2 - 4.0 * v3 + v4) ** 2

    indicators = np.stack([is0, is1, is2], axis=-1)
    alpha = _OPTIMAL / (eps + indicators) ** p
    weights = alpha / alpha.sum(axis=-1, keepdims=True)
    return WenoWorkspace(np.stack([q0, q1, q2], axis=-1), indicators, weights, eps, p, _OPTIMAL)


def weno5_reconstruct(f, eps: float = WENO_EPS, p: int = WENO_POWER):
    """f̂_{i+1/2}；输入可带任意前导批量维"""
    value = weno5_workspace(f, eps, p).value
    return float(value) if np.ndim(value) == 0 else value


def smoothness_indicator_quadrature(f, n_nodes: int = 4) -> np.ndarray:
    """按积分定义计算IS_k：对候选二次多项式的一、二阶导数做Gauss求积"""
    f = _check_flux_values(f)
    if f.ndim != 1:
        raise InvalidArgumentError("quadrature indicators take a single 5-point stencil")
    nodes, node_weights = np.polynomial.legendre.leggauss(n_nodes)
    x = 0.5 * nodes
    w = 0.5 * node_weights

    out = []
    for k in range(3):
        cells = np.arange(k - 2, k + 1)
        # 单元平均 = 多项式在 [j−1/2, j+1/2] 上的积分
        design = np.array([[((j + 0.5) ** (d + 1) - (j - 0.5) ** (d + 1)) / (d + 1) for d in range(3)] for j in cells])
        c0, c1, c2 = np.linalg.solve(design, f[k:k + 3])
        first = c1 + 2.0 * c2 * x
        second = np.full_like(x, 2.0 * c2)
        out.append(float(np.sum(w * first**2) + np.sum(w * second**2)))
    return np.array(out)


def weno_flux_derivative(f_plus: np.ndarray, f_minus: np.ndarray, dx: float) -> np.ndarray:
    """守恒型通量差分 (F_{i+1/2} − F_{i−1/2}) / dx，f⁻ 使用镜像模板"""
    hp = weno5_reconstruct(stencil_patches(f_plus, 2))
    mirrored = np.roll(stencil_patches(f_minus, 2), -1, axis=-2)[..., ::-1]
    hm = weno5_reconstruct(mirrored)
    flux = hp + hm
    return (flux - np.roll(flux, 1, axis=-1)) / dx


def weno_rhs_burgers(u: np.ndarray, D: float, forcing: Optional[np.ndarray], dx: float) -> np.ndarray:
    """N_d(u) = −∂x(u²) + D·∂xx u + f，对流项使用全局Lax–Friedrichs分裂"""
    u = np.asarray(u, dtype=np.float64)
    if dx <= 0:
        raise InvalidArgumentError(f"dx must be positive, got {dx}")
    if forcing is not None and np.shape(forcing) != u.shape:
        raise InvalidArgumentError(f"forcing shape {np.shape(forcing)} does not match field shape {u.shape}")
    flux = u * u
    alpha = float(np.max(np.abs(2.0 * u)))
    convection = weno_flux_derivative(0.5 * (flux + alpha * u), 0.5 * (flux - alpha * u), dx)
    out = -convection
    if D:
        out = out + D * _SECOND_DERIVATIVE.apply(u, dx)
    if forcing is not None:
        out = out + forcing
    return out


def weno_rhs_advection(u: np.ndarray, c: float, dx: float) -> np.ndarray:
    """线性对流 −c·∂x u"""
    u = np.asarray(u, dtype=np.float64)
    a = abs(c)
    return -weno_flux_derivative(0.5 * (c + a) * u, 0.5 * (c - a) * u, dx)


def heat_rhs(u: np.ndarray, D: float, dx: float) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    return D * (np.roll(u, 1, axis=-1) - 2.0 * u + np.roll(u, -1, axis=-1)) / dx**2


__all__ = [
    "WenoWorkspace",
    "weno5_workspace",
    "weno5_reconstruct",
    "smoothness_indicator_quadrature",
    "weno_flux_derivative",
    "weno_rhs_burgers",
    "weno_rhs_advection",
    "heat_rhs",
]
