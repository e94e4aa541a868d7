"""
傅里叶谱方法：ETDRK4 刚性时间推进（Kassam–Trefethen 围道平均）
适用于 KS 与 KdV，非线性项 −∂x(u²) 按2/3规则去混叠
"""

import logging
from typing import Callable

import numpy as np

from ..config import ETDRK4_CONTOUR_POINTS
from ..errors import InvalidArgumentError, NumericalError
from ..grid import Grid
from ..schemas import PdeProblem, ProblemKind

logger = logging.getLogger(__name__)

Nonlinear = Callable[[np.ndarray], np.ndarray]


class EtdRk4Stepper:
    """缓存φ函数系数的ETDRK4推进器"""

    def __init__(self, linear_symbol: np.ndarray, nonlinear: Nonlinear, dt: float,
                 contour_points: int = ETDRK4_CONTOUR_POINTS):
        if dt <= 0:
            raise InvalidArgumentError(f"dt must be positive, got {dt}")
        symbol = np.asarray(linear_symbol, dtype=np.complex128)
        self.symbol = symbol
        self.nonlinear = nonlinear
        self.dt = float(dt)

        self.E = np.exp(dt * symbol)
        self.E2 = np.exp(0.5 * dt * symbol)
        # 以每个特征值为中心的单位圆上取点，整圆平均（KdV的符号为纯虚数）
        roots = np.exp(2j * np.pi * (np.arange(1, contour_points + 1) - 0.5) / contour_points)
        LR = dt * symbol[:, None] + roots[None, :]
        LR2 = LR * LR
        LR3 = LR2 * LR
        eLR = np.exp(LR)
        self.Q = dt * np.mean((np.exp(LR / 2.0) - 1.0) / LR, axis=1)
        self.f1 = dt * np.mean((-4.0 - LR + eLR * (4.0 - 3.0 * LR + LR2)) / LR3, axis=1)
        self.f2 = dt * np.mean((2.0 + LR + eLR * (LR - 2.0)) / LR3, axis=1)
        self.f3 = dt * np.mean((-4.0 - 3.0 * LR - LR2 + eLR * (4.0 - LR)) / LR3, axis=1)
        if np.all(np.isreal(symbol)):
            for name in ("Q", "f1", "f2", "f3"):
                setattr(self, name, getattr(self, name).real.astype(np.complex128))

    def step(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        # 允许前导批量维
        if v.shape[-1:] != self.symbol.shape:
            raise InvalidArgumentError(f"spectrum length {v.shape} does not match symbol length {self.symbol.shape}")
        Nv = self.nonlinear(v)
        a = self.E2 * v + self.Q * Nv
        Na = self.nonlinear(a)
        b = self.E2 * v + self.Q * Na
        Nb = self.nonlinear(b)
        c = self.E2 * a + self.Q * (2.0 * Nb - Nv)
        Nc = self.nonlinear(c)
        out = self.E * v + Nv * self.f1 + 2.0 * (Na + Nb) * self.f2 + Nc * self.f3
        if not np.all(np.isfinite(out)):
            raise NumericalError("non-finite spectrum after ETDRK4 step")
        return out


def spectral_step_etdrk4(v: np.ndarray, linear_symbol: np.ndarray, nonlinear: Nonlinear, dt: float) -> np.ndarray:
    """单步ETDRK4；重复推进请使用 EtdRk4Stepper"""
    return EtdRk4Stepper(linear_symbol, nonlinear, dt).step(v)


def wavenumbers(grid: Grid) -> np.ndarray:
    """rfft波数 2π·j/L"""
    return 2.0 * np.pi * np.fft.rfftfreq(grid.n_points, d=grid.dx)


def dealias_mask(grid: Grid) -> np.ndarray:
    """2/3规则：保留 |j| ≤ N/3 的模态"""
    index = np.arange(grid.n_points // 2 + 1)
    return index <= grid.n_points // 3


def spectral_linear_symbol(problem: PdeProblem, grid: Grid) -> np.ndarray:
    k = wavenumbers(grid)
    if problem.kind == ProblemKind.KS:
        return (k**2 - k**4).astype(np.complex128)
    if problem.kind == ProblemKind.KDV:
        k_odd = k.copy()
        # 奇数阶导数在Nyquist模态上置零
        if grid.n_points % 2 == 0:
            k_odd[-1] = 0.0
        return 1j * problem.delta * k_odd**3
    raise InvalidArgumentError(f"no spectral scheme for problem kind {problem.kind.value}")


def spectral_nonlinear(problem: PdeProblem, grid: Grid) -> Nonlinear:
    """谱空间非线性项 −ik·FFT(u²)，带去混叠"""
    if problem.kind not in (ProblemKind.KS, ProblemKind.KDV):
        raise InvalidArgumentError(f"no spectral scheme for problem kind {problem.kind.value}")
    n = grid.n_points
    ik = -1j * wavenumbers(grid) * dealias_mask(grid)

    def nonlinear(v: np.ndarray) -> np.ndarray:
        u = np.fft.irfft(v, n=n)
        return ik * np.fft.rfft(u * u)

    return nonlinear


def spectral_rhs(problem: PdeProblem, grid: Grid):
    """物理空间右端项 rhs(u, t)，与谱推进使用相同的符号与去混叠"""
    symbol = spectral_linear_symbol(problem, grid)
    nonlinear = spectral_nonlinear(problem, grid)
    n = grid.n_points

    def rhs(u, t=0.0):
        v = np.fft.rfft(np.asarray(u, dtype=np.float64))
        return np.fft.irfft(symbol * v + nonlinear(v), n=n)

    return rhs


__all__ = [
    "EtdRk4Stepper",
    "spectral_step_etdrk4",
    "wavenumbers",
    "dealias_mask",
    "spectral_linear_symbol",
    "spectral_nonlinear",
    "spectral_rhs",
]
