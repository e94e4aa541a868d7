"""
矩条件有限差分模板
权重满足 Σ ξ_j s_j^k = l!·δ_kl（s_j = x_j − x_i，以网格间距为单位），0 ≤ k ≤ l+r−1
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..errors import InvalidArgumentError, NumericalError

logger = logging.getLogger(__name__)

MOMENT_TOLERANCE = 1e-10


@dataclass(frozen=True)
class FdStencil:
    """有限差分模板：偏移、无量纲权重、导数阶数l与精度阶数r"""

    offsets: Tuple[int, ...]
    weights: Tuple[float, ...]
    derivative_order: int
    accuracy_order: int

    @property
    def size(self) -> int:
        return len(self.offsets)

    def moment_residuals(self) -> np.ndarray:
        """每个矩条件（k = 0 … l+r−1）的相对残差"""
        s = np.asarray(self.offsets, dtype=np.float64)
        w = np.asarray(self.weights)
        l = self.derivative_order
        out = []
        for k in range(l + self.accuracy_order):
            terms = w * s**k
            target = math.factorial(l) if k == l else 0.0
            scale = max(np.abs(terms).sum(), 1.0)
            out.append(abs(terms.sum() - target) / scale)
        return np.array(out)

    def apply(self, u: np.ndarray, dx: float) -> np.ndarray:
        """在周期场上作用模板，返回 ∂^l u 的近似"""
        u = np.asarray(u, dtype=np.float64)
        out = np.zeros_like(u)
        for s, w in zip(self.offsets, self.weights):
            if w != 0.0:
                out += w * np.roll(u, -s, axis=-1)
        return out / dx**self.derivative_order


def achieved_order(l: int, n: int) -> int:
    """n点中心模板对l阶导数可达到的精度阶数"""
    return n - l + ((n - l) % 2)


def centered_offsets(l: int, r: int) -> Tuple[int, ...]:
    """达到精度r的最小对称模板"""
    if l < 0 or r < 1:
        raise InvalidArgumentError(f"need l >= 0 and r >= 1, got l={l}, r={r}")
    n = l + 1 if (l + 1) % 2 else l + 2
    while achieved_order(l, n) < r:
        n += 2
    half = n // 2
    return tuple(range(-half, half + 1))


def fd_weights(l: int, r: int, offsets: Sequence[int]) -> FdStencil:
    """求解矩条件线性系统，得到l阶导数、r阶精度的模板权重"""
    offsets = tuple(int(s) for s in offsets)
    n = len(offsets)
    if l < 0 or r < 1:
        raise InvalidArgumentError(f"need l >= 0 and r >= 1, got l={l}, r={r}")
    if len(set(offsets)) != n:
        raise NumericalError(f"moment system is singular: repeated offsets in {offsets}")
    if n < max(l + r - 1, l + 1):
        raise InvalidArgumentError(
            f"{n} offsets cannot reach order {r} for derivative {l} (need at least {max(l + r - 1, l + 1)})"
        )

    s = np.asarray(offsets, dtype=np.float64)
    vandermonde = s[None, :] ** np.arange(n)[:, None]
    rhs = np.zeros(n)
    rhs[l] = math.factorial(l)
    try:
        weights = np.linalg.solve(vandermonde, rhs)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"moment system is singular for offsets {offsets}: {e}") from e

    stencil = FdStencil(offsets, tuple(float(w) for w in weights), l, r)
    residuals = stencil.moment_residuals()
    if residuals.max() >= MOMENT_TOLERANCE:
        bad = int(np.argmax(residuals >= MOMENT_TOLERANCE))
        raise InvalidArgumentError(
            f"offsets {offsets} are too few for derivative {l} at order {r}: moment condition k={bad} fails"
        )
    logger.debug(f"模板权重 l={l}, r={r}, offsets={offsets}: {stencil.weights}")
    return stencil


__all__ = ["FdStencil", "fd_weights", "centered_offsets", "achieved_order", "MOMENT_TOLERANCE"]
