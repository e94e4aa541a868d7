"""
Adam优化器
"""

import logging
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..errors import InvalidArgumentError
from .mlp import MlpParams

logger = logging.getLogger(__name__)


class AdamState:
    """一阶/二阶矩累积量与步数"""

    def __init__(self, shapes: Sequence[Tuple[int, ...]], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m: List[np.ndarray] = [np.zeros(s) for s in shapes]
        self.v: List[np.ndarray] = [np.zeros(s) for s in shapes]

    @classmethod
    def for_params(cls, params: Union[MlpParams, Sequence[np.ndarray]], **hyper) -> "AdamState":
        arrays = params.arrays() if isinstance(params, MlpParams) else params
        return cls([np.shape(a) for a in arrays], **hyper)


def adam_step(params: Union[MlpParams, Sequence[np.ndarray]], grads: Sequence[np.ndarray],
              state: AdamState):
    """带偏差修正的Adam更新，返回 (新参数, 状态)"""
    is_mlp = isinstance(params, MlpParams)
    arrays = params.arrays() if is_mlp else list(params)
    if len(arrays) != len(grads) or len(arrays) != len(state.m):
        raise InvalidArgumentError("parameter, gradient and optimizer state lists differ in length")

    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step

    updated = []
    for k, (p, g) in enumerate(zip(arrays, grads)):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != np.shape(p):
            raise InvalidArgumentError(f"gradient {k} has shape {g.shape}, parameter has {np.shape(p)}")
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[k] / bc1
        v_hat = state.v[k] / bc2
        updated.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))

    if is_mlp:
        return MlpParams.from_arrays(updated, params.activation), state
    return updated, state


__all__ = ["AdamState", "adam_step"]
