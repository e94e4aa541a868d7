"""
模板多层感知机
隐藏层ELU激活，输出层线性
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidArgumentError
from .tape import Tape, Variable

logger = logging.getLogger(__name__)


def elu(x):
    """ELU(α=1)：x>0 时为 x，否则 exp(x)−1"""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))
    return float(out) if out.ndim == 0 else out


def relu(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.maximum(x, 0.0)
    return float(out) if out.ndim == 0 else out


ACTIVATIONS = {"elu": elu, "relu": relu}


class MlpParams:
    """网络参数 θ：逐层 (W_q, b_q)"""

    def __init__(self, layers: Sequence[Tuple[np.ndarray, np.ndarray]], activation: str = "elu"):
        if not layers:
            raise InvalidArgumentError("an MLP needs at least one layer")
        if activation not in ACTIVATIONS:
            raise InvalidArgumentError(f"unknown activation {activation!r}")
        self.layers: List[Tuple[np.ndarray, np.ndarray]] = []
        for q, (W, b) in enumerate(layers):
            W = np.array(W, dtype=np.float64)
            b = np.array(b, dtype=np.float64).reshape(-1)
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise InvalidArgumentError(f"layer {q}: weight {W.shape} and bias {b.shape} do not match")
            if self.layers and self.layers[-1][0].shape[0] != W.shape[1]:
                raise InvalidArgumentError(
                    f"layer {q}: input width {W.shape[1]} does not chain with previous output {self.layers[-1][0].shape[0]}"
                )
            self.layers.append((W, b))
        self.activation = activation

    @property
    def input_width(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def output_width(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def widths(self) -> List[int]:
        return [self.input_width] + [W.shape[0] for W, _ in self.layers]

    @property
    def n_params(self) -> int:
        return sum(W.size + b.size for W, b in self.layers)

    def arrays(self) -> List[np.ndarray]:
        """按 W0, b0, W1, b1, … 展开"""
        out = []
        for W, b in self.layers:
            out.extend([W, b])
        return out

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray], activation: str = "elu") -> "MlpParams":
        if len(arrays) % 2:
            raise InvalidArgumentError("parameter array list must alternate weights and biases")
        return cls([(arrays[k], arrays[k + 1]) for k in range(0, len(arrays), 2)], activation)

    def to_vector(self) -> np.ndarray:
        """按 arrays() 顺序拼接成一维向量"""
        return np.concatenate([a.reshape(-1) for a in self.arrays()])

    def with_vector(self, vector) -> "MlpParams":
        vector = np.asarray(vector, dtype=np.float64).reshape(-1)
        if vector.size != self.n_params:
            raise InvalidArgumentError(f"expected {self.n_params} parameters, got {vector.size}")
        arrays, start = [], 0
        for a in self.arrays():
            arrays.append(vector[start:start + a.size].reshape(a.shape))
            start += a.size
        return MlpParams.from_arrays(arrays, self.activation)

    def copy(self) -> "MlpParams":
        return MlpParams([(W.copy(), b.copy()) for W, b in self.layers], self.activation)

    def weight_matrices(self) -> List[np.ndarray]:
        return [W for W, _ in self.layers]

    def __repr__(self) -> str:
        return f"MlpParams(widths={self.widths}, activation={self.activation!r})"


def init_mlp(widths: Sequence[int], seed: int, activation: str = "elu") -> MlpParams:
    """He式均匀初始化（按fan-in缩放），偏置为零"""
    if len(widths) < 2:
        raise InvalidArgumentError("widths must list input and output sizes")
    rng = np.random.Generator(np.random.Philox(seed))
    layers = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / fan_in)
        layers.append((rng.uniform(-limit, limit, size=(fan_out, fan_in)), np.zeros(fan_out)))
    return MlpParams(layers, activation)


def linear_stencil_params(weights: Sequence[float], bias: float = 0.0) -> MlpParams:
    """植入固定线性模板：单层、无隐藏层"""
    W = np.asarray(weights, dtype=np.float64).reshape(1, -1)
    return MlpParams([(W, np.array([bias]))])


def mlp_forward_batch(theta: MlpParams, patches: np.ndarray) -> np.ndarray:
    """批量前向：(..., 2m+1) → (...)"""
    x = np.asarray(patches, dtype=np.float64)
    if x.shape[-1] != theta.input_width:
        raise InvalidArgumentError(f"patch width {x.shape[-1]} does not match network input width {theta.input_width}")
    act = ACTIVATIONS[theta.activation]
    for W, b in theta.layers[:-1]:
        x = act(x @ W.T + b)
    W, b = theta.layers[-1]
    return (x @ W.T + b)[..., 0]


def mlp_forward(theta: MlpParams, patch) -> float:
    """单个模板片段的前向计算"""
    patch = np.asarray(patch, dtype=np.float64)
    if patch.ndim != 1:
        raise InvalidArgumentError("mlp_forward expects a single stencil patch")
    return float(mlp_forward_batch(theta, patch))


def mlp_forward_taped(tape: Tape, layer_vars: Sequence[Tuple[Variable, Variable]], x: Variable,
                      activation: str = "elu") -> Variable:
    """在Tape上记录前向：(..., 2m+1) → (...)"""
    if x.shape[-1] != layer_vars[0][0].shape[1]:
        raise InvalidArgumentError(f"input width {x.shape[-1]} does not match network input width {layer_vars[0][0].shape[1]}")
    h = x
    for W, b in layer_vars[:-1]:
        h = tape.affine(h, W, b)
        h = tape.elu(h) if activation == "elu" else tape.relu(h)
    W, b = layer_vars[-1]
    out = tape.affine(h, W, b)
    return tape.reshape(out, out.shape[:-1])


def taped_params(tape: Tape, theta: MlpParams, requires_grad: bool = True) -> List[Tuple[Variable, Variable]]:
    """把参数注册为Tape叶子"""
    return [(tape.leaf(W, requires_grad), tape.leaf(b, requires_grad)) for W, b in theta.layers]


def infinity_norm_product(theta: MlpParams) -> float:
    """∏‖W_q‖∞，ELU/ReLU网络的Lipschitz上界"""
    return float(np.prod([np.abs(W).sum(axis=1).max() for W in theta.weight_matrices()]))


__all__ = [
    "elu",
    "relu",
    "MlpParams",
    "init_mlp",
    "linear_stencil_params",
    "mlp_forward",
    "mlp_forward_batch",
    "mlp_forward_taped",
    "taped_params",
    "infinity_norm_product",
]
