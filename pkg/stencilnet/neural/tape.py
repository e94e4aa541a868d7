"""
反向模式自动微分
在固定原语集合上记录计算（仿射、ELU、加、乘、缩放、求和、平方、模板收集），
足以对经过时间积分器的损失求梯度
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidArgumentError, TapeError

logger = logging.getLogger(__name__)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """把广播后的梯度按原形状求和还原"""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class _Node:
    __slots__ = ("op", "parents", "value", "forward", "backward")

    def __init__(self, op, parents, value, forward, backward):
        self.op = op
        self.parents = parents
        self.value = value
        self.forward = forward
        self.backward = backward


class Variable:
    """记录在Tape上的数组值"""

    __slots__ = ("tape", "index", "requires_grad")

    # 让 numpy 数组在左侧时也走本类的运算符
    __array_ufunc__ = None

    def __init__(self, tape: "Tape", index: int, requires_grad: bool):
        self.tape = tape
        self.index = index
        self.requires_grad = requires_grad

    @property
    def value(self) -> np.ndarray:
        return self.tape._nodes[self.index].value

    @property
    def shape(self) -> Tuple[int, ...]:
        return np.shape(self.value)

    def __add__(self, other):
        if isinstance(other, Variable):
            return self.tape.add(self, other)
        return self.tape.add_const(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Variable):
            return self.tape.sub(self, other)
        return self.tape.add_const(self, -np.asarray(other))

    def __rsub__(self, other):
        return self.tape.add_const(self.tape.scale(self, -1.0), other)

    def __mul__(self, other):
        if isinstance(other, Variable):
            return self.tape.mul(self, other)
        return self.tape.scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Variable):
            raise InvalidArgumentError("division by a taped value is not a supported primitive")
        return self.tape.scale(self, 1.0 / np.asarray(other))

    def __neg__(self):
        return self.tape.scale(self, -1.0)

    def __repr__(self) -> str:
        return f"Variable(index={self.index}, shape={self.shape}, requires_grad={self.requires_grad})"


class Tape:
    """计算记录：按拓扑顺序保存原语与中间值"""

    def __init__(self):
        self._nodes: List[_Node] = []

    def __len__(self) -> int:
        return len(self._nodes)

    # 叶子节点
    def leaf(self, value, requires_grad: bool = True) -> Variable:
        value = np.array(value, dtype=np.float64)
        self._nodes.append(_Node("leaf", (), value, None, None))
        return Variable(self, len(self._nodes) - 1, requires_grad)

    def constant(self, value) -> Variable:
        return self.leaf(value, requires_grad=False)

    def _record(self, op: str, parents: Sequence[Variable], forward: Callable, backward: Callable) -> Variable:
        for p in parents:
            if p.tape is not self:
                raise InvalidArgumentError("operands belong to different tapes")
        value = forward(*[p.value for p in parents])
        self._nodes.append(_Node(op, tuple(p.index for p in parents), value, forward, backward))
        return Variable(self, len(self._nodes) - 1, any(p.requires_grad for p in parents))

    # 原语
    def add(self, a: Variable, b: Variable) -> Variable:
        sa, sb = a.shape, b.shape
        return self._record(
            "add", (a, b), lambda x, y: x + y,
            lambda g, x, y: (_unbroadcast(g, sa), _unbroadcast(g, sb)),
        )

    def sub(self, a: Variable, b: Variable) -> Variable:
        sa, sb = a.shape, b.shape
        return self._record(
            "sub", (a, b), lambda x, y: x - y,
            lambda g, x, y: (_unbroadcast(g, sa), _unbroadcast(-g, sb)),
        )

    def mul(self, a: Variable, b: Variable) -> Variable:
        sa, sb = a.shape, b.shape
        return self._record(
            "mul", (a, b), lambda x, y: x * y,
            lambda g, x, y: (_unbroadcast(g * y, sa), _unbroadcast(g * x, sb)),
        )

    def scale(self, a: Variable, c) -> Variable:
        c = np.asarray(c, dtype=np.float64)
        sa = a.shape
        return self._record("scale", (a,), lambda x: x * c, lambda g, x: (_unbroadcast(g * c, sa),))

    def add_const(self, a: Variable, c) -> Variable:
        c = np.asarray(c, dtype=np.float64)
        sa = a.shape
        return self._record("add_const", (a,), lambda x: x + c, lambda g, x: (_unbroadcast(g, sa),))

    def square(self, a: Variable) -> Variable:
        return self._record("square", (a,), lambda x: x * x, lambda g, x: (2.0 * x * g,))

    def sum(self, a: Variable) -> Variable:
        sa = a.shape
        return self._record("sum", (a,), lambda x: np.sum(x), lambda g, x: (np.full(sa, g, dtype=np.float64),))

    def elu(self, a: Variable) -> Variable:
        return self._record(
            "elu", (a,), lambda x: np.where(x > 0, x, np.expm1(np.minimum(x, 0.0))),
            lambda g, x: (g * np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0))),),
        )

    def relu(self, a: Variable) -> Variable:
        return self._record("relu", (a,), lambda x: np.maximum(x, 0.0), lambda g, x: (g * (x > 0),))

    def affine(self, x: Variable, W: Variable, b: Variable) -> Variable:
        """y = x Wᵀ + b，x 的最后一维为输入宽度"""

        def backward(g, xv, Wv, bv):
            g2 = g.reshape(-1, Wv.shape[0])
            x2 = xv.reshape(-1, Wv.shape[1])
            return g @ Wv, g2.T @ x2, g2.sum(axis=0)

        return self._record("affine", (x, W, b), lambda xv, Wv, bv: xv @ Wv.T + bv, backward)

    def stencil(self, a: Variable, m: int) -> Variable:
        """周期模板收集：(..., N) → (..., N, 2m+1)"""
        n = a.shape[-1]
        if 2 * m + 1 > n:
            raise InvalidArgumentError(f"stencil of radius {m} is wider than the grid ({n} points)")
        offsets = np.arange(-m, m + 1)
        index = (np.arange(n)[:, None] + offsets[None, :]) % n

        def backward(g, x):
            out = np.zeros_like(x)
            for j, off in enumerate(offsets):
                out += np.roll(g[..., j], off, axis=-1)
            return (out,)

        return self._record("stencil", (a,), lambda x: x[..., index], backward)

    def take(self, a: Variable, rows) -> Variable:
        """沿第0轴取行"""
        rows = np.asarray(rows, dtype=np.intp)

        def backward(g, x):
            out = np.zeros_like(x)
            np.add.at(out, rows, g)
            return (out,)

        return self._record("take", (a,), lambda x: x[rows], backward)

    def reshape(self, a: Variable, shape: Tuple[int, ...]) -> Variable:
        sa = a.shape
        return self._record("reshape", (a,), lambda x: x.reshape(shape), lambda g, x: (g.reshape(sa),))

    # 回放与反传
    def replay(self) -> None:
        """正向回放并逐位比对记录值"""
        values = []
        for i, node in enumerate(self._nodes):
            if node.forward is None:
                values.append(node.value)
                continue
            value = node.forward(*[values[p] for p in node.parents])
            if not np.array_equal(value, node.value, equal_nan=True):
                raise TapeError(f"tape replay diverged at node {i} ({node.op})")
            values.append(value)

    def gradient(self, output: Variable, wrt: Sequence[Variable], verify: bool = False) -> List[np.ndarray]:
        """标量输出对指定变量的伴随"""
        if output.tape is not self:
            raise InvalidArgumentError("output belongs to a different tape")
        if np.size(output.value) != 1:
            raise InvalidArgumentError(f"gradient needs a scalar output, got shape {output.shape}")
        if verify:
            self.replay()

        adjoints: List[Optional[np.ndarray]] = [None] * (output.index + 1)
        adjoints[output.index] = np.ones_like(output.value)
        for i in range(output.index, -1, -1):
            g = adjoints[i]
            node = self._nodes[i]
            if g is None or node.backward is None:
                continue
            parent_values = [self._nodes[p].value for p in node.parents]
            for p, pg in zip(node.parents, node.backward(g, *parent_values)):
                adjoints[p] = pg if adjoints[p] is None else adjoints[p] + pg

        result = []
        for v in wrt:
            g = adjoints[v.index] if v.index < len(adjoints) else None
            result.append(np.zeros_like(v.value) if g is None else np.asarray(g, dtype=np.float64))
        return result


def grad(output: Variable, wrt: Sequence[Variable], verify: bool = False) -> List[np.ndarray]:
    """对记录的标量损失求精确反向模式梯度"""
    return output.tape.gradient(output, wrt, verify=verify)


def finite_difference_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """中心差分梯度（用于校验）"""
    x = np.array(x, dtype=np.float64)
    out = np.zeros_like(x)
    flat = x.reshape(-1)
    out_flat = out.reshape(-1)
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + h
        fp = f(x)
        flat[j] = orig - h
        fm = f(x)
        flat[j] = orig
        out_flat[j] = (fp - fm) / (2 * h)
    return out


def finite_difference_directional(f: Callable[[np.ndarray], float], x: np.ndarray, direction: np.ndarray,
                                   h: float = 1e-5) -> float:
    """沿方向d的中心差分 (f(x+hd) − f(x−hd)) / 2h"""
    x = np.asarray(x, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    if direction.shape != x.shape:
        raise InvalidArgumentError(f"direction shape {direction.shape} does not match point shape {x.shape}")
    return float((f(x + h * direction) - f(x - h * direction)) / (2 * h))


def relative_error(a, b, floor: float = 1e-8) -> np.ndarray:
    """|a−b| / max(|a|, |b|, floor)"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


__all__ = ["Tape", "Variable", "grad", "finite_difference_gradient", "finite_difference_directional", "relative_error"]
