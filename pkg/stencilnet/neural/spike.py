"""
尖峰函数拟合演示：MLP 对比同参数量的多项式
"""

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.linear_model import LinearRegression

from ..errors import InvalidArgumentError
from .adam import AdamState, adam_step
from .mlp import init_mlp, mlp_forward_batch, mlp_forward_taped, taped_params
from .tape import Tape

logger = logging.getLogger(__name__)


def spike_function(x, a: float = 0.5, b: float = 0.25, c: float = 0.1):
    """f(x) = (a + a|x−b|/(x−b)) / (x+c)²，在 x=b 处无定义"""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x == b):
        raise InvalidArgumentError(f"spike function is undefined at x = b = {b}")
    out = (a + a * np.abs(x - b) / (x - b)) / (x + c) ** 2
    return float(out) if out.ndim == 0 else out


@dataclass
class SpikeFitResult:
    mlp_error: float
    polynomial_error: float
    n_params: int
    degree: int
    final_loss: float


def _chebyshev_design(x: np.ndarray, degree: int) -> np.ndarray:
    # 在 [-1, 1] 上用切比雪夫基，保持最小二乘条件数可控
    t = 2.0 * x - 1.0
    return np.polynomial.chebyshev.chebvander(t, degree)[:, 1:]


def spike_fit_demo(a: float = 0.5, b: float = 0.25, c: float = 0.1, n_train: int = 800,
                   hidden: int = 8, steps: int = 20000, lr: float = 5e-3, seed: int = 0,
                   gap: float = 0.02) -> SpikeFitResult:
    """在同一批样本上训练小型MLP与同参数量多项式，返回留出点上的最大绝对误差"""
    x_train = (np.arange(n_train) + 0.5) / n_train
    x_train = x_train[x_train != b]
    y_train = spike_function(x_train, a, b, c)

    # 留出点取训练点中点，去掉间断两侧宽度为gap的窄带
    x_test = np.arange(1, n_train) / n_train
    x_test = x_test[np.abs(x_test - b) >= gap]
    y_test = spike_function(x_test, a, b, c)

    theta = init_mlp([1, hidden, hidden, 1], seed)
    state = AdamState.for_params(theta, lr=lr)
    inputs = (2.0 * x_train - 1.0)[:, None]
    loss_value = np.inf
    for step in range(steps):
        tape = Tape()
        layer_vars = taped_params(tape, theta)
        pred = mlp_forward_taped(tape, layer_vars, tape.constant(inputs))
        loss = tape.sum(tape.square(tape.add_const(pred, -y_train)))
        flat = [v for pair in layer_vars for v in pair]
        grads = tape.gradient(loss, flat)
        theta, state = adam_step(theta, grads, state)
        loss_value = float(loss.value)
        if step % 5000 == 0:
            logger.debug(f"尖峰拟合 step={step} loss={loss_value:.4e}")
        # 后半程线性退火学习率
        if step >= steps // 2:
            state.lr = lr * (steps - step) / (steps - steps // 2)

    mlp_pred = mlp_forward_batch(theta, (2.0 * x_test - 1.0)[:, None])
    mlp_error = float(np.max(np.abs(mlp_pred - y_test)))

    degree = theta.n_params - 1
    poly = LinearRegression().fit(_chebyshev_design(x_train, degree), y_train)
    poly_pred = poly.predict(_chebyshev_design(x_test, degree))
    poly_error = float(np.max(np.abs(poly_pred - y_test)))

    logger.info(f"尖峰拟合: MLP最大误差={mlp_error:.4f}, 多项式(阶数{degree})最大误差={poly_error:.4f}")
    return SpikeFitResult(mlp_error, poly_error, theta.n_params, degree, loss_value)


__all__ = ["spike_function", "spike_fit_demo", "SpikeFitResult"]
