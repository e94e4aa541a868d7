"""
滑动MLP离散算子
同一个网络 θ 作用于每个网格点的模板片段，得到 N̂_θ(u)
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import __version__
from .config import settings
from .errors import BlowUpError, InvalidArgumentError, NumericalError, ResolutionMismatchError
from .grid import Grid, stencil_patches
from .neural.mlp import MlpParams, mlp_forward_batch, mlp_forward_taped
from .neural.tape import Tape, Variable
from .schemas import ModelMetadata, TrainConfig
from .solvers.time_stepping import rk3_tvd_step
from .storage import read_checkpoint, read_json, sidecar_path, write_checkpoint, write_json

logger = logging.getLogger(__name__)

# forcing(t) -> 外力场；t为向量时返回逐行外力
Forcing = Callable[[object], np.ndarray]

DX_TOLERANCE = 1e-9


@dataclass
class StencilNetModel:
    """训练好的离散化：网络参数、模板半径与训练分辨率"""

    theta: MlpParams
    m: int
    trained_dx: float
    trained_dt: float
    problem: str = "unknown"
    integrator: str = "rk3_tvd"

    def __post_init__(self):
        if self.theta.input_width != 2 * self.m + 1:
            raise InvalidArgumentError(
                f"network input width {self.theta.input_width} does not match stencil radius m={self.m}"
            )
        if self.theta.output_width != 1:
            raise InvalidArgumentError("the operator network must have a single output")
        if not self.trained_dx > 0:
            raise InvalidArgumentError(f"trained_dx must be positive, got {self.trained_dx}")
        if not self.trained_dt > 0:
            raise InvalidArgumentError(f"trained_dt must be positive, got {self.trained_dt}")

    @property
    def activation(self) -> str:
        return self.theta.activation

    def check_resolution(self, grid: Grid) -> None:
        """学到的模板只对训练分辨率有效"""
        if abs(grid.dx - self.trained_dx) > DX_TOLERANCE * self.trained_dx:
            raise ResolutionMismatchError(self.trained_dx, grid.dx)


def apply_operator(model: StencilNetModel, u: np.ndarray) -> np.ndarray:
    """output[..., i] = mlp(θ, gather_stencil(u, i, m))"""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim < 1:
        raise InvalidArgumentError("apply_operator expects a field")
    return mlp_forward_batch(model.theta, stencil_patches(u, model.m))


def apply_operator_taped(tape: Tape, layer_vars, u: Variable, m: int, activation: str = "elu") -> Variable:
    """在Tape上记录滑动MLP"""
    return mlp_forward_taped(tape, layer_vars, tape.stencil(u, m), activation)


def operator_rhs(model: StencilNetModel, forcing: Optional[Forcing] = None):
    """rhs(u, t) = N̂_θ(u) + f(t)"""
    if forcing is None:
        return lambda u, t=0.0: apply_operator(model, u)
    return lambda u, t=0.0: apply_operator(model, u) + forcing(t)


def rollout_k(model: StencilNetModel, u: np.ndarray, k: int, forcing: Optional[Forcing] = None,
              t0: float = 0.0) -> List[np.ndarray]:
    """用RK3推进|k|步；k<0 时以 −Δt 反向积分"""
    if k == 0:
        raise InvalidArgumentError("rollout needs |k| >= 1")
    dt = model.trained_dt if k > 0 else -model.trained_dt
    rhs = operator_rhs(model, forcing)
    threshold = settings.BLOWUP_THRESHOLD
    out = []
    state = np.asarray(u, dtype=np.float64)
    for step in range(1, abs(k) + 1):
        t = t0 + (step - 1) * dt
        try:
            state = rk3_tvd_step(state, rhs, dt, t)
        except NumericalError as e:
            raise BlowUpError(f"rollout failed at step {step}: {e}", time=t + dt, step=step) from e
        if np.max(np.abs(state)) > threshold:
            raise BlowUpError(f"rollout blew up at step {step} (t={t + dt:.6g})", time=t + dt, step=step)
        out.append(state)
    return out


# 检查点
def save_model(model: StencilNetModel, path: Union[str, Path], train_config: Optional[TrainConfig] = None,
               dataset: Optional[str] = None, known_forcing: bool = False) -> Path:
    """写入STNM检查点与JSON元数据"""
    path = Path(path)
    write_checkpoint(path, model.theta, model.m, model.trained_dx, model.trained_dt)
    metadata = ModelMetadata(
        version=__version__,
        problem=model.problem,
        integrator=model.integrator,
        activation=model.activation,
        m=model.m,
        trained_dx=model.trained_dx,
        trained_dt=model.trained_dt,
        known_forcing=known_forcing,
        train_config=train_config,
        dataset=dataset,
    )
    write_json(sidecar_path(path), metadata)
    logger.info(f"模型保存到: {path}")
    return path


def load_model(path: Union[str, Path]) -> Tuple[StencilNetModel, Optional[ModelMetadata]]:
    """读取检查点；若存在JSON元数据则一并读取"""
    path = Path(path)
    meta_path = sidecar_path(path)
    metadata = read_json(meta_path, ModelMetadata) if meta_path.is_file() else None
    activation = metadata.activation if metadata else "elu"
    theta, m, dx, dt = read_checkpoint(path, activation)
    problem = metadata.problem if metadata else "unknown"
    logger.info(f"从检查点加载模型: {path} (m={m}, dx={dx:.6g}, dt={dt:.6g})")
    return StencilNetModel(theta, m, dx, dt, problem), metadata


__all__ = [
    "StencilNetModel",
    "apply_operator",
    "apply_operator_taped",
    "operator_rhs",
    "rollout_k",
    "save_model",
    "load_model",
]
