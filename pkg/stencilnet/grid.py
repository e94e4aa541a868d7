"""
一维均匀周期网格、模板索引与轨迹粗化
"""

import logging
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

# 模板片段：x_{i-m} … x_{i+m} 的 2m+1 个值
StencilPatch = np.ndarray


class Grid(BaseModel):
    """均匀周期网格"""

    model_config = ConfigDict(frozen=True)

    length: float = Field(..., gt=0, description="区域长度 L")
    n_points: int = Field(..., ge=3, description="网格点数 N_x")
    origin: float = Field(0.0, description="第0个网格点的物理坐标")
    periodic: bool = Field(True, description="周期边界（v1恒为真）")

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    def points(self) -> np.ndarray:
        return self.origin + self.dx * np.arange(self.n_points)

    def check_stencil(self, m: int) -> None:
        if 2 * m + 1 > self.n_points:
            raise InvalidArgumentError(f"stencil of radius {m} is wider than the grid ({self.n_points} points)")


class Trajectory:
    """轨迹：N_t × N_x 的解样本，第n行对应 t = n·dt"""

    def __init__(self, grid: Grid, dt: float, data: np.ndarray, meta: Optional[Dict[str, Any]] = None):
        data = np.array(data, dtype=np.float64, copy=True)
        if data.ndim != 2 or data.shape[1] != grid.n_points:
            raise InvalidArgumentError(f"trajectory shape {data.shape} does not match grid with {grid.n_points} points")
        if data.shape[0] < 1:
            raise InvalidArgumentError("trajectory needs at least one row")
        if dt <= 0:
            raise InvalidArgumentError(f"dt must be positive, got {dt}")
        if not np.all(np.isfinite(data)):
            raise InvalidArgumentError("trajectory contains non-finite values")
        self.grid = grid
        self.dt = float(dt)
        self.data = data
        self.data.setflags(write=False)
        self.meta = dict(meta or {})

    @property
    def n_steps(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self):
        return self.data.shape

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps)

    def row(self, t: float) -> np.ndarray:
        n = int(round(t / self.dt))
        if not 0 <= n < self.n_steps:
            raise InvalidArgumentError(f"time {t} outside trajectory window")
        return self.data[n]

    def with_data(self, data: np.ndarray) -> "Trajectory":
        return Trajectory(self.grid, self.dt, data, self.meta)

    def __repr__(self) -> str:
        return f"Trajectory(N_t={self.n_steps}, N_x={self.grid.n_points}, dx={self.grid.dx:.6g}, dt={self.dt:.6g})"


def make_grid(L: float, N_x: int, origin: float = 0.0) -> Grid:
    """创建网格"""
    if not L > 0:
        raise InvalidArgumentError(f"domain length must be positive, got {L}")
    if int(N_x) != N_x or N_x < 3:
        raise InvalidArgumentError(f"grid needs at least 3 points, got {N_x}")
    return Grid(length=float(L), n_points=int(N_x), origin=float(origin))


def stencil_indices(n_points: int, m: int) -> np.ndarray:
    """周期模板索引表，形状 (N_x, 2m+1)"""
    if 2 * m + 1 > n_points:
        raise InvalidArgumentError(f"stencil of radius {m} is wider than the grid ({n_points} points)")
    offsets = np.arange(-m, m + 1)
    return (np.arange(n_points)[:, None] + offsets[None, :]) % n_points


def stencil_patches(field: np.ndarray, m: int) -> np.ndarray:
    """沿最后一个轴收集所有点的模板片段，输出 (..., N_x, 2m+1)"""
    field = np.asarray(field)
    return field[..., stencil_indices(field.shape[-1], m)]


def gather_stencil(field: np.ndarray, i: int, m: int) -> StencilPatch:
    """收集第i点的模板片段（周期回绕）"""
    field = np.asarray(field)
    n = field.shape[-1]
    if 2 * m + 1 > n:
        raise InvalidArgumentError(f"stencil of radius {m} is wider than the grid ({n} points)")
    if not 0 <= i < n:
        raise InvalidArgumentError(f"index {i} outside grid of {n} points")
    return field[(i + np.arange(-m, m + 1)) % n].copy()


def subsample(traj: Trajectory, C_space: int, C_time: int = 1) -> Trajectory:
    """保留每C_space个空间点与每C_time个时间行（从0开始的点采样）"""
    n_x = traj.grid.n_points
    if C_space < 1 or C_time < 1:
        raise InvalidArgumentError("coarse-graining factors must be positive")
    if n_x % C_space != 0:
        raise InvalidArgumentError(f"C_space={C_space} does not divide N_x={n_x}")
    if n_x // C_space < 3:
        raise InvalidArgumentError(f"C_space={C_space} leaves fewer than 3 points")

    truncated = (traj.n_steps - 1) % C_time
    if truncated:
        logger.info(f"时间粗化截断: 丢弃末尾 {truncated} 行 (N_t={traj.n_steps}, C_time={C_time})")

    grid = Grid(length=traj.grid.length, n_points=n_x // C_space, origin=traj.grid.origin)
    meta = dict(traj.meta)
    meta["truncated_rows"] = truncated
    meta["C_space"] = meta.get("C_space", 1) * C_space
    meta["C_time"] = meta.get("C_time", 1) * C_time
    return Trajectory(grid, traj.dt * C_time, traj.data[::C_time, ::C_space], meta)


def crop_time(traj: Trajectory, t_end: float) -> Trajectory:
    """保留 t ≤ t_end 的行"""
    n_keep = int(np.floor(t_end / traj.dt + 1e-9)) + 1
    if n_keep < 1:
        raise InvalidArgumentError(f"crop window t_end={t_end} is empty")
    n_keep = min(n_keep, traj.n_steps)
    meta = dict(traj.meta)
    meta["crop_window"] = (0.0, (n_keep - 1) * traj.dt)
    return Trajectory(traj.grid, traj.dt, traj.data[:n_keep], meta)


def shift(field: np.ndarray, s: int) -> np.ndarray:
    """周期平移s个网格点"""
    return np.roll(field, s, axis=-1)


__all__ = [
    "Grid",
    "Trajectory",
    "StencilPatch",
    "make_grid",
    "stencil_indices",
    "stencil_patches",
    "gather_stencil",
    "subsample",
    "crop_time",
    "shift",
]
