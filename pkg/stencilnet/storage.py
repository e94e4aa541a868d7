"""
文件存储模块
STN1 轨迹、STNM 检查点、JSON 元数据与 CSV 表格的读写
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Type, TypeVar, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from .config import MODEL_FORMAT_VERSION, MODEL_MAGIC, TRAJECTORY_MAGIC
from .errors import StorageError
from .grid import Grid, Trajectory
from .neural.mlp import MlpParams

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
ModelT = TypeVar("ModelT", bound=BaseModel)

# magic, N_x, N_t, L, dt
_TRAJECTORY_HEADER = struct.Struct("<4sQQdd")
# magic, version, m, 层数
_MODEL_HEADER = struct.Struct("<4sIII")
_LAYER_HEADER = struct.Struct("<II")
_RESOLUTION = struct.Struct("<dd")


def sidecar_path(path: PathLike) -> Path:
    """二进制文件对应的JSON附属文件路径"""
    return Path(path).with_suffix(".json")


def _read_bytes(path: PathLike) -> bytes:
    path = Path(path)
    if not path.is_file():
        raise StorageError(f"file not found: {path}")
    try:
        return path.read_bytes()
    except OSError as e:
        raise StorageError(f"cannot read {path}: {e}") from e


def _write_bytes(path: PathLike, payload: bytes) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}") from e


# 轨迹文件
def write_trajectory(path: PathLike, traj: Trajectory) -> Path:
    """写入STN1轨迹文件"""
    n_t, n_x = traj.shape
    header = _TRAJECTORY_HEADER.pack(TRAJECTORY_MAGIC, n_x, n_t, traj.grid.length, traj.dt)
    body = np.ascontiguousarray(traj.data, dtype="<f8").tobytes()
    _write_bytes(path, header + body)
    logger.debug(f"轨迹已写入: {path} ({n_t}×{n_x})")
    return Path(path)


def read_trajectory(path: PathLike, origin: float = 0.0, meta: Optional[Dict[str, Any]] = None) -> Trajectory:
    """读取STN1轨迹文件，校验magic与数据长度"""
    raw = _read_bytes(path)
    if len(raw) < _TRAJECTORY_HEADER.size:
        raise StorageError(f"{path}: truncated trajectory header")
    magic, n_x, n_t, length, dt = _TRAJECTORY_HEADER.unpack_from(raw)
    if magic != TRAJECTORY_MAGIC:
        raise StorageError(f"{path}: bad magic {magic!r}, expected {TRAJECTORY_MAGIC!r}")
    expected = _TRAJECTORY_HEADER.size + 8 * n_t * n_x
    if len(raw) != expected:
        raise StorageError(f"{path}: size {len(raw)} bytes does not match header ({expected} bytes)")
    data = np.frombuffer(raw, dtype="<f8", offset=_TRAJECTORY_HEADER.size).reshape(n_t, n_x)
    try:
        grid = Grid(length=length, n_points=n_x, origin=origin)
        return Trajectory(grid, dt, data, meta)
    except (ValueError, ValidationError) as e:
        raise StorageError(f"{path}: invalid trajectory contents: {e}") from e


# 模型检查点
def write_checkpoint(path: PathLike, theta: MlpParams, m: int, dx: float, dt: float) -> Path:
    """写入STNM检查点"""
    chunks = [_MODEL_HEADER.pack(MODEL_MAGIC, MODEL_FORMAT_VERSION, m, len(theta.layers))]
    for W, b in theta.layers:
        chunks.append(_LAYER_HEADER.pack(*W.shape))
        chunks.append(np.ascontiguousarray(W, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    chunks.append(_RESOLUTION.pack(dx, dt))
    _write_bytes(path, b"".join(chunks))
    logger.debug(f"检查点已写入: {path}")
    return Path(path)


def read_checkpoint(path: PathLike, activation: str = "elu") -> Tuple[MlpParams, int, float, float]:
    """读取STNM检查点，返回 (θ, m, dx, dt)"""
    raw = _read_bytes(path)
    try:
        magic, version, m, n_layers = _MODEL_HEADER.unpack_from(raw)
        if magic != MODEL_MAGIC:
            raise StorageError(f"{path}: bad magic {magic!r}, expected {MODEL_MAGIC!r}")
        if version != MODEL_FORMAT_VERSION:
            raise StorageError(f"{path}: unsupported checkpoint version {version}")
        offset = _MODEL_HEADER.size
        layers = []
        for _ in range(n_layers):
            rows, cols = _LAYER_HEADER.unpack_from(raw, offset)
            offset += _LAYER_HEADER.size
            W = np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols)
            offset += 8 * rows * cols
            b = np.frombuffer(raw, dtype="<f8", count=rows, offset=offset)
            offset += 8 * rows
            layers.append((W, b))
        dx, dt = _RESOLUTION.unpack_from(raw, offset)
        offset += _RESOLUTION.size
    except (struct.error, ValueError) as e:
        raise StorageError(f"{path}: truncated checkpoint: {e}") from e
    if offset != len(raw):
        raise StorageError(f"{path}: {len(raw) - offset} trailing bytes after checkpoint payload")
    try:
        theta = MlpParams(layers, activation)
    except ValueError as e:
        raise StorageError(f"{path}: inconsistent layer shapes: {e}") from e
    return theta, m, dx, dt


# JSON / CSV
def write_json(path: PathLike, payload: Union[BaseModel, Dict[str, Any]]) -> Path:
    """写入JSON（pydantic模型或字典）"""
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        text = json.dumps(payload, indent=2, ensure_ascii=False, default=str)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}") from e
    return path


def read_json(path: PathLike, model: Optional[Type[ModelT]] = None):
    """读取JSON，可选地按pydantic模型校验"""
    path = Path(path)
    if not path.is_file():
        raise StorageError(f"file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
        if model is None:
            return json.loads(text)
        return model.model_validate_json(text)
    except (OSError, json.JSONDecodeError) as e:
        raise StorageError(f"cannot read {path}: {e}") from e
    except ValidationError as e:
        raise StorageError(f"{path}: invalid metadata: {e}") from e


def write_csv(path: PathLike, table: pd.DataFrame) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(path, index=False)
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}") from e
    return path


__all__ = [
    "sidecar_path",
    "write_trajectory",
    "read_trajectory",
    "write_checkpoint",
    "read_checkpoint",
    "write_json",
    "read_json",
    "write_csv",
]
