"""
命令共用的路径约定与加载逻辑
"""

import logging
from pathlib import Path
from typing import Optional, Tuple

from ..datagen import Dataset, KnownForcing, load_dataset
from ..errors import ConfigError
from ..grid import Grid
from ..operator import StencilNetModel, load_model
from ..schemas import ExperimentConfig, ModelMetadata, Recipe
from ..storage import write_json

logger = logging.getLogger(__name__)


def output_dir(config: ExperimentConfig) -> Path:
    """输出目录（不存在则创建）"""
    path = Path(config.paths.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def dataset_prefix(recipe: str, C_space: int) -> str:
    return f"{recipe}_C{C_space}"


def dataset_path(config: ExperimentConfig, recipe: Optional[Recipe] = None) -> Path:
    """显式 --dataset，否则为输出目录下的默认粗网格数据集"""
    if config.paths.dataset:
        return Path(config.paths.dataset)
    recipe = recipe or config.resolve_recipe()
    return Path(config.paths.out_dir) / f"{dataset_prefix(recipe.name, recipe.C_space)}.json"


def checkpoint_path(config: ExperimentConfig, dataset: Dataset) -> Path:
    if config.paths.checkpoint:
        return Path(config.paths.checkpoint)
    meta = dataset.metadata
    return Path(config.paths.out_dir) / f"{dataset_prefix(meta.recipe, meta.C_space)}.stnm"


def require_file(path: Path, what: str) -> Path:
    """命令开始前检查输入文件"""
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


def open_dataset(config: ExperimentConfig) -> Tuple[Dataset, Path]:
    path = dataset_path(config)
    meta_path = path if path.suffix == ".json" else path.with_suffix(".json")
    require_file(meta_path, "dataset metadata")
    return load_dataset(path), meta_path


def open_model(config: ExperimentConfig, dataset: Dataset) -> Tuple[StencilNetModel, Optional[ModelMetadata], Path]:
    path = require_file(checkpoint_path(config, dataset), "checkpoint")
    model, metadata = load_model(path)
    return model, metadata, path


def known_forcing(dataset: Dataset, grid: Grid, metadata: Optional[ModelMetadata] = None) -> Optional[KnownForcing]:
    """训练时使用了已知外力的模型在预测时也需要它"""
    if dataset.forcing is None:
        return None
    if metadata is not None and not metadata.known_forcing:
        return None
    return KnownForcing(dataset.forcing, grid)


def write_summary(path: Path, summary: dict) -> Path:
    write_json(path, summary)
    logger.info(f"摘要已写入: {path}")
    return path


__all__ = [
    "output_dir",
    "dataset_prefix",
    "dataset_path",
    "checkpoint_path",
    "require_file",
    "open_dataset",
    "open_model",
    "known_forcing",
    "write_summary",
]
