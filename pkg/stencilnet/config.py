# stencilnet/config.py - 全局配置
import math
from functools import lru_cache
from typing import Any, Dict, List, Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """应用设置"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="STENCILNET_",
        case_sensitive=True,
        extra="ignore",
    )

    # 应用基础设置
    APP_NAME: str = "stencilnet"
    APP_VERSION: str = "1.0.0"

    # 日志设置
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None

    # 输出与并行
    OUTPUT_DIR: str = "./runs"
    THREADS: Optional[int] = None
    DEFAULT_SEED: int = 20210501

    # 数值保护
    BLOWUP_THRESHOLD: float = 1e6
    CFL_SAFETY: float = 0.9


@lru_cache()
def get_settings() -> Settings:
    """获取设置实例"""
    return Settings()


settings = get_settings()

# WENO常量（Jiang–Shu）
WENO_EPS = 1e-6
WENO_POWER = 2
WENO_OPTIMAL_WEIGHTS = (0.1, 0.6, 0.3)

# ETDRK4 围道积分点数
ETDRK4_CONTOUR_POINTS = 32

# 网络与训练默认值
DEFAULT_STENCIL_RADIUS = 3
DEFAULT_HIDDEN = [64, 64, 64]
DEFAULT_TRAIN = {
    "q": 4,
    "gamma": 0.9,
    "lambda_n": 1e-5,
    "lambda_wd": 1e-8,
    "epochs": 200,
    "batch_size": 1024,
    "lr": 1e-3,
    "lr_decay": 1.0,
}

# 文件格式
TRAJECTORY_MAGIC = b"STN1"
MODEL_MAGIC = b"STNM"
MODEL_FORMAT_VERSION = 1

# 退出码
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3
EXIT_IO_ERROR = 4

# 基准问题预设（数据生成与训练条件）
RECIPES: Dict[str, Dict[str, Any]] = {
    "burgers": {
        "kind": "forced_burgers",
        "L": 2 * math.pi,
        "n_points": 256,
        "origin": 0.0,
        "D": 0.02,
        "scheme": "weno_rk3",
        "dt": None,
        "T": 40.0,
        "T_train": 40.0,
        "C_space": 4,
        "C_time": None,
        "train_dt": None,
        "sigma": 0.0,
        "coarse_variants": [2, 4, 8],
        "forcing": True,
    },
    "ks": {
        "kind": "ks",
        "L": 64.0,
        "n_points": 256,
        "origin": -32.0,
        "scheme": "spectral",
        "dt": 0.05,
        "T": 50.0,
        "T_train": 50.0,
        "C_space": 4,
        "C_time": None,
        "train_dt": None,
        "sigma": 0.0,
        "coarse_variants": [4],
        "forcing": False,
    },
    "kdv": {
        "kind": "kdv",
        "L": 2.0,
        "n_points": 256,
        "origin": -1.0,
        "delta": 0.0025,
        "scheme": "spectral",
        "dt": 5e-4,
        "T": 1.0,
        "T_train": 1.0,
        "C_space": 8,
        "C_time": None,
        "train_dt": 0.02,
        "sigma": 0.3,
        "coarse_variants": [8],
        "forcing": False,
    },
    "heat": {
        "kind": "heat",
        "L": 2 * math.pi,
        "n_points": 64,
        "origin": 0.0,
        "D": 0.1,
        "scheme": "weno_rk3",
        "dt": None,
        "T": 2.0,
        "T_train": 2.0,
        "C_space": 1,
        "C_time": 1,
        "train_dt": None,
        "sigma": 0.0,
        "coarse_variants": [1],
        "forcing": False,
    },
    "advection": {
        "kind": "advection",
        "L": 6.0,
        "n_points": 200,
        "origin": 0.0,
        "c": 2.0,
        "scheme": "weno_rk3",
        "dt": None,
        "T": 3.0,
        "T_train": 3.0,
        "C_space": 1,
        "C_time": 1,
        "train_dt": None,
        "sigma": 0.0,
        "coarse_variants": [1],
        "forcing": False,
    },
}


def get_recipe_names() -> List[str]:
    """获取支持的预设名称"""
    return list(RECIPES.keys())


__all__ = ["Settings", "settings", "get_settings", "RECIPES", "get_recipe_names"]
