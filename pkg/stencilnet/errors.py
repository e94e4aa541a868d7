"""
异常定义
每个异常携带退出码，由命令行统一处理
"""

from typing import Any, Optional

from .config import EXIT_CONFIG_ERROR, EXIT_IO_ERROR, EXIT_NUMERICAL_ERROR


class StencilNetError(Exception):
    """基础异常"""

    exit_code: int = 1


class InvalidArgumentError(StencilNetError, ValueError):
    """参数非法"""

    exit_code = EXIT_CONFIG_ERROR


class ConfigError(StencilNetError):
    """配置错误（在计算开始前检测）"""

    exit_code = EXIT_CONFIG_ERROR


class ResolutionMismatchError(InvalidArgumentError):
    """模型与网格分辨率不一致"""

    def __init__(self, trained_dx: float, grid_dx: float):
        self.trained_dx = trained_dx
        self.grid_dx = grid_dx
        super().__init__(
            f"resolution mismatch: model trained at dx={trained_dx:.10g}, grid has dx={grid_dx:.10g}; "
            "learned stencils are specific to the grid resolution they were trained on"
        )


class NumericalError(StencilNetError, ArithmeticError):
    """数值失败"""

    exit_code = EXIT_NUMERICAL_ERROR


class BlowUpError(NumericalError):
    """解发散"""

    def __init__(self, message: str, time: Optional[float] = None, step: Optional[int] = None):
        self.time = time
        self.step = step
        super().__init__(message)


class TrainingError(NumericalError):
    """训练发散（NaN损失）"""

    def __init__(self, message: str, epoch: int, history: Any = None):
        self.epoch = epoch
        self.history = history
        super().__init__(message)


class TapeError(NumericalError):
    """反向模式记录回放不一致"""


class StorageError(StencilNetError, OSError):
    """文件读写错误"""

    exit_code = EXIT_IO_ERROR


__all__ = [
    "StencilNetError",
    "InvalidArgumentError",
    "ConfigError",
    "ResolutionMismatchError",
    "NumericalError",
    "BlowUpError",
    "TrainingError",
    "TapeError",
    "StorageError",
]
