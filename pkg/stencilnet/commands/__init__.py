"""
命令行各子命令的实现
"""

from .bench import cmd_bench
from .evaluate import cmd_evaluate
from .generate import cmd_generate
from .predict import cmd_denoise, cmd_predict
from .train import cmd_train

__all__ = ["cmd_generate", "cmd_train", "cmd_predict", "cmd_denoise", "cmd_evaluate", "cmd_bench"]
