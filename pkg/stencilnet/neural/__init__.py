"""
神经网络组件
"""

from .adam import AdamState, adam_step
from .mlp import (
    MlpParams,
    elu,
    infinity_norm_product,
    init_mlp,
    linear_stencil_params,
    mlp_forward,
    mlp_forward_batch,
    mlp_forward_taped,
    relu,
    taped_params,
)
from .spike import SpikeFitResult, spike_fit_demo, spike_function
from .tape import Tape, Variable, finite_difference_directional, finite_difference_gradient, grad, relative_error

__all__ = [
    "AdamState",
    "adam_step",
    "MlpParams",
    "elu",
    "relu",
    "init_mlp",
    "linear_stencil_params",
    "mlp_forward",
    "mlp_forward_batch",
    "mlp_forward_taped",
    "taped_params",
    "infinity_norm_product",
    "SpikeFitResult",
    "spike_fit_demo",
    "spike_function",
    "Tape",
    "Variable",
    "grad",
    "finite_difference_gradient",
    "finite_difference_directional",
    "relative_error",
]
