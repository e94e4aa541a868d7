"""
经典参考数值方法
"""

from .finite_difference import FdStencil, achieved_order, centered_offsets, fd_weights
from .simulate import auto_dt, default_scheme, reference_rhs, simulate, wave_speed
from .spectral import (
    EtdRk4Stepper,
    dealias_mask,
    spectral_linear_symbol,
    spectral_nonlinear,
    spectral_rhs,
    spectral_step_etdrk4,
    wavenumbers,
)
from .time_stepping import cfl_dt, rk3_tvd_step
from .weno import (
    WenoWorkspace,
    heat_rhs,
    smoothness_indicator_quadrature,
    weno5_reconstruct,
    weno5_workspace,
    weno_flux_derivative,
    weno_rhs_advection,
    weno_rhs_burgers,
)

__all__ = [
    "FdStencil",
    "fd_weights",
    "centered_offsets",
    "achieved_order",
    "simulate",
    "reference_rhs",
    "auto_dt",
    "wave_speed",
    "default_scheme",
    "EtdRk4Stepper",
    "spectral_step_etdrk4",
    "spectral_linear_symbol",
    "spectral_nonlinear",
    "spectral_rhs",
    "wavenumbers",
    "dealias_mask",
    "rk3_tvd_step",
    "cfl_dt",
    "WenoWorkspace",
    "weno5_workspace",
    "weno5_reconstruct",
    "smoothness_indicator_quadrature",
    "weno_flux_derivative",
    "weno_rhs_burgers",
    "weno_rhs_advection",
    "heat_rhs",
]
