"""Blind camera-shake deblurring by incremental sparse edge approximation."""

from .core import delta_kernel, gradient_field, l1_l2_ratio, l20_count, magnitude_map
from .nonblind import NonblindConfig, deconvolve_irls, deconvolve_quadratic
from .pyramid import build_ladder, run_pyramid
from .solver import SolverConfig, solve_scale

__all__ = [
    "NonblindConfig",
    "SolverConfig",
    "build_ladder",
    "deconvolve_irls",
    "deconvolve_quadratic",
    "delta_kernel",
    "gradient_field",
    "l1_l2_ratio",
    "l20_count",
    "magnitude_map",
    "run_pyramid",
    "solve_scale",
]
