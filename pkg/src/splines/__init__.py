"""
Spline Module

B-spline basis evaluation, SiLU-plus-spline activations and grid extension.
"""

from .bspline import (
    GridSpec,
    SplineEdge,
    SplineError,
    basis_eval,
    basis_derivative,
    basis_matrix,
    basis_derivative_matrix,
    activation_eval,
    spline_eval,
    silu,
    silu_derivative,
    extend_grid,
    refit_coefficients,
    refit_error,
    refit_samples,
    REFIT_RIDGE,
    REFIT_TOLERANCE
)

__all__ = [
    'GridSpec',
    'SplineEdge',
    'SplineError',
    'basis_eval',
    'basis_derivative',
    'basis_matrix',
    'basis_derivative_matrix',
    'activation_eval',
    'spline_eval',
    'silu',
    'silu_derivative',
    'extend_grid',
    'refit_coefficients',
    'refit_error',
    'refit_samples',
    'REFIT_RIDGE',
    'REFIT_TOLERANCE'
]
