"""
B-Spline Activation Core

Implements the learnable edge activations of a Kolmogorov-Arnold network:
- Uniform extended knot layout per grid (GridSpec)
- Cox-de Boor basis evaluation and its first derivative
- SiLU base term plus B-spline expansion (SplineEdge)
- Grid extension with deterministic ridge least-squares refitting
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Tuple, Union

import numpy as np
from scipy import linalg
from scipy.special import expit


logger = logging.getLogger(__name__)

MAX_ORDER = 5
REFIT_RIDGE = 1e-8
REFIT_SAMPLES_PER_BASIS = 4
REFIT_TOLERANCE = 1e-3

ArrayLike = Union[float, np.ndarray]


class SplineError(ValueError):
    """Raised for invalid grids, non-finite inputs or impossible extensions."""
    pass


@dataclass(frozen=True)
class GridSpec:
    """
    Knot layout of one spline edge.

    Knots are uniform with spacing (b - a) / grid over the domain and extended
    `order` steps beyond each end at the same spacing, giving grid + 2*order + 1
    knots and grid + order basis functions.
    """
    order: int
    grid: int
    domain: Tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if not 1 <= int(self.order) <= MAX_ORDER:
            raise SplineError(f"Spline order must be in 1..{MAX_ORDER}, got {self.order}")
        if int(self.grid) < 1:
            raise SplineError(f"Grid interval count must be positive, got {self.grid}")
        a, b = float(self.domain[0]), float(self.domain[1])
        if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
            raise SplineError(f"Domain must be a finite interval with a < b, got {self.domain}")
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "grid", int(self.grid))
        object.__setattr__(self, "domain", (a, b))

    @property
    def spacing(self) -> float:
        return (self.domain[1] - self.domain[0]) / self.grid

    @property
    def num_basis(self) -> int:
        return self.grid + self.order

    @cached_property
    def knots(self) -> np.ndarray:
        steps = np.arange(-self.order, self.grid + self.order + 1, dtype=np.float64)
        knots = self.domain[0] + self.spacing * steps
        knots.setflags(write=False)
        return knots

    def contains(self, x: ArrayLike) -> np.ndarray:
        """Domain mask: the spline term is active only for a <= x <= b."""
        x = np.asarray(x, dtype=np.float64)
        return (x >= self.domain[0]) & (x <= self.domain[1])

    def with_grid(self, grid: int) -> "GridSpec":
        return GridSpec(order=self.order, grid=grid, domain=self.domain)


@dataclass(frozen=True, eq=False)
class SplineEdge:
    """One learnable activation: base * SiLU(x) + sum_p coeffs[p] * B_p(x)."""
    base: float
    coeffs: np.ndarray
    grid: GridSpec = field(default_factory=lambda: GridSpec(order=3, grid=3))

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.float64).reshape(-1)
        if coeffs.shape[0] != self.grid.num_basis:
            raise SplineError(
                f"Edge needs {self.grid.num_basis} coefficients for g={self.grid.grid}, "
                f"o={self.grid.order}; got {coeffs.shape[0]}"
            )
        base = float(self.base)
        if not np.isfinite(base) or not np.all(np.isfinite(coeffs)):
            raise SplineError("Edge parameters must be finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "coeffs", coeffs)


def _require_finite(x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        raise SplineError("Spline input must be finite")


def _safe_divide(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # 0/0 := 0 so repeated knots do not poison the recursion
    out = np.zeros(np.broadcast(num, den).shape, dtype=np.float64)
    np.divide(num, den, out=out, where=den != 0)
    return out


def _cox_de_boor(xs: np.ndarray, knots: np.ndarray, degree: int) -> np.ndarray:
    """Basis table of the given degree, shape (len(xs), len(knots) - degree - 1)."""
    x = xs[:, None]
    m = knots.shape[0]
    table = ((knots[:-1] <= x) & (x < knots[1:])).astype(np.float64)
    for d in range(1, degree + 1):
        nb = m - d - 1
        left = _safe_divide(x - knots[:nb], knots[d:d + nb] - knots[:nb]) * table[:, :nb]
        right = _safe_divide(
            knots[d + 1:d + 1 + nb] - x, knots[d + 1:d + 1 + nb] - knots[1:1 + nb]
        ) * table[:, 1:nb + 1]
        table = left + right
    return table


def basis_matrix(xs: ArrayLike, grid: GridSpec) -> np.ndarray:
    """
    Evaluate every basis function at every point.

    Args:
        xs: Points (any shape, flattened)
        grid: Knot layout

    Returns:
        Array of shape (n_points, grid + order)
    """
    xs = np.asarray(xs, dtype=np.float64).reshape(-1)
    _require_finite(xs)
    return _cox_de_boor(xs, grid.knots, grid.order)


def basis_derivative_matrix(xs: ArrayLike, grid: GridSpec) -> np.ndarray:
    """
    First derivative of every basis function at every point.

    Uses dB_{p,o}/dx = o * (B_{p,o-1} / (t_{p+o} - t_p) - B_{p+1,o-1} / (t_{p+o+1} - t_{p+1})).
    """
    xs = np.asarray(xs, dtype=np.float64).reshape(-1)
    _require_finite(xs)
    knots = grid.knots
    o = grid.order
    nb = grid.num_basis
    lower = _cox_de_boor(xs, knots, o - 1)
    left = _safe_divide(lower[:, :nb], knots[o:o + nb] - knots[:nb])
    right = _safe_divide(lower[:, 1:nb + 1], knots[o + 1:o + 1 + nb] - knots[1:1 + nb])
    return o * (left - right)


def basis_eval(x: float, grid: GridSpec) -> np.ndarray:
    """[B_0(x), ..., B_{g+o-1}(x)] by the Cox-de Boor recursion."""
    return basis_matrix(np.array([x], dtype=np.float64), grid)[0]


def basis_derivative(x: float, grid: GridSpec) -> np.ndarray:
    """[B_0'(x), ..., B_{g+o-1}'(x)]."""
    return basis_derivative_matrix(np.array([x], dtype=np.float64), grid)[0]


def silu(x: ArrayLike) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x * expit(x)


def silu_derivative(x: ArrayLike) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    sig = expit(x)
    return sig + x * sig * (1.0 - sig)


def spline_eval(xs: ArrayLike, edge: SplineEdge) -> np.ndarray:
    """Vectorised activation_eval; the spline term is masked outside the domain."""
    xs = np.asarray(xs, dtype=np.float64).reshape(-1)
    basis = basis_matrix(xs, edge.grid)
    spline = (basis @ edge.coeffs) * edge.grid.contains(xs)
    return edge.base * silu(xs) + spline


def activation_eval(x: float, edge: SplineEdge) -> float:
    """phi(x) = base * x * sigmoid(x) + sum_p c_p B_p(x)."""
    return float(spline_eval(np.array([x], dtype=np.float64), edge)[0])


def refit_samples(grid: GridSpec) -> np.ndarray:
    """Deterministic equispaced sample grid used when refitting onto `grid`."""
    a, b = grid.domain
    return np.linspace(a, b, REFIT_SAMPLES_PER_BASIS * grid.num_basis)


def refit_coefficients(
    coeffs: np.ndarray,
    old_grid: GridSpec,
    new_grid_size: int,
    ridge: float = REFIT_RIDGE
) -> np.ndarray:
    """
    Refit spline coefficients of many edges onto a finer grid.

    Solves min ||B_new c' - B_old c||^2 + ridge * ||c'||^2 on the sample grid
    of the new layout, followed by one step of iterative refinement so that
    functions in the new span are reproduced to round-off.

    Args:
        coeffs: Array (n_edges, old g + o) of spline coefficients
        old_grid: Layout the coefficients belong to
        new_grid_size: Target interval count (must exceed the old one)
        ridge: Tikhonov weight

    Returns:
        Array (n_edges, new g + o)
    """
    if new_grid_size <= old_grid.grid:
        raise SplineError(
            f"Grid extension needs new_g > {old_grid.grid}, got {new_grid_size}"
        )
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim != 2 or coeffs.shape[1] != old_grid.num_basis:
        raise SplineError(f"Expected coefficient matrix with {old_grid.num_basis} columns")

    new_grid = old_grid.with_grid(new_grid_size)
    xs = refit_samples(new_grid)
    targets = basis_matrix(xs, old_grid) @ coeffs.T
    design = basis_matrix(xs, new_grid)
    normal = design.T @ design
    rhs = design.T @ targets

    try:
        factor = linalg.cho_factor(normal + ridge * np.eye(normal.shape[0]))
        solution = linalg.cho_solve(factor, rhs)
        solution = solution + linalg.cho_solve(factor, rhs - normal @ solution)
    except linalg.LinAlgError as e:
        raise SplineError(f"Refit system is singular: {e}") from e

    return np.ascontiguousarray(solution.T)


def refit_error(old: SplineEdge, new: SplineEdge) -> Tuple[float, float]:
    """
    Fidelity of a refit on the new grid's sample points.

    Returns:
        (max |old spline - new spline|, max |old spline|)
    """
    xs = refit_samples(new.grid)
    before = basis_matrix(xs, old.grid) @ old.coeffs
    after = basis_matrix(xs, new.grid) @ new.coeffs
    return float(np.max(np.abs(before - after))), float(np.max(np.abs(before)))


def extend_grid(edge: SplineEdge, new_g: int) -> SplineEdge:
    """
    Extend an edge to a finer grid over the same domain.

    The base coefficient is copied; spline coefficients are refit
    deterministically, so identical inputs give identical outputs on every client.
    """
    coeffs = refit_coefficients(edge.coeffs[None, :], edge.grid, new_g)[0]
    extended = SplineEdge(base=edge.base, coeffs=coeffs, grid=edge.grid.with_grid(new_g))

    deviation, scale = refit_error(edge, extended)
    if deviation > REFIT_TOLERANCE * (1.0 + scale):
        logger.warning(
            "Grid extension %d -> %d deviates by %.3e (scale %.3e)",
            edge.grid.grid, new_g, deviation, scale
        )
    return extended
