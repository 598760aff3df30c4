"""
Approximation-error bound check.

Compares top-k sparsification against the exhaustive optimum in spline
space and confirms e_top < o * 2^o * e_opt on randomised trials.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..splines import GridSpec
from .cost_model import CompressionError
from .sparsifiers import OPTIMAL_GUARD, optimal_sparsify, spline_error, topk_sparsify


logger = logging.getLogger(__name__)

ZERO_TOLERANCE = 1e-12


@dataclass
class BoundTrial:
    e_top: float
    e_opt: float
    bound: float
    skipped: bool
    violated: bool

    @property
    def ratio(self) -> Optional[float]:
        return None if self.skipped else self.e_top / self.e_opt


@dataclass
class BoundReport:
    """Outcome of a verification run; violations must be 0."""
    trials: int
    max_ratio_observed: float
    bound: float
    violations: int
    skipped: int = 0
    max_ratio_by_order: Dict[int, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def order_bound(order: int) -> float:
    return float(order * 2 ** order)


def evaluate_trial(c: np.ndarray, k: int, grid: GridSpec) -> BoundTrial:
    """Score one coefficient vector with both sparsifiers on the shared Phi."""
    c = np.asarray(c, dtype=np.float64)
    scale = max(1.0, float(np.linalg.norm(c)))
    e_top = spline_error(c, topk_sparsify(c, k), grid)
    e_opt = spline_error(c, optimal_sparsify(c, k, grid), grid)
    bound = order_bound(grid.order)

    if e_opt <= ZERO_TOLERANCE * scale:
        return BoundTrial(e_top, e_opt, bound, skipped=True, violated=e_top > 1e-9 * scale)
    return BoundTrial(e_top, e_opt, bound, skipped=False, violated=e_top / e_opt >= bound)


def verify_bound(trials: int, g_max: int, o_max: int, seed: int = 0) -> BoundReport:
    """
    Randomised check of e_top < o * 2^o * e_opt.

    Each trial draws o in 1..o_max, g in 1..g_max, k in 0..g-1 and
    c ~ Normal(0, 1) of length g + o on the domain [-1, 1].

    Args:
        trials: Number of trials
        g_max: Largest grid size
        o_max: Largest spline order
        seed: Random seed

    Returns:
        BoundReport with the largest observed ratio
    """
    if g_max < 1 or o_max < 1:
        raise CompressionError("g_max and o_max must be positive")
    if g_max + o_max > OPTIMAL_GUARD:
        raise CompressionError(f"g_max + o_max must not exceed {OPTIMAL_GUARD}")

    rng = np.random.default_rng(seed)
    max_ratio = 0.0
    by_order: Dict[int, float] = {}
    violations = 0
    skipped = 0

    for _ in range(trials):
        order = int(rng.integers(1, o_max + 1))
        g = int(rng.integers(1, g_max + 1))
        k = int(rng.integers(0, g))
        grid = GridSpec(order=order, grid=g)
        c = rng.standard_normal(grid.num_basis)

        trial = evaluate_trial(c, k, grid)
        if trial.violated:
            violations += 1
            logger.warning(
                "Bound violated: o=%d g=%d k=%d e_top=%.3e e_opt=%.3e", order, g, k, trial.e_top, trial.e_opt
            )
        if trial.skipped:
            skipped += 1
            continue
        max_ratio = max(max_ratio, trial.ratio)
        by_order[order] = max(by_order.get(order, 0.0), trial.ratio)

    return BoundReport(
        trials=trials,
        max_ratio_observed=max_ratio,
        bound=order_bound(o_max),
        violations=violations,
        skipped=skipped,
        max_ratio_by_order=dict(sorted(by_order.items()))
    )
