"""
Uplink Cost Model and Budget Solver

Bit accounting for one client's upload:
- Dense cost R_u = b * (C0 + sum_i omega_i * g)
- Position-encoding bits per edge, ceil(log2 C(g + o, k))
- Largest retained count k per edge that fits a hard per-round budget
"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from scipy.special import gammaln


EXACT_BINOMIAL_LIMIT = 64
DEFAULT_BITS_PER_COEFF = 32
DEFAULT_MATCH_GRID = 10


class CompressionError(ValueError):
    """Base error of the sparsification codec."""
    pass


class InfeasibleBudgetError(CompressionError):
    """Raised when not even the fixed overhead fits the budget."""
    pass


@dataclass(frozen=True)
class CostModel:
    """
    Parameters of the uplink cost formula.

    fixed_overhead (C0) counts always-sent scalars; by default it is one base
    coefficient per edge.
    """
    bits_per_coeff: int
    fixed_overhead: int
    omegas: Tuple[int, ...]
    order: int

    def __post_init__(self):
        if self.bits_per_coeff < 1:
            raise CompressionError(f"bits_per_coeff must be >= 1, got {self.bits_per_coeff}")
        if self.fixed_overhead < 0:
            raise CompressionError(f"fixed_overhead must be >= 0, got {self.fixed_overhead}")
        omegas = tuple(int(w) for w in self.omegas)
        if not omegas or any(w < 1 for w in omegas):
            raise CompressionError(f"omegas must be positive, got {self.omegas}")
        object.__setattr__(self, "omegas", omegas)

    @property
    def total_edges(self) -> int:
        return sum(self.omegas)

    @classmethod
    def from_widths(
        cls,
        widths: Sequence[int],
        order: int,
        bits_per_coeff: int = DEFAULT_BITS_PER_COEFF
    ) -> "CostModel":
        omegas = tuple(int(widths[i]) * int(widths[i + 1]) for i in range(len(widths) - 1))
        return cls(bits_per_coeff=bits_per_coeff, fixed_overhead=sum(omegas), omegas=omegas, order=order)


@dataclass(frozen=True)
class SparsityPlan:
    """Retained coefficients per edge for one round."""
    retained_per_edge: int
    ratio: float
    grid: int
    total_bits: int

    def __post_init__(self):
        if not 0 <= self.retained_per_edge <= self.grid:
            raise CompressionError(f"k must lie in 0..{self.grid}, got {self.retained_per_edge}")


def uplink_cost(g: int, cm: CostModel) -> int:
    """Dense upload size in bits: b * (C0 + sum_i omega_i * g)."""
    if g < 1:
        raise CompressionError(f"Grid size must be positive, got {g}")
    return cm.bits_per_coeff * (cm.fixed_overhead + cm.total_edges * g)


def match_grid_budget(cm: CostModel, grid: int = DEFAULT_MATCH_GRID) -> int:
    """Budget equal to the dense upload of a model with the given grid size."""
    return uplink_cost(grid, cm)


def exact_position_bits(n: int, k: int) -> int:
    """ceil(log2 C(n, k)) with integer arithmetic."""
    return (math.comb(n, k) - 1).bit_length()


def lgamma_position_bits(n: int, k: int) -> int:
    """ceil(log2 C(n, k)) through log-gamma; integral values are snapped."""
    if k == 0 or k == n:
        return 0
    log2_comb = (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)) / math.log(2.0)
    return int(math.ceil(log2_comb - 1e-9))


def position_bits(g: int, o: int, k: int) -> int:
    """
    Bits needed to identify which k of the g + o coefficients of an edge were kept.

    Args:
        g: Grid interval count
        o: Spline order
        k: Retained coefficients

    Returns:
        ceil(log2 C(g + o, k))
    """
    n = g + o
    if not 0 <= k <= n:
        raise CompressionError(f"k must lie in 0..{n}, got {k}")
    if n <= EXACT_BINOMIAL_LIMIT:
        return exact_position_bits(n, k)
    return lgamma_position_bits(n, k)


def sparse_cost(g: int, cm: CostModel, k: int) -> int:
    """Upload size when every edge keeps k coefficients (payload + positions + overhead)."""
    return (
        cm.bits_per_coeff * (cm.fixed_overhead + k * cm.total_edges)
        + cm.total_edges * position_bits(g, cm.order, k)
    )


def solve_ratio(g: int, cm: CostModel, budget: int) -> SparsityPlan:
    """
    Largest k in 0..g whose sparse upload fits the budget.

    The cost is not monotone in k (position bits peak near (g + o) / 2), so
    candidates are scanned from k = g downwards.
    """
    overhead = cm.bits_per_coeff * cm.fixed_overhead
    if budget < overhead:
        raise InfeasibleBudgetError(f"Budget {budget} bits cannot carry the {overhead}-bit overhead")
    for k in range(g, -1, -1):
        cost = sparse_cost(g, cm, k)
        if cost <= budget:
            return SparsityPlan(retained_per_edge=k, ratio=k / g, grid=g, total_bits=cost)
    raise InfeasibleBudgetError(f"No retained count fits a budget of {budget} bits at g={g}")
