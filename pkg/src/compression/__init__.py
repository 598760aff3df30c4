"""
Compression Module

Uplink cost model, budget-constrained ratio solver, coefficient sparsifiers,
bit-exact payload codec and the top-k versus optimal error-bound verifier.
"""

from .cost_model import (
    CostModel,
    SparsityPlan,
    CompressionError,
    InfeasibleBudgetError,
    uplink_cost,
    match_grid_budget,
    position_bits,
    exact_position_bits,
    lgamma_position_bits,
    sparse_cost,
    solve_ratio,
    EXACT_BINOMIAL_LIMIT
)
from .sparsifiers import (
    SparseSet,
    SparsifierKind,
    EvaluationCounter,
    CombinatorialGuardError,
    topk_sparsify,
    topk_supports,
    optimal_sparsify,
    random_sparsify,
    fixed_sparsify,
    sparsify_vector,
    spline_error,
    evaluation_matrix,
    OPTIMAL_GUARD
)
from .codec import (
    SparsePayload,
    EncodedPayload,
    BitWriter,
    BitReader,
    PayloadDecodeError,
    encode,
    decode,
    combination_rank,
    combination_unrank,
    quantize_values,
    sparsify_network,
    densify,
    HEADER_BITS
)
from .bound_verifier import (
    BoundReport,
    BoundTrial,
    verify_bound,
    evaluate_trial,
    order_bound
)


def create_cost_model(widths, order: int = 3, bits_per_coeff: int = 32) -> CostModel:
    """
    Create the cost model of a network shape.

    Args:
        widths: Network widths [n_0, ..., n_L]
        order: Spline order
        bits_per_coeff: Bits per transmitted scalar

    Returns:
        CostModel with C0 equal to the edge count
    """
    return CostModel.from_widths(widths, order, bits_per_coeff)


__all__ = [
    'CostModel',
    'SparsityPlan',
    'CompressionError',
    'InfeasibleBudgetError',
    'uplink_cost',
    'match_grid_budget',
    'position_bits',
    'exact_position_bits',
    'lgamma_position_bits',
    'sparse_cost',
    'solve_ratio',
    'EXACT_BINOMIAL_LIMIT',
    'SparseSet',
    'SparsifierKind',
    'EvaluationCounter',
    'CombinatorialGuardError',
    'topk_sparsify',
    'topk_supports',
    'optimal_sparsify',
    'random_sparsify',
    'fixed_sparsify',
    'sparsify_vector',
    'spline_error',
    'evaluation_matrix',
    'OPTIMAL_GUARD',
    'SparsePayload',
    'EncodedPayload',
    'BitWriter',
    'BitReader',
    'PayloadDecodeError',
    'encode',
    'decode',
    'combination_rank',
    'combination_unrank',
    'quantize_values',
    'sparsify_network',
    'densify',
    'HEADER_BITS',
    'BoundReport',
    'BoundTrial',
    'verify_bound',
    'evaluate_trial',
    'order_bound',
    'create_cost_model'
]
