"""
Coefficient Sparsifiers

Selects which k of an edge's g + o spline coefficients are transmitted:
- top-k by magnitude (closest k-sparse vector in coefficient space)
- brute-force optimal support in spline-function space
- random and fixed (leading-k) baselines
"""

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np

from ..splines import GridSpec, basis_matrix
from .cost_model import CompressionError


OPTIMAL_GUARD = 24
EVALUATION_POINTS = 256
_CHUNK = 4096


class CombinatorialGuardError(CompressionError):
    """Raised when exhaustive search would enumerate too many supports."""
    pass


class SparsifierKind(Enum):
    TOP_K = "top-k"
    RANDOM = "random"
    FIXED = "fixed"
    OPTIMAL = "optimal"


@dataclass(eq=False)
class SparseSet:
    """Retained (index, value) pairs of one coefficient vector of the given length."""
    indices: np.ndarray
    values: np.ndarray
    length: int

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if self.indices.shape != self.values.shape:
            raise CompressionError("Indices and values must have the same length")
        if self.indices.size and (
            np.any(np.diff(self.indices) <= 0) or self.indices[0] < 0 or self.indices[-1] >= self.length
        ):
            raise CompressionError("Indices must be strictly increasing and within range")

    @property
    def k(self) -> int:
        return int(self.indices.size)

    def as_pairs(self):
        return [(int(i), float(v)) for i, v in zip(self.indices, self.values)]

    def densify(self, fill: Optional[np.ndarray] = None) -> np.ndarray:
        out = np.zeros(self.length) if fill is None else np.array(fill, dtype=np.float64)
        out[self.indices] = self.values
        return out


@dataclass
class EvaluationCounter:
    """Counts support evaluations performed by the exhaustive search."""
    count: int = 0

    def add(self, n: int) -> None:
        self.count += n


def _check_k(n: int, k: int) -> None:
    if not 0 <= k <= n:
        raise CompressionError(f"k must lie in 0..{n}, got {k}")


def _from_support(c: np.ndarray, support: np.ndarray) -> SparseSet:
    support = np.sort(np.asarray(support, dtype=np.int64))
    return SparseSet(support, c[support], c.shape[0])


def topk_sparsify(c: np.ndarray, k: int) -> SparseSet:
    """The k largest-magnitude coefficients; ties go to the lower index."""
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    _check_k(c.shape[0], k)
    order = np.argsort(-np.abs(c), kind="stable")
    return _from_support(c, order[:k])


def topk_supports(coeffs: np.ndarray, k: int) -> np.ndarray:
    """Row-wise top-k supports of an (edges, g + o) matrix, sorted per row."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    _check_k(coeffs.shape[1], k)
    order = np.argsort(-np.abs(coeffs), axis=1, kind="stable")[:, :k]
    return np.sort(order, axis=1)


def fixed_sparsify(c: np.ndarray, k: int) -> SparseSet:
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    _check_k(c.shape[0], k)
    return _from_support(c, np.arange(k))


def random_sparsify(c: np.ndarray, k: int, seed: int = 0) -> SparseSet:
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    _check_k(c.shape[0], k)
    rng = np.random.default_rng(seed)
    return _from_support(c, rng.choice(c.shape[0], size=k, replace=False))


@lru_cache(maxsize=256)
def evaluation_matrix(grid: GridSpec) -> np.ndarray:
    """Basis rows at 256 equispaced points over the grid's domain."""
    a, b = grid.domain
    phi = basis_matrix(np.linspace(a, b, EVALUATION_POINTS), grid)
    phi.setflags(write=False)
    return phi


@lru_cache(maxsize=256)
def _gram(grid: GridSpec) -> np.ndarray:
    phi = evaluation_matrix(grid)
    gram = phi.T @ phi
    gram.setflags(write=False)
    return gram


def spline_error(c: np.ndarray, sparse: SparseSet, grid: GridSpec) -> float:
    """||Phi (c - c')||_2 with c' the sparse vector."""
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    if c.shape[0] != grid.num_basis or sparse.length != grid.num_basis:
        raise CompressionError("Coefficient length does not match the grid")
    residual = c - sparse.densify()
    return float(np.linalg.norm(evaluation_matrix(grid) @ residual))


def optimal_sparsify(
    c: np.ndarray,
    k: int,
    grid: GridSpec,
    counter: Optional[EvaluationCounter] = None
) -> SparseSet:
    """
    Exhaustive search for the support minimising ||Phi (c - c')||_2.

    Every one of the C(g + o, k) supports is scored; retained values are the
    original coefficients. Ties resolve to the lexicographically smallest support.

    Args:
        c: Coefficients of one edge
        k: Support size
        grid: Layout defining Phi
        counter: Optional counter of evaluated supports

    Returns:
        Optimal SparseSet
    """
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    n = c.shape[0]
    if n != grid.num_basis:
        raise CompressionError("Coefficient length does not match the grid")
    _check_k(n, k)
    if n > OPTIMAL_GUARD:
        raise CombinatorialGuardError(
            f"Exhaustive search over g + o = {n} > {OPTIMAL_GUARD} coefficients; use topk_sparsify"
        )

    gram = _gram(grid)
    supports = itertools.combinations(range(n), k)
    best_score = np.inf
    best_support = None

    while True:
        chunk = list(itertools.islice(supports, _CHUNK))
        if not chunk:
            break
        index = np.array(chunk, dtype=np.int64).reshape(len(chunk), k)
        residual = np.repeat(c[None, :], len(chunk), axis=0)
        residual[np.arange(len(chunk))[:, None], index] = 0.0
        scores = np.einsum("ij,jk,ik->i", residual, gram, residual)
        position = int(np.argmin(scores))
        if scores[position] < best_score:
            best_score = scores[position]
            best_support = index[position]
        if counter is not None:
            counter.add(len(chunk))

    return _from_support(c, best_support)


def sparsify_vector(
    c: np.ndarray,
    k: int,
    kind: SparsifierKind,
    grid: Optional[GridSpec] = None,
    seed: int = 0
) -> SparseSet:
    """Dispatch to the requested sparsifier."""
    if kind is SparsifierKind.TOP_K:
        return topk_sparsify(c, k)
    if kind is SparsifierKind.FIXED:
        return fixed_sparsify(c, k)
    if kind is SparsifierKind.RANDOM:
        return random_sparsify(c, k, seed)
    if grid is None:
        raise CompressionError("Optimal sparsification needs the edge grid")
    return optimal_sparsify(c, k, grid)
