"""
Sparse Payload Codec

Bit-exact wire format for one client's sparsified upload.

Header: five u32 fields (g, o, k, round, client-id), 160 bits, not counted in
the payload budget. Body, per edge in canonical network order:

    [base coefficient: b bits][support rank: ceil(log2 C(g+o, k)) bits][k values: k*b bits]

The support is packed as its rank in the combinatorial number system. Values
are IEEE floats of width b (16, 32 or 64); bits are written MSB first and the
stream is zero-padded to a whole byte.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from ..kan import ParamLayout, ParamVector
from .cost_model import CompressionError, position_bits
from .sparsifiers import SparsifierKind, optimal_sparsify, random_sparsify, topk_supports, fixed_sparsify


HEADER_FIELDS = 5
HEADER_BITS = 32 * HEADER_FIELDS

_FLOAT_TYPES = {
    16: (np.dtype("<f2"), np.dtype("<u2")),
    32: (np.dtype("<f4"), np.dtype("<u4")),
    64: (np.dtype("<f8"), np.dtype("<u8"))
}


class PayloadDecodeError(CompressionError):
    """Raised when a byte stream is not a valid payload."""
    pass


def _float_types(bits: int):
    if bits not in _FLOAT_TYPES:
        raise CompressionError(f"Unsupported value width {bits}; use one of {sorted(_FLOAT_TYPES)}")
    return _FLOAT_TYPES[bits]


def quantize_values(values: np.ndarray, bits: int) -> np.ndarray:
    """Round values to the b-bit float the wire carries."""
    float_type, _ = _float_types(bits)
    return np.asarray(values, dtype=np.float64).astype(float_type).astype(np.float64)


def combination_rank(support: Sequence[int]) -> int:
    """Rank of a sorted support: sum_i C(c_i, i + 1)."""
    return sum(math.comb(int(c), i + 1) for i, c in enumerate(support))


def combination_unrank(rank: int, n: int, k: int) -> Tuple[int, ...]:
    """Inverse of combination_rank for supports drawn from range(n)."""
    if not 0 <= rank < math.comb(n, k):
        raise PayloadDecodeError(f"Rank {rank} is outside 0..C({n},{k})-1")
    support = []
    upper = n - 1
    for i in range(k, 0, -1):
        c = upper
        while math.comb(c, i) > rank:
            c -= 1
        support.append(c)
        rank -= math.comb(c, i)
        upper = c - 1
    return tuple(reversed(support))


class BitWriter:
    """Accumulates an MSB-first bit stream."""

    def __init__(self):
        self._acc = 0
        self.bits = 0

    def write(self, value: int, width: int) -> None:
        if width == 0:
            return
        if value < 0 or value >> width:
            raise CompressionError(f"Value {value} does not fit in {width} bits")
        self._acc = (self._acc << width) | value
        self.bits += width

    def to_bytes(self) -> bytes:
        pad = (-self.bits) % 8
        return (self._acc << pad).to_bytes((self.bits + pad) // 8, "big")


class BitReader:
    """Reads fields back from an MSB-first bit stream."""

    def __init__(self, data: bytes):
        self._acc = int.from_bytes(data, "big")
        self.total = 8 * len(data)
        self.position = 0

    def read(self, width: int) -> int:
        if width == 0:
            return 0
        if self.position + width > self.total:
            raise PayloadDecodeError("Payload truncated")
        shift = self.total - self.position - width
        self.position += width
        return (self._acc >> shift) & ((1 << width) - 1)


@dataclass(eq=False)
class SparsePayload:
    """
    One client's sparsified upload.

    bases: (E,) base coefficients, always sent
    indices: (E, k) strictly increasing retained positions per edge
    values: (E, k) retained coefficient values
    """
    grid: int
    order: int
    k: int
    bits_per_coeff: int
    bases: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    round_index: int = 0
    client_id: int = 0

    def __post_init__(self):
        self.bases = np.asarray(self.bases, dtype=np.float64).reshape(-1)
        edges = self.bases.shape[0]
        self.indices = np.asarray(self.indices, dtype=np.int64).reshape(edges, self.k)
        self.values = np.asarray(self.values, dtype=np.float64).reshape(edges, self.k)
        n = self.grid + self.order
        if not 0 <= self.k <= n:
            raise CompressionError(f"k must lie in 0..{n}, got {self.k}")
        _float_types(self.bits_per_coeff)
        if self.k and (
            np.any(np.diff(self.indices, axis=1) <= 0)
            or self.indices.min() < 0
            or self.indices.max() >= n
        ):
            raise CompressionError("Retained indices must be strictly increasing and within 0..g+o-1")

    @property
    def edge_count(self) -> int:
        return int(self.bases.shape[0])

    @property
    def payload_bits(self) -> int:
        return self.bits_per_coeff * self.k * self.edge_count

    @property
    def position_bits(self) -> int:
        return self.edge_count * position_bits(self.grid, self.order, self.k)

    @property
    def overhead_bits(self) -> int:
        return self.bits_per_coeff * self.edge_count

    @property
    def total_bits(self) -> int:
        return self.payload_bits + self.position_bits + self.overhead_bits


@dataclass(frozen=True)
class EncodedPayload:
    """Wire bytes plus the number of body bits the writer emitted."""
    data: bytes
    body_bits: int
    header_bits: int = HEADER_BITS

    def __bytes__(self) -> bytes:
        return self.data


def _float_bits(values: np.ndarray, bits: int) -> Iterable[int]:
    float_type, uint_type = _float_types(bits)
    return (int(v) for v in np.asarray(values).astype(float_type).view(uint_type))


def _bits_float(words: Sequence[int], bits: int) -> np.ndarray:
    float_type, uint_type = _float_types(bits)
    return np.array(words, dtype=uint_type).view(float_type).astype(np.float64)


def encode(payload: SparsePayload) -> EncodedPayload:
    """Pack a payload; the body is exactly payload.total_bits long."""
    writer = BitWriter()
    for value in (payload.grid, payload.order, payload.k, payload.round_index, payload.client_id):
        writer.write(int(value), 32)

    rank_width = position_bits(payload.grid, payload.order, payload.k)
    b = payload.bits_per_coeff
    for edge in range(payload.edge_count):
        for word in _float_bits(payload.bases[edge:edge + 1], b):
            writer.write(word, b)
        writer.write(combination_rank(payload.indices[edge]), rank_width)
        for word in _float_bits(payload.values[edge], b):
            writer.write(word, b)

    return EncodedPayload(data=writer.to_bytes(), body_bits=writer.bits - HEADER_BITS)


def decode(data: bytes, g: int, o: int, k: int, bits_per_coeff: int = 32) -> SparsePayload:
    """
    Unpack a payload produced by encode.

    Args:
        data: Wire bytes
        g, o, k: Expected grid, order and retained count
        bits_per_coeff: Value width b

    Returns:
        SparsePayload with b-bit-rounded values
    """
    data = bytes(data)
    reader = BitReader(data)
    header = [reader.read(32) for _ in range(HEADER_FIELDS)]
    if tuple(header[:3]) != (g, o, k):
        raise PayloadDecodeError(f"Header (g, o, k) = {tuple(header[:3])} does not match ({g}, {o}, {k})")

    n = g + o
    rank_width = position_bits(g, o, k)
    per_edge = bits_per_coeff * (1 + k) + rank_width
    edges = (reader.total - HEADER_BITS) // per_edge

    bases, indices, values = [], [], []
    for _ in range(edges):
        bases.append(reader.read(bits_per_coeff))
        rank = reader.read(rank_width)
        if rank >= math.comb(n, k):
            raise PayloadDecodeError(f"Corrupt support rank {rank} >= C({n},{k})")
        indices.append(combination_unrank(rank, n, k))
        values.append([reader.read(bits_per_coeff) for _ in range(k)])

    return SparsePayload(
        grid=g,
        order=o,
        k=k,
        bits_per_coeff=bits_per_coeff,
        bases=_bits_float(bases, bits_per_coeff),
        indices=np.array(indices, dtype=np.int64).reshape(edges, k),
        values=_bits_float([w for row in values for w in row], bits_per_coeff).reshape(edges, k),
        round_index=header[3],
        client_id=header[4]
    )


def _edge_matrix(params: ParamVector) -> np.ndarray:
    layout = params.layout
    return params.values.reshape(-1, layout.edge_size)


def sparsify_network(
    params: ParamVector,
    k: int,
    kind: SparsifierKind = SparsifierKind.TOP_K,
    bits_per_coeff: int = 32,
    seed: int = 0,
    round_index: int = 0,
    client_id: int = 0
) -> SparsePayload:
    """
    Sparsify every edge of a network to k retained spline coefficients.

    Edges appear in canonical order; base coefficients are always kept.
    """
    layout = params.layout
    edges = _edge_matrix(params)
    coeffs = edges[:, 1:]

    if kind is SparsifierKind.TOP_K:
        supports = topk_supports(coeffs, k)
    elif kind is SparsifierKind.FIXED:
        supports = np.tile(fixed_sparsify(coeffs[0], k).indices, (coeffs.shape[0], 1))
    elif kind is SparsifierKind.RANDOM:
        rng = np.random.default_rng(seed)
        supports = np.stack([
            random_sparsify(row, k, int(rng.integers(0, 2 ** 63 - 1))).indices for row in coeffs
        ])
    else:
        grids = _edge_grids(layout)
        supports = np.stack([optimal_sparsify(row, k, grid).indices for row, grid in zip(coeffs, grids)])

    supports = supports.reshape(coeffs.shape[0], k)
    return SparsePayload(
        grid=layout.grid,
        order=layout.order,
        k=k,
        bits_per_coeff=bits_per_coeff,
        bases=edges[:, 0],
        indices=supports,
        values=np.take_along_axis(coeffs, supports, axis=1),
        round_index=round_index,
        client_id=client_id
    )


def _edge_grids(layout: ParamLayout):
    grids = []
    for layer, omega in enumerate(layout.omegas):
        grids.extend([layout.grid_spec(layer)] * omega)
    return grids


def densify(payload: SparsePayload, reference: ParamVector) -> Tuple[ParamVector, np.ndarray]:
    """
    Rebuild a dense parameter vector on the server.

    Dropped spline coefficients take the reference (broadcast) value.

    Returns:
        (dense ParamVector, boolean mask of entries the client actually sent)
    """
    layout = reference.layout
    if (payload.grid, payload.order) != (layout.grid, layout.order) or payload.edge_count != sum(layout.omegas):
        raise CompressionError("Payload does not match the reference layout")

    dense = _edge_matrix(reference).copy()
    sent = np.zeros(dense.shape, dtype=bool)
    rows = np.arange(payload.edge_count)[:, None]

    dense[:, 0] = payload.bases
    sent[:, 0] = True
    dense[rows, payload.indices + 1] = payload.values
    sent[rows, payload.indices + 1] = True
    return ParamVector(dense.reshape(-1), layout), sent.reshape(-1)
