"""
Model checkpoints.

Byte layout (all little-endian):

    magic    8 bytes   b"KANCKPT\\0"
    version  u32       canonical-order version (1)
    round    u32       round the model belongs to
    order    u32
    grid     u32
    L        u32       number of layers
    widths   (L+1) x u32
    domains  L x 2 x f64
    values   N x f64   canonical parameter order, N = sum(omega) * (1 + g + o)
"""

import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from .network import CANONICAL_ORDER_VERSION, KanModelError, KanNetwork, ParamLayout, flatten, unflatten


MAGIC = b"KANCKPT\0"
FORMAT_VERSION = 1
_VERSION_TAGS = {FORMAT_VERSION: CANONICAL_ORDER_VERSION}


def checkpoint_bytes(net: KanNetwork, round_index: int = 0) -> bytes:
    layout = net.layout
    header = MAGIC + struct.pack(
        "<5I", FORMAT_VERSION, round_index, layout.order, layout.grid, layout.num_layers
    )
    header += struct.pack(f"<{len(layout.widths)}I", *layout.widths)
    header += np.asarray(layout.domains, dtype="<f8").tobytes()
    return header + flatten(net).values.astype("<f8").tobytes()


def _require(data: bytes, offset: int, size: int, what: str) -> None:
    if len(data) < offset + size:
        raise KanModelError(f"Checkpoint truncated in {what}: {len(data)} bytes")


def parse_checkpoint(data: bytes) -> Tuple[KanNetwork, int]:
    if data[:8] != MAGIC:
        raise KanModelError("Not a KAN checkpoint")
    offset = 8
    _require(data, offset, 20, "header")
    version, round_index, order, grid, num_layers = struct.unpack_from("<5I", data, offset)
    offset += 20
    if version not in _VERSION_TAGS:
        raise KanModelError(f"Unsupported checkpoint version {version}")
    _require(data, offset, 4 * (num_layers + 1), "widths")
    widths = struct.unpack_from(f"<{num_layers + 1}I", data, offset)
    offset += 4 * (num_layers + 1)
    _require(data, offset, 16 * num_layers, "domains")
    domains = np.frombuffer(data, dtype="<f8", count=2 * num_layers, offset=offset).reshape(num_layers, 2)
    offset += 16 * num_layers

    layout = ParamLayout(
        widths=widths,
        order=order,
        grid=grid,
        domains=tuple((float(a), float(b)) for a, b in domains),
        version=_VERSION_TAGS[version]
    )
    remaining = len(data) - offset
    if remaining != 8 * layout.size:
        raise KanModelError(f"Checkpoint holds {remaining // 8} values, layout needs {layout.size}")
    values = np.frombuffer(data, dtype="<f8", offset=offset).astype(np.float64)
    return unflatten(values, layout), round_index


def save_checkpoint(path: Union[str, Path], net: KanNetwork, round_index: int = 0) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_bytes(net, round_index))
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[KanNetwork, int]:
    """Load a checkpoint written by save_checkpoint; returns (network, round)."""
    return parse_checkpoint(Path(path).read_bytes())
