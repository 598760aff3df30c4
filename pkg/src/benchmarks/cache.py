"""
Dataset cache files.

Layout: magic b"KANDATA1" | u32 little-endian header length | UTF-8 JSON header
(benchmark, seed, ranges, count, input_dim) | count rows of (inputs..., target)
as little-endian float64.
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np

from .functions import Benchmark, BenchmarkError, RawDataset, generate_dataset


logger = logging.getLogger(__name__)

MAGIC = b"KANDATA1"


def _header(bench: Benchmark, dataset: RawDataset) -> Dict[str, Any]:
    return {
        "benchmark": bench.name,
        "seed": int(dataset.seed),
        "ranges": [list(r) for r in bench.ranges],
        "count": len(dataset),
        "input_dim": bench.input_dim
    }


def save_dataset(path: Union[str, Path], bench: Benchmark, dataset: RawDataset) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = json.dumps(_header(bench, dataset), sort_keys=True).encode("utf-8")
    rows = np.column_stack([dataset.inputs, dataset.targets]) if len(dataset) else np.zeros((0, bench.input_dim + 1))
    path.write_bytes(MAGIC + struct.pack("<I", len(header)) + header + rows.astype("<f8").tobytes())
    return path


def load_dataset(path: Union[str, Path]) -> Tuple[RawDataset, Dict[str, Any]]:
    """Read a cache file; returns the dataset and its header."""
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise BenchmarkError(f"{path} is not a dataset cache")
    (length,) = struct.unpack_from("<I", data, 8)
    header = json.loads(data[12:12 + length].decode("utf-8"))
    width = header["input_dim"] + 1
    rows = np.frombuffer(data, dtype="<f8", offset=12 + length).astype(np.float64)
    if rows.size != header["count"] * width:
        raise BenchmarkError(f"{path} holds {rows.size} values, header promises {header['count'] * width}")
    rows = rows.reshape(header["count"], width)
    dataset = RawDataset(
        benchmark=header["benchmark"],
        inputs=rows[:, :-1].copy(),
        targets=rows[:, -1].copy(),
        seed=header["seed"]
    )
    return dataset, header


def load_or_generate(path: Union[str, Path], bench: Benchmark, n_samples: int, seed: int) -> RawDataset:
    """Reuse a matching cache file, otherwise generate and write one."""
    path = Path(path)
    expected = {
        "benchmark": bench.name,
        "seed": int(seed),
        "ranges": [list(r) for r in bench.ranges],
        "count": n_samples,
        "input_dim": bench.input_dim
    }
    if path.exists():
        try:
            dataset, header = load_dataset(path)
            if header == expected:
                logger.debug("Dataset cache hit: %s", path)
                return dataset
            logger.info("Dataset cache %s does not match the request; regenerating", path)
        except (BenchmarkError, ValueError, KeyError) as e:
            logger.warning("Ignoring unreadable dataset cache %s: %s", path, e)

    dataset = generate_dataset(bench, n_samples, seed)
    save_dataset(path, bench, dataset)
    return dataset
