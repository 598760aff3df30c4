"""
Non-IID Client Partitioning

Targets are binned into quantile pseudo-classes; each bin is spread over the
clients with Dirichlet(alpha) proportions. IID mode shuffles uniformly.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .cache import load_or_generate
from .functions import Benchmark, RawDataset, generate_dataset


logger = logging.getLogger(__name__)


class PartitionError(RuntimeError):
    """Raised when a partition leaves clients without data."""
    pass


@dataclass(frozen=True)
class PartitionConfig:
    """
    Data heterogeneity settings.

    dirichlet_alpha: concentration; None selects IID shuffling
    num_bins: target-quantile pseudo-classes
    max_retries: single-bin redraws allowed while a client is empty
    rebalance: move single samples to empty clients once retries run out (opt-in)
    """
    dirichlet_alpha: Optional[float] = 1.0
    num_bins: int = 10
    seed: int = 0
    max_retries: int = 10
    rebalance: bool = False

    def __post_init__(self):
        if self.dirichlet_alpha is not None and not (self.dirichlet_alpha > 0 and math.isfinite(self.dirichlet_alpha)):
            raise ValueError(f"dirichlet_alpha must be positive, got {self.dirichlet_alpha}")
        if self.num_bins < 2:
            raise ValueError(f"num_bins must be >= 2, got {self.num_bins}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")

    @property
    def iid(self) -> bool:
        return self.dirichlet_alpha is None


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension min/max map of the training inputs onto [-1, 1]."""
    low: Tuple[float, ...]
    high: Tuple[float, ...]

    @classmethod
    def fit(cls, inputs: np.ndarray) -> "Normalizer":
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.shape[0] == 0:
            raise PartitionError("Cannot fit a normalizer on an empty training set")
        return cls(tuple(inputs.min(axis=0).tolist()), tuple(inputs.max(axis=0).tolist()))

    def _span(self) -> np.ndarray:
        span = np.asarray(self.high) - np.asarray(self.low)
        return np.where(span > 0, span, 1.0)

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * (np.asarray(x, dtype=np.float64) - np.asarray(self.low)) / self._span() - 1.0

    def denormalize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) + 1.0) * self._span() / 2.0 + np.asarray(self.low)


@dataclass(eq=False)
class ClientData:
    client_id: int
    inputs: np.ndarray
    targets: np.ndarray
    indices: np.ndarray

    @property
    def size(self) -> int:
        return int(self.targets.shape[0])


@dataclass(eq=False)
class SplitDataset:
    """Per-client normalised training data plus the shared test set."""
    benchmark: str
    clients: List[ClientData]
    test_inputs: np.ndarray
    test_targets: np.ndarray
    normalizer: Normalizer
    client_bins: List[np.ndarray] = field(default_factory=list)

    @property
    def num_clients(self) -> int:
        return len(self.clients)

    @property
    def train_size(self) -> int:
        return sum(client.size for client in self.clients)

    def pooled(self) -> Tuple[np.ndarray, np.ndarray]:
        """All client data concatenated in client-id order."""
        return (
            np.concatenate([c.inputs for c in self.clients]),
            np.concatenate([c.targets for c in self.clients])
        )


def target_bins(targets: np.ndarray, num_bins: int) -> np.ndarray:
    """Quantile bin index 0..num_bins-1 of every target."""
    targets = np.asarray(targets, dtype=np.float64)
    edges = np.quantile(targets, np.linspace(0.0, 1.0, num_bins + 1))
    return np.searchsorted(edges[1:-1], targets, side="right")


def _split_counts(proportions: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing to total, largest remainders first."""
    raw = proportions * total
    counts = np.floor(raw).astype(np.int64)
    remainder = total - int(counts.sum())
    if remainder > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:remainder]] += 1
    return counts


def _dirichlet(rng: np.random.Generator, alpha: float, n: int) -> np.ndarray:
    proportions = rng.dirichlet(np.full(n, alpha))
    if not np.all(np.isfinite(proportions)) or proportions.sum() <= 0:
        # tiny alpha can underflow every gamma draw
        proportions = np.zeros(n)
        proportions[rng.integers(n)] = 1.0
    return proportions


def _draw_bin(members: np.ndarray, num_clients: int, alpha: float, rng) -> List[np.ndarray]:
    """One bin's members split over the clients by fresh Dirichlet proportions."""
    members = rng.permutation(members)
    counts = _split_counts(_dirichlet(rng, alpha, num_clients), members.size)
    return np.split(members, np.cumsum(counts)[:-1])


def _empty_clients(shares: List[List[np.ndarray]], num_clients: int) -> List[int]:
    return [k for k in range(num_clients) if not any(share[k].size for share in shares)]


def _least_spread_bin(shares: List[List[np.ndarray]]) -> int:
    """Bin whose draw reaches the fewest clients; ties go to the larger bin, then the lower index."""
    def key(b: int):
        share = shares[b]
        return (sum(1 for part in share if part.size), -sum(part.size for part in share), b)
    return min(range(len(shares)), key=key)


def _rebalance(assignment: List[List[int]]) -> int:
    moved = 0
    for client, held in enumerate(assignment):
        if held:
            continue
        donor = max(range(len(assignment)), key=lambda c: (len(assignment[c]), -c))
        held.append(assignment[donor].pop())
        moved += 1
    return moved


def partition_indices(targets: np.ndarray, num_clients: int, pcfg: PartitionConfig) -> List[np.ndarray]:
    """
    Split sample indices over clients.

    Each target-quantile bin is spread with its own Dirichlet draw. While a
    client holds nothing, the bin reaching the fewest clients is redrawn, up
    to `max_retries` times; after that the partition is rebalanced (opt-in)
    or PartitionError is raised.

    Args:
        targets: Training targets
        num_clients: N
        pcfg: Partition settings

    Returns:
        One sorted index array per client; together they cover every index once
    """
    n = int(np.asarray(targets).shape[0])
    if num_clients < 1:
        raise PartitionError(f"num_clients must be >= 1, got {num_clients}")
    if n < num_clients:
        raise PartitionError(f"{n} samples cannot give {num_clients} clients one sample each")

    rng = np.random.default_rng(pcfg.seed)
    if pcfg.iid:
        return [np.sort(part) for part in np.array_split(rng.permutation(n), num_clients)]

    bins = target_bins(targets, pcfg.num_bins)
    members = [np.flatnonzero(bins == b) for b in range(pcfg.num_bins)]
    members = [m for m in members if m.size]
    shares = [_draw_bin(m, num_clients, pcfg.dirichlet_alpha, rng) for m in members]

    empty = _empty_clients(shares, num_clients)
    for attempt in range(pcfg.max_retries):
        if not empty:
            break
        b = _least_spread_bin(shares)
        shares[b] = _draw_bin(members[b], num_clients, pcfg.dirichlet_alpha, rng)
        logger.debug("Partition retry %d: redrew bin %d (%d clients empty)", attempt, b, len(empty))
        empty = _empty_clients(shares, num_clients)

    assignment = [
        [int(i) for share in shares for i in share[k]]
        for k in range(num_clients)
    ]
    if empty:
        if not pcfg.rebalance:
            raise PartitionError(
                f"{len(empty)} clients still empty after {pcfg.max_retries} bin redraws "
                f"(alpha={pcfg.dirichlet_alpha})"
            )
        moved = _rebalance(assignment)
        logger.warning("Partition rebalanced: moved %d samples to empty clients", moved)

    return [np.sort(np.asarray(a, dtype=np.int64)) for a in assignment]


def dirichlet_partition(
    train: RawDataset,
    num_clients: int,
    pcfg: PartitionConfig,
    test: Optional[RawDataset] = None
) -> SplitDataset:
    """
    Partition a training set over clients and normalise with train statistics.

    Args:
        train: Raw training samples
        num_clients: N
        pcfg: Partition settings
        test: Optional held-out samples, normalised with the same map

    Returns:
        SplitDataset
    """
    parts = partition_indices(train.targets, num_clients, pcfg)
    normalizer = Normalizer.fit(train.inputs)
    inputs = normalizer.normalize(train.inputs)
    bins = target_bins(train.targets, pcfg.num_bins)

    clients = [
        ClientData(client_id=k, inputs=inputs[idx], targets=train.targets[idx], indices=idx)
        for k, idx in enumerate(parts)
    ]
    if test is not None:
        test_inputs, test_targets = normalizer.normalize(test.inputs), test.targets
    else:
        test_inputs, test_targets = np.zeros((0, train.inputs.shape[1])), np.zeros(0)

    return SplitDataset(
        benchmark=train.benchmark,
        clients=clients,
        test_inputs=test_inputs,
        test_targets=np.asarray(test_targets, dtype=np.float64),
        normalizer=normalizer,
        client_bins=[np.bincount(bins[idx], minlength=pcfg.num_bins) for idx in parts]
    )


def build_split(
    bench: Benchmark,
    n_train: int,
    n_test: int,
    num_clients: int,
    pcfg: PartitionConfig,
    data_seed: int,
    test_seed: int,
    cache_dir: Optional[Union[str, Path]] = None
) -> SplitDataset:
    """
    Draw the test set first, then the training set, then partition.

    With a cache directory, raw samples are read from (or written to)
    `<benchmark>-<kind>-<seed>-<count>.bin` files there.
    """
    if cache_dir is None:
        test = generate_dataset(bench, n_test, test_seed)
        train = generate_dataset(bench, n_train, data_seed)
    else:
        cache_dir = Path(cache_dir)
        test = load_or_generate(cache_dir / f"{bench.name}-test-{test_seed}-{n_test}.bin", bench, n_test, test_seed)
        train = load_or_generate(
            cache_dir / f"{bench.name}-train-{data_seed}-{n_train}.bin", bench, n_train, data_seed
        )
    split = dirichlet_partition(train, num_clients, pcfg, test)
    logger.info(
        "Built %s split: %d train over %d clients, %d test",
        bench.name, n_train, num_clients, n_test
    )
    return split


def client_sizes(split: SplitDataset) -> Sequence[int]:
    return [c.size for c in split.clients]
