"""
Benchmarks Module

Analytic regression targets, dataset generation and caching, Dirichlet
non-IID client partitioning and RMSE evaluation.
"""

from .functions import (
    Benchmark,
    RawDataset,
    BenchmarkError,
    BenchmarkDomainError,
    BENCHMARKS,
    get_benchmark,
    eval_benchmark,
    generate_dataset,
    bessel_series,
    legendre_recurrence
)
from .partition import (
    PartitionConfig,
    PartitionError,
    Normalizer,
    ClientData,
    SplitDataset,
    target_bins,
    partition_indices,
    dirichlet_partition,
    build_split,
    client_sizes
)
from .evaluation import rmse
from .cache import save_dataset, load_dataset, load_or_generate
from ..common import derive_seed


def create_split(
    name: str,
    n_train: int,
    n_test: int,
    num_clients: int,
    alpha=1.0,
    seed: int = 0,
    num_bins: int = 10
) -> SplitDataset:
    """
    Create a partitioned dataset for a named benchmark.

    Sub-seeds for partitioning, training samples and test samples are
    derived from the one seed.
    """
    pcfg = PartitionConfig(dirichlet_alpha=alpha, num_bins=num_bins, seed=derive_seed(seed, "partition"))
    return build_split(
        get_benchmark(name),
        n_train,
        n_test,
        num_clients,
        pcfg,
        data_seed=derive_seed(seed, "data"),
        test_seed=derive_seed(seed, "test-data")
    )


__all__ = [
    'Benchmark',
    'RawDataset',
    'BenchmarkError',
    'BenchmarkDomainError',
    'BENCHMARKS',
    'get_benchmark',
    'eval_benchmark',
    'generate_dataset',
    'bessel_series',
    'legendre_recurrence',
    'PartitionConfig',
    'PartitionError',
    'Normalizer',
    'ClientData',
    'SplitDataset',
    'target_bins',
    'partition_indices',
    'dirichlet_partition',
    'build_split',
    'client_sizes',
    'rmse',
    'save_dataset',
    'load_dataset',
    'load_or_generate',
    'create_split'
]
