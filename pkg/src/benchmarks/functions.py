"""
Analytic Regression Benchmarks

Four closed-form targets with their sampling boxes and network shapes:
Feynman I.30.3, Feynman I.37.4, the Bessel function of the first kind and
the Legendre polynomials.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np
from scipy.special import gamma, factorial


BESSEL_TOLERANCE = 1e-12
BESSEL_MAX_TERMS = 60
SINGULAR_TOLERANCE = 1e-8


class BenchmarkError(ValueError):
    """Base error of the benchmark suite."""
    pass


class BenchmarkDomainError(BenchmarkError):
    """Raised when inputs fall outside a function's mathematical domain."""
    pass


def _interference(inputs: np.ndarray) -> np.ndarray:
    i0, n, theta = inputs[:, 0], inputs[:, 1], inputs[:, 2]
    half = np.sin(theta / 2.0)
    if np.any(np.abs(half) < SINGULAR_TOLERANCE):
        raise BenchmarkDomainError("I.30.3 is singular where sin(theta / 2) = 0")
    return i0 * np.sin(n * theta / 2.0) ** 2 / half ** 2


def _two_source_intensity(inputs: np.ndarray) -> np.ndarray:
    i1, i2, delta = inputs[:, 0], inputs[:, 1], inputs[:, 2]
    if np.any(i1 < 0) or np.any(i2 < 0):
        raise BenchmarkDomainError("I.37.4 needs non-negative intensities")
    return i1 + i2 + 2.0 * np.sqrt(i1 * i2) * np.cos(delta)


def bessel_series(nu: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    J_nu(x) by its power series.

    Summation stops per point at the first term with magnitude below 1e-12,
    or after 60 terms.
    """
    nu = np.asarray(nu, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if np.any(nu < 0):
        raise BenchmarkDomainError("Bessel order must be non-negative")
    if np.any((x < 0) & (nu != np.floor(nu))):
        raise BenchmarkDomainError("Bessel series needs x >= 0 for non-integer order")

    half = x / 2.0
    total = np.zeros(np.broadcast(nu, x).shape)
    active = np.ones(total.shape, dtype=bool)
    for m in range(BESSEL_MAX_TERMS):
        term = (-1.0) ** m * half ** (2 * m + nu) / (factorial(m) * gamma(m + nu + 1.0))
        total = np.where(active, total + term, total)
        active &= np.abs(term) >= BESSEL_TOLERANCE
        if not active.any():
            break
    return total


def _bessel(inputs: np.ndarray) -> np.ndarray:
    return bessel_series(inputs[:, 0], inputs[:, 1])


def legendre_recurrence(n: np.ndarray, z: np.ndarray) -> np.ndarray:
    """P_n(z) through (k + 1) P_{k+1} = (2k + 1) z P_k - k P_{k-1}."""
    n = np.asarray(n, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if np.any(n != np.round(n)) or np.any(n < 0):
        raise BenchmarkDomainError("Legendre degree must be a non-negative integer")
    degree = n.astype(np.int64)

    previous = np.ones_like(z)
    current = z.copy()
    result = np.where(degree == 0, previous, current)
    for k in range(1, int(degree.max(initial=0))):
        previous, current = current, ((2 * k + 1) * z * current - k * previous) / (k + 1)
        result = np.where(degree == k + 1, current, result)
    return result


def _legendre(inputs: np.ndarray) -> np.ndarray:
    return legendre_recurrence(inputs[:, 0], inputs[:, 1])


@dataclass(frozen=True)
class Benchmark:
    """A regression target with its sampling box and network widths."""
    name: str
    variables: Tuple[str, ...]
    ranges: Tuple[Tuple[float, float], ...]
    widths: Tuple[int, ...]
    function: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    integer_dims: Tuple[int, ...] = ()

    @property
    def input_dim(self) -> int:
        return len(self.variables)

    def describe(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "variables": list(self.variables),
            "ranges": [list(r) for r in self.ranges],
            "widths": list(self.widths),
            "integer_dims": list(self.integer_dims)
        }


BENCHMARKS: Dict[str, Benchmark] = {
    "feynman-I.30.3": Benchmark(
        name="feynman-I.30.3",
        variables=("I0", "n", "theta"),
        ranges=((1.0, 5.0), (1.0, 5.0), (0.5, 3.0)),
        widths=(3, 5, 5, 1),
        function=_interference
    ),
    "feynman-I.37.4": Benchmark(
        name="feynman-I.37.4",
        variables=("I1", "I2", "delta"),
        ranges=((1.0, 5.0), (1.0, 5.0), (0.0, 2.0 * np.pi)),
        widths=(3, 3, 2, 1),
        function=_two_source_intensity
    ),
    "bessel": Benchmark(
        name="bessel",
        variables=("nu", "x"),
        ranges=((0.0, 2.0), (0.0, 10.0)),
        widths=(2, 2, 2, 1),
        function=_bessel
    ),
    "legendre": Benchmark(
        name="legendre",
        variables=("n", "z"),
        ranges=((1.0, 6.0), (-1.0, 1.0)),
        widths=(2, 2, 1),
        function=_legendre,
        integer_dims=(0,)
    )
}


def get_benchmark(name: str) -> Benchmark:
    if name not in BENCHMARKS:
        raise BenchmarkError(f"Unknown benchmark '{name}'; choose from {sorted(BENCHMARKS)}")
    return BENCHMARKS[name]


def eval_benchmark(name: str, raw_inputs: np.ndarray):
    """
    Evaluate a benchmark on raw (unnormalised) inputs.

    Args:
        name: Benchmark name
        raw_inputs: One point of length input_dim, or an (n, input_dim) batch

    Returns:
        float for a single point, array (n,) for a batch
    """
    bench = get_benchmark(name)
    x = np.asarray(raw_inputs, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != bench.input_dim:
        raise BenchmarkError(f"{name} takes {bench.input_dim} inputs, got shape {np.shape(raw_inputs)}")
    if not np.all(np.isfinite(x)):
        raise BenchmarkDomainError(f"{name} received non-finite inputs")
    if x.shape[0] == 0:
        return np.zeros(0)
    y = bench.function(x)
    return float(y[0]) if single else y


@dataclass(eq=False)
class RawDataset:
    """Unnormalised samples of one benchmark."""
    benchmark: str
    inputs: np.ndarray
    targets: np.ndarray
    seed: int = 0

    def __len__(self) -> int:
        return int(self.targets.shape[0])


def generate_dataset(bench: Benchmark, n_samples: int, seed: int = 0) -> RawDataset:
    """
    Draw inputs uniformly from the benchmark box and evaluate the target.

    Integer dimensions are drawn uniformly from the integers of their range.
    """
    if n_samples < 0:
        raise BenchmarkError(f"n_samples must be >= 0, got {n_samples}")
    rng = np.random.default_rng(seed)
    columns = []
    for dim, (low, high) in enumerate(bench.ranges):
        if dim in bench.integer_dims:
            columns.append(rng.integers(int(low), int(high) + 1, size=n_samples).astype(np.float64))
        else:
            columns.append(rng.uniform(low, high, size=n_samples))
    inputs = np.stack(columns, axis=1) if n_samples else np.zeros((0, bench.input_dim))
    targets = eval_benchmark(bench.name, inputs) if n_samples else np.zeros(0)
    return RawDataset(benchmark=bench.name, inputs=inputs, targets=np.asarray(targets), seed=seed)
