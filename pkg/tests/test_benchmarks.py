"""
Tests for the analytic benchmark functions and dataset generation
"""

import pytest
import sys
import os

import numpy as np
from scipy import special

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.benchmarks import (
    BENCHMARKS,
    BenchmarkDomainError,
    BenchmarkError,
    bessel_series,
    eval_benchmark,
    generate_dataset,
    get_benchmark,
    legendre_recurrence,
    rmse
)
from src.kan import forward, init_network


class TestFunctions:
    """Test closed-form targets"""

    def test_interference_single_slit(self):
        assert eval_benchmark("feynman-I.30.3", [2.5, 1.0, 1.3]) == pytest.approx(2.5, rel=1e-14)

    def test_interference_value(self):
        i0, n, theta = 2.0, 3.0, 1.0
        expected = i0 * np.sin(n * theta / 2) ** 2 / np.sin(theta / 2) ** 2
        assert eval_benchmark("feynman-I.30.3", [i0, n, theta]) == pytest.approx(expected)

    def test_interference_singular(self):
        with pytest.raises(BenchmarkDomainError):
            eval_benchmark("feynman-I.30.3", [1.0, 2.0, 0.0])

    def test_two_sources_in_phase(self):
        i1, i2 = 2.0, 3.0
        expected = (np.sqrt(i1) + np.sqrt(i2)) ** 2
        assert eval_benchmark("feynman-I.37.4", [i1, i2, 0.0]) == pytest.approx(expected, rel=1e-14)

    def test_two_sources_negative_intensity(self):
        with pytest.raises(BenchmarkDomainError):
            eval_benchmark("feynman-I.37.4", [-1.0, 2.0, 0.5])

    def test_bessel_at_zero(self):
        assert eval_benchmark("bessel", [0.0, 0.0]) == 1.0
        assert eval_benchmark("bessel", [1.5, 0.0]) == 0.0

    def test_bessel_first_root(self):
        assert abs(eval_benchmark("bessel", [0.0, 2.404825557695773])) < 1e-9

    def test_bessel_matches_scipy(self):
        rng = np.random.default_rng(4)
        nu = rng.uniform(0.0, 2.0, size=200)
        x = rng.uniform(0.0, 10.0, size=200)
        np.testing.assert_allclose(bessel_series(nu, x), special.jv(nu, x), rtol=1e-9, atol=1e-10)

    def test_bessel_domain(self):
        with pytest.raises(BenchmarkDomainError):
            bessel_series(np.array([-0.5]), np.array([1.0]))
        with pytest.raises(BenchmarkDomainError):
            bessel_series(np.array([0.5]), np.array([-1.0]))

    def test_legendre_values(self):
        assert eval_benchmark("legendre", [2.0, 0.5]) == pytest.approx(-0.125, abs=1e-15)
        assert eval_benchmark("legendre", [1.0, 0.3]) == pytest.approx(0.3)

    def test_legendre_matches_scipy(self):
        n = np.repeat(np.arange(0, 7), 20).astype(float)
        z = np.tile(np.linspace(-1.0, 1.0, 20), 7)
        np.testing.assert_allclose(legendre_recurrence(n, z), special.eval_legendre(n.astype(int), z), atol=1e-13)

    def test_legendre_needs_integer_degree(self):
        with pytest.raises(BenchmarkDomainError):
            legendre_recurrence(np.array([2.5]), np.array([0.1]))

    def test_batch_and_shape_checks(self):
        batch = eval_benchmark("legendre", np.array([[1.0, 0.2], [3.0, -0.4]]))
        assert batch.shape == (2,)
        with pytest.raises(BenchmarkError):
            eval_benchmark("legendre", [1.0, 0.2, 0.3])
        with pytest.raises(BenchmarkDomainError):
            eval_benchmark("legendre", [np.nan, 0.2])
        with pytest.raises(BenchmarkError):
            get_benchmark("feynman-II.1.1")


class TestGenerateDataset:
    """Test sample generation"""

    def test_inside_box(self):
        for bench in BENCHMARKS.values():
            data = generate_dataset(bench, 500, seed=1)
            assert data.inputs.shape == (500, bench.input_dim)
            assert np.all(np.isfinite(data.targets))
            for dim, (low, high) in enumerate(bench.ranges):
                assert np.all(data.inputs[:, dim] >= low)
                assert np.all(data.inputs[:, dim] <= high)

    def test_integer_dimension(self):
        data = generate_dataset(get_benchmark("legendre"), 1000, seed=2)
        degrees = data.inputs[:, 0]
        assert np.array_equal(degrees, np.round(degrees))
        assert set(degrees.tolist()) == {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}

    def test_two_source_range(self):
        data = generate_dataset(get_benchmark("feynman-I.37.4"), 1000, seed=3)
        i1, i2 = data.inputs[:, 0], data.inputs[:, 1]
        assert np.all(data.targets <= (np.sqrt(i1) + np.sqrt(i2)) ** 2 + 1e-12)
        assert np.all(data.targets >= (np.sqrt(i1) - np.sqrt(i2)) ** 2 - 1e-12)

    def test_reproducible(self):
        bench = get_benchmark("bessel")
        a = generate_dataset(bench, 100, seed=7)
        b = generate_dataset(bench, 100, seed=7)
        assert np.array_equal(a.inputs, b.inputs)
        assert np.array_equal(a.targets, b.targets)

    def test_empty(self):
        data = generate_dataset(get_benchmark("bessel"), 0)
        assert len(data) == 0
        assert data.inputs.shape == (0, 2)
        with pytest.raises(BenchmarkError):
            generate_dataset(get_benchmark("bessel"), -1)


class TestRmse:
    """Test held-out evaluation"""

    def test_rmse_value(self):
        net = init_network([2, 1], grid=3, seed=0)
        xs = np.random.default_rng(0).uniform(-1, 1, size=(16, 2))
        ys = np.linspace(-1.0, 1.0, 16)
        expected = np.sqrt(np.mean((forward(net, xs)[:, 0] - ys) ** 2))
        assert rmse(net, xs, ys) == pytest.approx(expected, rel=1e-12)

    def test_empty_test_set(self):
        net = init_network([2, 1], grid=3)
        with pytest.raises(BenchmarkError):
            rmse(net, np.zeros((0, 2)), np.zeros(0))


if __name__ == "__main__":
    pytest.main([__file__])
