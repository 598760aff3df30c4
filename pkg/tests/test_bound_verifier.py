"""
Tests for the top-k versus optimal error bound check
"""

import pytest
import sys
import os

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.compression import CompressionError, evaluate_trial, order_bound, verify_bound
from src.splines import GridSpec


class TestEvaluateTrial:
    """Test single trials"""

    def test_exactly_sparse_vector_is_skipped(self):
        grid = GridSpec(order=3, grid=3)
        c = np.array([0.0, 0.0, 1.5, 0.0, 0.0, 0.0])
        trial = evaluate_trial(c, 1, grid)
        assert trial.skipped
        assert not trial.violated
        assert trial.ratio is None

    def test_ratio_of_random_vector(self):
        grid = GridSpec(order=2, grid=4)
        c = np.random.default_rng(2).standard_normal(grid.num_basis)
        trial = evaluate_trial(c, 2, grid)
        assert not trial.skipped
        assert trial.ratio >= 1.0 - 1e-10
        assert trial.bound == order_bound(2) == 8.0


class TestVerifyBound:
    """Test randomised verification"""

    def test_small_run_passes(self):
        report = verify_bound(300, g_max=6, o_max=3, seed=1)
        assert report.trials == 300
        assert report.violations == 0
        assert report.passed
        assert report.bound == 24.0
        assert 1.0 - 1e-9 <= report.max_ratio_observed < report.bound
        assert set(report.max_ratio_by_order) <= {1, 2, 3}

    def test_reproducible(self):
        a = verify_bound(50, g_max=5, o_max=2, seed=9)
        b = verify_bound(50, g_max=5, o_max=2, seed=9)
        assert a.max_ratio_observed == b.max_ratio_observed

    @pytest.mark.parametrize("g_max,o_max", [(0, 3), (8, 0), (20, 5)])
    def test_invalid_ranges(self, g_max, o_max):
        with pytest.raises(CompressionError):
            verify_bound(10, g_max=g_max, o_max=o_max)

    @pytest.mark.slow
    def test_acceptance_run(self):
        report = verify_bound(10000, g_max=8, o_max=3, seed=0)
        assert report.violations == 0


if __name__ == "__main__":
    pytest.main([__file__])
