"""
Tests for local training
"""

import pytest
import sys
import os

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.kan import (
    KanModelError,
    OptimizerKind,
    TrainConfig,
    TrainingDivergedError,
    flatten,
    init_network,
    loss,
    train_local,
    train_local_with_history
)


def toy_data(n=64, seed=0):
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-1.0, 1.0, size=(n, 2))
    ys = np.sin(np.pi * xs[:, 0]) + 0.5 * xs[:, 1] ** 2
    return xs, ys


class TestTrainConfig:
    """Test hyperparameter validation"""

    @pytest.mark.parametrize("kwargs", [
        {"learning_rate": -1.0},
        {"learning_rate": float("nan")},
        {"local_epochs": 0},
        {"batch_size": 0},
    ])
    def test_invalid_values(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)

    def test_optimizer_from_string(self):
        assert TrainConfig(optimizer="sgd").optimizer is OptimizerKind.SGD


class TestTrainLocal:
    """Test the local optimisation loop"""

    def setup_method(self):
        self.net = init_network([2, 2, 1], grid=5, seed=0)
        self.xs, self.ys = toy_data()

    def test_full_batch_sgd_monotone(self):
        cfg = TrainConfig(learning_rate=0.05, local_epochs=30, batch_size=64, optimizer=OptimizerKind.SGD)
        _, history = train_local_with_history(self.net, self.xs, self.ys, cfg)
        assert len(history) == 30
        assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))
        assert history[-1] < loss(self.net, self.xs, self.ys)

    def test_adam_reduces_loss(self):
        cfg = TrainConfig(learning_rate=1e-2, local_epochs=10, batch_size=16)
        trained = train_local(self.net, self.xs, self.ys, cfg)
        assert loss(trained, self.xs, self.ys) < loss(self.net, self.xs, self.ys)

    def test_input_network_untouched(self):
        before = flatten(self.net).values.copy()
        train_local(self.net, self.xs, self.ys, TrainConfig(local_epochs=2))
        assert np.array_equal(flatten(self.net).values, before)

    def test_same_seed_same_result(self):
        cfg = TrainConfig(local_epochs=3, batch_size=8, seed=17)
        a = flatten(train_local(self.net, self.xs, self.ys, cfg)).values
        b = flatten(train_local(self.net, self.xs, self.ys, cfg)).values
        assert np.array_equal(a, b)

    def test_seed_changes_batch_order(self):
        a = flatten(train_local(self.net, self.xs, self.ys, TrainConfig(local_epochs=1, batch_size=8, seed=1))).values
        b = flatten(train_local(self.net, self.xs, self.ys, TrainConfig(local_epochs=1, batch_size=8, seed=2))).values
        assert not np.array_equal(a, b)

    def test_zero_learning_rate_is_identity(self):
        cfg = TrainConfig(learning_rate=0.0, local_epochs=2, optimizer=OptimizerKind.SGD)
        trained = train_local(self.net, self.xs, self.ys, cfg)
        assert np.array_equal(flatten(trained).values, flatten(self.net).values)

    def test_empty_dataset(self):
        with pytest.raises(KanModelError):
            train_local(self.net, np.zeros((0, 2)), np.zeros(0), TrainConfig())

    def test_quadratic_fit(self):
        xs = np.linspace(-1.0, 1.0, 101)[:, None]
        ys = xs[:, 0] ** 2
        net = init_network([1, 1], grid=10, seed=0)
        trained = train_local(net, xs, ys, TrainConfig(local_epochs=200, batch_size=32))
        assert np.sqrt(loss(trained, xs, ys)) < 0.05

    def test_divergence_reported(self):
        ys = self.ys.copy()
        ys[3] = np.nan
        with pytest.raises(TrainingDivergedError) as info:
            train_local(self.net, self.xs, ys, TrainConfig(batch_size=64))
        assert info.value.epoch == 0
        assert info.value.step == 0
        assert info.value.last_finite_loss is None
        assert "no finite loss" in str(info.value)

    def test_divergence_keeps_starting_loss(self):
        net = init_network([2, 1], grid=5, seed=0)
        cfg = TrainConfig(learning_rate=1e300, local_epochs=3, batch_size=64, optimizer=OptimizerKind.SGD)
        with np.errstate(all="ignore"):
            with pytest.raises(TrainingDivergedError) as info:
                train_local(net, self.xs, self.ys, cfg)
        assert info.value.epoch == 0
        assert info.value.last_finite_loss == loss(net, self.xs, self.ys)
        assert "last finite loss" in str(info.value)


if __name__ == "__main__":
    pytest.main([__file__])
