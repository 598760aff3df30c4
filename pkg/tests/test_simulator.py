"""
Tests for the federated simulator
"""

import pytest
import sys
import os

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.benchmarks import create_split
from src.common import client_train_seed, derive_seed
from src.compression import CostModel, match_grid_budget
from src.federation import (
    AggregationFill,
    FederatedSimulator,
    FLConfig,
    GridSchedule,
    SimulationError,
    aggregate,
    run_experiment,
    run_round,
    sample_clients
)
from src.kan import TrainConfig, flatten, init_network, train_local


LEGENDRE_WIDTHS = [2, 2, 1]
FAST_TRAIN = TrainConfig(learning_rate=1e-2, local_epochs=1, batch_size=32)


def legendre_split(num_clients, n_train=240, alpha=1.0, seed=0):
    return create_split("legendre", n_train, 60, num_clients, alpha=alpha, seed=seed)


class TestSampleClients:
    """Test per-round client sampling"""

    def test_fraction_of_population(self):
        cfg = FLConfig(num_clients=100, rounds=5, participation_fraction=0.1, seed=3)
        clients = sample_clients(0, cfg)
        assert len(clients) == 10
        assert list(clients) == sorted(set(clients))
        assert all(0 <= k < 100 for k in clients)

    def test_depends_only_on_seed_and_round(self):
        cfg = FLConfig(num_clients=100, rounds=5, seed=3)
        assert sample_clients(4, cfg) == sample_clients(4, cfg)
        assert sample_clients(4, cfg) != sample_clients(5, cfg)
        other = FLConfig(num_clients=100, rounds=5, seed=4)
        assert sample_clients(4, cfg) != sample_clients(4, other)

    def test_full_and_minimum_participation(self):
        assert sample_clients(0, FLConfig(num_clients=7, rounds=1, participation_fraction=1.0)) == tuple(range(7))
        assert len(sample_clients(0, FLConfig(num_clients=7, rounds=1, participation_fraction=0.01))) == 1

    def test_config_validation(self):
        with pytest.raises(ValueError):
            FLConfig(num_clients=0, rounds=1)
        with pytest.raises(ValueError):
            FLConfig(num_clients=5, rounds=1, participation_fraction=0.0)
        with pytest.raises(ValueError):
            FLConfig(num_clients=5, rounds=1, budget=-1)


class TestAggregate:
    """Test federated averaging"""

    def setup_method(self):
        self.reference = flatten(init_network(LEGENDRE_WIDTHS, grid=4, seed=0))
        self.rng = np.random.default_rng(1)

    def _vector(self, values):
        out = self.reference.copy()
        out.values[:] = values
        return out

    def test_single_update_unchanged(self):
        update = self._vector(self.rng.normal(size=len(self.reference)))
        assert np.array_equal(aggregate([update], self.reference).values, update.values)

    def test_opposite_updates_cancel(self):
        v = self.rng.normal(size=len(self.reference))
        merged = aggregate([self._vector(v), self._vector(-v)], self.reference)
        assert np.array_equal(merged.values, np.zeros(len(self.reference)))

    def test_mean_of_three(self):
        vs = [self.rng.normal(size=len(self.reference)) for _ in range(3)]
        merged = aggregate([self._vector(v) for v in vs], self.reference)
        np.testing.assert_allclose(merged.values, np.mean(vs, axis=0), atol=1e-15)

    def test_count_weighted_fill(self):
        size = len(self.reference)
        a, b = np.full(size, 2.0), np.full(size, 4.0)
        mask_a = np.zeros(size, dtype=bool)
        mask_b = np.zeros(size, dtype=bool)
        mask_a[:10] = True
        mask_b[5:10] = True
        merged = aggregate(
            [self._vector(a), self._vector(b)], self.reference, [mask_a, mask_b], AggregationFill.COUNT_WEIGHTED
        ).values
        assert np.all(merged[:5] == 2.0)
        assert np.all(merged[5:10] == 3.0)
        assert np.array_equal(merged[10:], self.reference.values[10:])

    def test_layout_mismatch(self):
        other = flatten(init_network(LEGENDRE_WIDTHS, grid=5))
        with pytest.raises(SimulationError):
            aggregate([other], self.reference)

    def test_empty(self):
        with pytest.raises(SimulationError):
            aggregate([], self.reference)


class TestFederatedSimulator:
    """Test complete federated runs"""

    def test_single_client_is_centralised_training(self):
        split = legendre_split(1)
        cfg = FLConfig(num_clients=1, rounds=1, participation_fraction=1.0, train=FAST_TRAIN, seed=5)
        result = run_experiment(cfg, GridSchedule.fixed(4), split, LEGENDRE_WIDTHS)

        start = init_network(LEGENDRE_WIDTHS, grid=4, seed=derive_seed(5, "init"))
        seed = client_train_seed(derive_seed(5, "training"), 0, 0)
        client = split.clients[0]
        expected = train_local(start, client.inputs, client.targets, TrainConfig(
            learning_rate=1e-2, local_epochs=1, batch_size=32, seed=seed
        ))
        assert np.array_equal(flatten(result.final_model).values, flatten(expected).values)

    def test_budgeted_rounds(self):
        split = legendre_split(4)
        budget = match_grid_budget(CostModel.from_widths(LEGENDRE_WIDTHS, 3), 10)
        cfg = FLConfig(num_clients=4, rounds=6, participation_fraction=0.5, train=FAST_TRAIN, budget=budget)
        schedule = GridSchedule(g0=3, period=2, deltas=(2, 7))
        rows = []
        result = run_experiment(cfg, schedule, split, LEGENDRE_WIDTHS, sink=rows.append)

        assert [m.grid for m in result.metrics] == [3, 3, 5, 5, 12, 12]
        assert [m.sparsified for m in result.metrics] == [False, False, False, False, True, True]
        assert [m.extended for m in result.metrics] == [False, False, True, False, True, False]
        assert rows == result.metrics
        for m in result.metrics:
            assert m.bits_total <= budget
            assert m.bits_budget == budget
            assert len(m.clients) == 2
        assert result.metrics[0].bits_total == 32 * (6 + 6 * 3)
        assert result.metrics[4].bits_total == 1998
        assert result.metrics[4].k == 9
        assert result.metrics[4].rho == pytest.approx(0.75)
        assert result.metrics[0].rho == 1.0
        assert result.final_model.grid_size == 12
        assert np.isfinite(result.final_rmse)
        assert result.total_uplink_bits == sum(sum(m.client_bits.values()) for m in result.metrics)

    def test_unlimited_budget_matches_grid_extension(self):
        split = legendre_split(4)
        schedule = GridSchedule(g0=3, period=2, deltas=(2,))
        plain = FLConfig(num_clients=4, rounds=4, participation_fraction=0.5, train=FAST_TRAIN)
        generous = FLConfig(num_clients=4, rounds=4, participation_fraction=0.5, train=FAST_TRAIN, budget=10 ** 9)
        a = run_experiment(plain, schedule, split, LEGENDRE_WIDTHS)
        b = run_experiment(generous, schedule, split, LEGENDRE_WIDTHS)
        assert [m.rmse for m in a.metrics] == [m.rmse for m in b.metrics]
        assert np.array_equal(flatten(a.final_model).values, flatten(b.final_model).values)

    def test_thread_pool_matches_sequential(self):
        split = legendre_split(6)
        schedule = GridSchedule(g0=3, period=1, deltas=(2,))
        budget = match_grid_budget(CostModel.from_widths(LEGENDRE_WIDTHS, 3), 4)
        base = dict(num_clients=6, rounds=3, participation_fraction=0.5, train=FAST_TRAIN, budget=budget)
        seq = run_experiment(FLConfig(**base), schedule, split, LEGENDRE_WIDTHS)
        par = run_experiment(FLConfig(max_workers=3, **base), schedule, split, LEGENDRE_WIDTHS)
        assert np.array_equal(flatten(seq.final_model).values, flatten(par.final_model).values)
        assert [m.bits_total for m in seq.metrics] == [m.bits_total for m in par.metrics]

    def test_layout_fingerprint_follows_grid(self):
        split = legendre_split(2)
        cfg = FLConfig(num_clients=2, rounds=4, participation_fraction=1.0, train=FAST_TRAIN)
        result = run_experiment(cfg, GridSchedule(g0=3, period=2, deltas=(3,)), split, LEGENDRE_WIDTHS)
        prints = [m.layout_fingerprint for m in result.metrics]
        assert prints[0] == prints[1] != prints[2] == prints[3]

    def test_round_by_round(self):
        split = legendre_split(2)
        cfg = FLConfig(num_clients=2, rounds=3, participation_fraction=1.0, train=FAST_TRAIN)
        simulator = FederatedSimulator(cfg, GridSchedule.fixed(3), split, LEGENDRE_WIDTHS)
        state, metrics = run_round(0, simulator)
        assert metrics.round_index == 0
        assert state.next_round == 1
        result = simulator.run()
        assert [m.round_index for m in result.metrics] == [1, 2]

    def test_divergence_names_client(self):
        split = legendre_split(2)
        split.clients[1].targets[0] = np.nan
        cfg = FLConfig(num_clients=2, rounds=1, participation_fraction=1.0, train=FAST_TRAIN)
        with pytest.raises(SimulationError) as info:
            run_experiment(cfg, GridSchedule.fixed(3), split, LEGENDRE_WIDTHS)
        assert info.value.round_index == 0
        assert info.value.client_id == 1

    def test_initial_model_must_match_schedule(self):
        split = legendre_split(2)
        cfg = FLConfig(num_clients=2, rounds=1)
        with pytest.raises(SimulationError):
            FederatedSimulator(cfg, GridSchedule.fixed(3), split, LEGENDRE_WIDTHS, init_network(LEGENDRE_WIDTHS, 5))

    def test_client_count_must_match(self):
        with pytest.raises(SimulationError):
            FederatedSimulator(FLConfig(num_clients=3, rounds=1), GridSchedule.fixed(3), legendre_split(2), LEGENDRE_WIDTHS)


if __name__ == "__main__":
    pytest.main([__file__])
