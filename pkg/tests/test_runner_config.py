"""
Tests for experiment configuration, logging setup and the metrics file
"""

import pytest
import sys
import os
import logging

import yaml

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.compression import SparsifierKind
from src.federation import AggregationFill, GridSchedule, RoundMetrics
from src.kan import OptimizerKind
from src.runner import (
    OUTPUT_DIR_ENV,
    ConfigError,
    CsvMetricsSink,
    ExperimentMode,
    MetricsWriteError,
    METRICS_COLUMNS,
    build_config,
    configure_logging,
    deep_merge,
    load_config,
    read_config_file,
    read_metrics
)


ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))


class TestLoadConfig:
    """Test configuration layering"""

    def test_embedded_defaults(self):
        cfg = load_config()
        assert cfg.experiment.benchmark == "feynman-I.37.4"
        assert cfg.mode is ExperimentMode.COMPRESSED
        assert cfg.federation.num_clients == 100
        assert cfg.federation.rounds == 1000
        assert cfg.schedule.deltas == [2, 7, 27, 47]
        assert cfg.data.n_train == 30000

    def test_shipped_file_matches_defaults(self):
        cfg = load_config(os.path.join(ROOT, "config", "config.yaml"))
        assert cfg.echo() == load_config().echo()

    def test_desk_scale(self):
        cfg = load_config(desk_scale=True)
        assert cfg.federation.num_clients == 20
        assert cfg.federation.rounds == 200
        assert cfg.schedule.period == 50
        assert cfg.schedule.deltas == [2, 7]
        assert (cfg.data.n_train, cfg.data.n_test) == (3000, 500)

    def test_layering_order(self, tmp_path):
        path = tmp_path / "exp.yaml"
        path.write_text(yaml.safe_dump({
            "experiment": {"benchmark": "bessel", "seed": 3},
            "federation": {"num_clients": 7, "rounds": 50},
            "training": {"optimizer": "sgd"}
        }))
        cfg = load_config(path, desk_scale=True, overrides={"experiment": {"seed": 9}})
        assert cfg.experiment.benchmark == "bessel"
        assert cfg.federation.num_clients == 20
        assert cfg.federation.rounds == 200
        assert cfg.experiment.seed == 9
        assert cfg.train_config().optimizer is OptimizerKind.SGD

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.yaml")

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            read_config_file(path)

    def test_deep_merge(self):
        merged = deep_merge({"a": {"x": 1, "y": 2}, "b": 1}, {"a": {"y": 3}, "c": 4})
        assert merged == {"a": {"x": 1, "y": 3}, "b": 1, "c": 4}


class TestValidation:
    """Test that errors name the offending field"""

    @pytest.mark.parametrize("data,field", [
        ({"federation": {"num_clients": 0}}, "federation.num_clients"),
        ({"federation": {"clients": 3}}, "federation.clients"),
        ({"experiment": {"benchmark": "feynman-II.1.1"}}, "experiment.benchmark"),
        ({"model": {"bits_per_coeff": 24}}, "model.bits_per_coeff"),
        ({"schedule": {"deltas": [2, 0]}}, "schedule.deltas"),
        ({"experiment": {"mode": "dense"}}, "experiment.mode"),
    ])
    def test_field_named(self, data, field):
        with pytest.raises(ConfigError) as info:
            build_config(data)
        assert info.value.field == field
        assert str(info.value).startswith(field)

    def test_explicit_bits_needs_value(self):
        cfg = build_config({"budget": {"rule": "explicit-bits"}})
        with pytest.raises(ConfigError) as info:
            cfg.budget_bits()
        assert info.value.field == "budget.bits"


class TestDerivedSettings:
    """Test objects built from a configuration"""

    def test_budget_by_mode(self):
        # feynman-I.37.4 widths [3, 3, 2, 1]: 17 edges
        assert build_config({}).budget_bits() == 32 * (17 + 17 * 10)
        assert build_config({"experiment": {"mode": "grid-extended"}}).budget_bits() is None
        assert build_config({"experiment": {"mode": "fixed-grid"}}).budget_bits() is None
        explicit = build_config({"budget": {"rule": "explicit-bits", "bits": 4000}})
        assert explicit.budget_bits() == 4000

    def test_schedule_by_mode(self):
        assert build_config({"experiment": {"mode": "fixed-grid", "fixed_grid": 10}}).grid_schedule() == GridSchedule.fixed(10)
        assert build_config({}).grid_schedule() == GridSchedule(g0=3, period=200, deltas=(2, 7, 27, 47))

    def test_fl_config(self):
        cfg = build_config({
            "experiment": {"mode": "sparsify-variant", "sparsifier": "fixed", "seed": 2},
            "federation": {"num_clients": 10, "rounds": 5, "fill": "count-weighted"}
        })
        fl = cfg.fl_config()
        assert fl.num_clients == 10
        assert fl.seed == 2
        assert fl.sparsifier is SparsifierKind.FIXED
        assert fl.fill is AggregationFill.COUNT_WEIGHTED
        assert fl.budget == cfg.budget_bits()
        assert build_config({}).fl_config().sparsifier is SparsifierKind.TOP_K

    def test_run_names(self):
        assert build_config({}).run_name == "feynman-I.37.4-a1-cg-fkan-s0"
        fixed = build_config({"experiment": {"mode": "fixed-grid", "fixed_grid": 5}, "partition": {"alpha": None}})
        assert fixed.run_name == "feynman-I.37.4-iid-fixed-grid-5-s0"
        assert build_config({"output": {"name": "mine"}}).run_name == "mine"

    def test_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
        assert str(build_config({}).output_dir()) == "runs"
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
        assert build_config({}).output_dir() == tmp_path
        assert str(build_config({"output": {"dir": "elsewhere"}}).output_dir()) == "elsewhere"

    def test_echo_round_trip(self):
        cfg = load_config(desk_scale=True, overrides={"partition": {"alpha": None}})
        assert build_config(cfg.echo()) == cfg


class TestLogging:
    """Test logging setup"""

    def test_level_override(self):
        configure_logging(level="DEBUG")
        assert logging.getLogger().level == logging.DEBUG
        configure_logging(build_config({"logging": {"level": "WARNING"}}).logging)
        assert logging.getLogger().level == logging.WARNING


class TestMetricsSink:
    """Test the per-round metrics file"""

    def _metrics(self, t, budget=None):
        return RoundMetrics(
            round_index=t, grid=3, bits_total=768, bits_budget=budget, rho=1.0, rmse=0.5, train_loss=0.25
        )

    def test_rows_written(self, tmp_path):
        sink = CsvMetricsSink(tmp_path / "metrics.csv")
        for t in range(3):
            sink(self._metrics(t, budget=2112))
        table = read_metrics(tmp_path / "metrics.csv")
        assert list(table.columns) == METRICS_COLUMNS
        assert list(table["round"]) == [0, 1, 2]
        assert list(table["bits_budget"]) == [2112, 2112, 2112]

    def test_header_only_before_first_round(self, tmp_path):
        CsvMetricsSink(tmp_path / "metrics.csv")
        lines = (tmp_path / "metrics.csv").read_text().splitlines()
        assert lines == [",".join(METRICS_COLUMNS)]

    def test_unlimited_budget_is_empty(self, tmp_path):
        sink = CsvMetricsSink(tmp_path / "metrics.csv")
        sink(self._metrics(0))
        assert read_metrics(tmp_path / "metrics.csv")["bits_budget"].isna().all()

    def test_gap_rejected(self, tmp_path):
        sink = CsvMetricsSink(tmp_path / "metrics.csv")
        sink(self._metrics(0))
        with pytest.raises(MetricsWriteError):
            sink(self._metrics(2))


if __name__ == "__main__":
    pytest.main([__file__])
