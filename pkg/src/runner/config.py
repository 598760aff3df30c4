"""
Experiment Configuration

YAML sections validated by pydantic models. Layering, lowest first:
embedded defaults (full scale), the config file, the desk-scale preset,
command-line overrides.
"""

import copy
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..benchmarks import BENCHMARKS, PartitionConfig, get_benchmark
from ..compression import SparsifierKind, create_cost_model, match_grid_budget
from ..federation import AggregationFill, FLConfig, GridSchedule
from ..kan import OptimizerKind, TrainConfig


OUTPUT_DIR_ENV = "KANFED_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "./runs"


class ConfigError(ValueError):
    """Invalid configuration; names the offending dotted field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class ExperimentMode(Enum):
    FIXED_GRID = "fixed-grid"
    GRID_EXTENDED = "grid-extended"
    COMPRESSED = "cg-fkan"
    SPARSIFY_VARIANT = "sparsify-variant"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", use_enum_values=False)


class ExperimentSection(_Section):
    benchmark: str = "feynman-I.37.4"
    mode: ExperimentMode = ExperimentMode.COMPRESSED
    fixed_grid: int = Field(default=3, ge=1)
    sparsifier: Literal["random", "fixed", "optimal"] = "random"
    seed: int = Field(default=0, ge=0)

    @field_validator("benchmark")
    @classmethod
    def _known_benchmark(cls, value: str) -> str:
        if value not in BENCHMARKS:
            raise ValueError(f"unknown benchmark '{value}', choose from {sorted(BENCHMARKS)}")
        return value


class FederationSection(_Section):
    num_clients: int = Field(default=100, ge=1)
    rounds: int = Field(default=1000, ge=1)
    participation_fraction: float = Field(default=0.1, gt=0.0, le=1.0)
    fill: Literal["broadcast", "count-weighted"] = "broadcast"
    max_workers: int = Field(default=1, ge=1)
    log_every: int = Field(default=10, ge=0)


class TrainingSection(_Section):
    learning_rate: float = Field(default=1e-2, ge=0.0)
    local_epochs: int = Field(default=5, ge=1)
    batch_size: int = Field(default=32, ge=1)
    optimizer: Literal["adam", "sgd"] = "adam"


class ScheduleSection(_Section):
    g0: int = Field(default=3, ge=1)
    period: int = Field(default=200, ge=1)
    deltas: List[int] = Field(default_factory=lambda: [2, 7, 27, 47])

    @field_validator("deltas")
    @classmethod
    def _positive_deltas(cls, value: List[int]) -> List[int]:
        if any(d < 1 for d in value):
            raise ValueError("every delta must be >= 1")
        return value


class PartitionSection(_Section):
    alpha: Optional[float] = Field(default=1.0, gt=0.0)
    num_bins: int = Field(default=10, ge=2)
    max_retries: int = Field(default=10, ge=0)
    rebalance: bool = False


class ModelSection(_Section):
    order: int = Field(default=3, ge=1, le=5)
    hidden_range: float = Field(default=4.0, gt=0.0)
    bits_per_coeff: Literal[16, 32, 64] = 32


class BudgetSection(_Section):
    rule: Literal["match-grid", "explicit-bits"] = "match-grid"
    grid: int = Field(default=10, ge=1)
    bits: Optional[int] = Field(default=None, ge=0)


class DataSection(_Section):
    n_train: int = Field(default=30000, ge=1)
    n_test: int = Field(default=3000, ge=1)
    cache_dir: Optional[str] = None


class OutputSection(_Section):
    dir: Optional[str] = None
    name: Optional[str] = None


class LoggingSection(_Section):
    level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class SweepSection(_Section):
    benchmarks: List[str] = Field(default_factory=list)
    modes: List[ExperimentMode] = Field(
        default_factory=lambda: [ExperimentMode.FIXED_GRID, ExperimentMode.GRID_EXTENDED, ExperimentMode.COMPRESSED]
    )
    alphas: List[Optional[float]] = Field(default_factory=lambda: [1.0, 10.0, 100.0])
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2])
    fixed_grids: List[int] = Field(default_factory=lambda: [3, 5, 10, 30, 50, 100])

    @field_validator("benchmarks")
    @classmethod
    def _known_benchmarks(cls, value: List[str]) -> List[str]:
        unknown = [name for name in value if name not in BENCHMARKS]
        if unknown:
            raise ValueError(f"unknown benchmarks {unknown}")
        return value


class ExperimentConfig(_Section):
    """Fully resolved configuration of one run (and of a sweep's cells)."""
    experiment: ExperimentSection = Field(default_factory=ExperimentSection)
    federation: FederationSection = Field(default_factory=FederationSection)
    training: TrainingSection = Field(default_factory=TrainingSection)
    schedule: ScheduleSection = Field(default_factory=ScheduleSection)
    partition: PartitionSection = Field(default_factory=PartitionSection)
    model: ModelSection = Field(default_factory=ModelSection)
    budget: BudgetSection = Field(default_factory=BudgetSection)
    data: DataSection = Field(default_factory=DataSection)
    output: OutputSection = Field(default_factory=OutputSection)
    logging: LoggingSection = Field(default_factory=LoggingSection)
    sweep: SweepSection = Field(default_factory=SweepSection)

    @property
    def mode(self) -> ExperimentMode:
        return self.experiment.mode

    @property
    def widths(self) -> List[int]:
        return list(get_benchmark(self.experiment.benchmark).widths)

    @property
    def run_name(self) -> str:
        if self.output.name:
            return self.output.name
        mode = self.mode.value
        if self.mode is ExperimentMode.FIXED_GRID:
            mode = f"{mode}-{self.experiment.fixed_grid}"
        elif self.mode is ExperimentMode.SPARSIFY_VARIANT:
            mode = f"{mode}-{self.experiment.sparsifier}"
        alpha = "iid" if self.partition.alpha is None else f"a{self.partition.alpha:g}"
        return f"{self.experiment.benchmark}-{alpha}-{mode}-s{self.experiment.seed}"

    def grid_schedule(self) -> GridSchedule:
        if self.mode is ExperimentMode.FIXED_GRID:
            return GridSchedule.fixed(self.experiment.fixed_grid)
        return GridSchedule(g0=self.schedule.g0, period=self.schedule.period, deltas=tuple(self.schedule.deltas))

    def budget_bits(self) -> Optional[int]:
        """Per-client uplink budget; None for the modes that never sparsify."""
        if self.mode in (ExperimentMode.FIXED_GRID, ExperimentMode.GRID_EXTENDED):
            return None
        if self.budget.rule == "explicit-bits":
            if self.budget.bits is None:
                raise ConfigError("budget.bits", "explicit-bits rule needs a bit count")
            return self.budget.bits
        cm = create_cost_model(self.widths, self.model.order, self.model.bits_per_coeff)
        return match_grid_budget(cm, self.budget.grid)

    def sparsifier(self) -> SparsifierKind:
        if self.mode is ExperimentMode.SPARSIFY_VARIANT:
            return SparsifierKind(self.experiment.sparsifier)
        return SparsifierKind.TOP_K

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.training.learning_rate,
            local_epochs=self.training.local_epochs,
            batch_size=self.training.batch_size,
            optimizer=OptimizerKind(self.training.optimizer)
        )

    def fl_config(self) -> FLConfig:
        return FLConfig(
            num_clients=self.federation.num_clients,
            rounds=self.federation.rounds,
            participation_fraction=self.federation.participation_fraction,
            train=self.train_config(),
            budget=self.budget_bits(),
            seed=self.experiment.seed,
            order=self.model.order,
            hidden_range=self.model.hidden_range,
            bits_per_coeff=self.model.bits_per_coeff,
            sparsifier=self.sparsifier(),
            fill=AggregationFill(self.federation.fill),
            max_workers=self.federation.max_workers,
            log_every=self.federation.log_every
        )

    def partition_config(self, seed: int) -> PartitionConfig:
        return PartitionConfig(
            dirichlet_alpha=self.partition.alpha,
            num_bins=self.partition.num_bins,
            seed=seed,
            max_retries=self.partition.max_retries,
            rebalance=self.partition.rebalance
        )

    def output_dir(self) -> Path:
        return Path(self.output.dir or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


DESK_SCALE: Dict[str, Any] = {
    "federation": {"num_clients": 20, "rounds": 200},
    "schedule": {"g0": 3, "period": 50, "deltas": [2, 7]},
    "data": {"n_train": 3000, "n_test": 500},
    "sweep": {"fixed_grids": [3, 5, 10]}
}


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge override into a copy of base; sections merge, values replace."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _field_path(error: Dict[str, Any]) -> str:
    return ".".join(str(part) for part in error.get("loc", ()))


def build_config(data: Dict[str, Any]) -> ExperimentConfig:
    """Validate a raw mapping; the first failure becomes a ConfigError."""
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(_field_path(first), first.get("msg", "invalid value")) from e


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError("", f"Config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError("", f"Cannot parse {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("", f"{path} must hold a mapping of sections")
    return data


def load_config(
    path: Optional[Union[str, Path]] = None,
    desk_scale: bool = False,
    overrides: Optional[Dict[str, Any]] = None
) -> ExperimentConfig:
    """
    Resolve the configuration of a run.

    Args:
        path: Optional YAML file
        desk_scale: Apply the desk-scale preset over the file
        overrides: Nested mapping applied last (command-line flags)

    Returns:
        Validated ExperimentConfig
    """
    data: Dict[str, Any] = {}
    if path is not None:
        data = deep_merge(data, read_config_file(path))
    if desk_scale:
        data = deep_merge(data, DESK_SCALE)
    if overrides:
        data = deep_merge(data, overrides)
    return build_config(data)
