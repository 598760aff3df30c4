"""
Federation Module

Federated averaging of KAN clients with a grid-extension schedule and
budget-triggered sparsified uploads.
"""

from .schedule import GridSchedule, ScheduleError, grid_size_at
from .simulator import (
    FLConfig,
    AggregationFill,
    ClientUpdate,
    RoundMetrics,
    SimulationState,
    ExperimentResult,
    FederatedSimulator,
    SimulationError,
    MetricsSink,
    sample_clients,
    aggregate,
    run_round,
    run_experiment
)


def create_schedule(g0: int = 3, period: int = 200, deltas=(2, 7, 27, 47)) -> GridSchedule:
    """Create a grid schedule; the defaults step 3 -> 5 -> 12 -> 39 -> 86 every 200 rounds."""
    return GridSchedule(g0=g0, period=period, deltas=tuple(deltas))


__all__ = [
    'GridSchedule',
    'ScheduleError',
    'grid_size_at',
    'FLConfig',
    'AggregationFill',
    'ClientUpdate',
    'RoundMetrics',
    'SimulationState',
    'ExperimentResult',
    'FederatedSimulator',
    'SimulationError',
    'MetricsSink',
    'sample_clients',
    'aggregate',
    'run_round',
    'run_experiment',
    'create_schedule'
]
