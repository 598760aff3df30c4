"""
Runner Module

Configuration, logging setup, per-round metrics files and the commands behind
the kanfed entry point.
"""

from .config import (
    ExperimentConfig,
    ExperimentMode,
    ConfigError,
    DESK_SCALE,
    OUTPUT_DIR_ENV,
    deep_merge,
    build_config,
    load_config,
    read_config_file
)
from .logging_setup import configure_logging
from .metrics_sink import CsvMetricsSink, MetricsWriteError, METRICS_COLUMNS, read_metrics
from .commands import (
    RunOutcome,
    cmd_run,
    cmd_sweep,
    cmd_verify_bound,
    cmd_codec_bench,
    sweep_cells,
    summarize_sweep
)

__all__ = [
    'ExperimentConfig',
    'ExperimentMode',
    'ConfigError',
    'DESK_SCALE',
    'OUTPUT_DIR_ENV',
    'deep_merge',
    'build_config',
    'load_config',
    'read_config_file',
    'configure_logging',
    'CsvMetricsSink',
    'MetricsWriteError',
    'METRICS_COLUMNS',
    'read_metrics',
    'RunOutcome',
    'cmd_run',
    'cmd_sweep',
    'cmd_verify_bound',
    'cmd_codec_bench',
    'sweep_cells',
    'summarize_sweep'
]
