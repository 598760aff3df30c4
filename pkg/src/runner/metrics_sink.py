"""
Per-round metrics file.

Rows are appended and the file is closed after every round, so a crashed run
keeps every completed round.
"""

import logging
from pathlib import Path
from typing import List, Union

import pandas as pd

from ..federation import RoundMetrics


logger = logging.getLogger(__name__)

METRICS_COLUMNS = ["round", "grid", "bits_total", "bits_budget", "rho", "rmse", "train_loss"]


class MetricsWriteError(RuntimeError):
    pass


class CsvMetricsSink:
    """Appends one comma-separated row per round to a metrics file."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(columns=METRICS_COLUMNS).to_csv(self.path, index=False)
        self.rows: List[dict] = []
        self._last_round = -1

    def __call__(self, metrics: RoundMetrics) -> None:
        if metrics.round_index != self._last_round + 1:
            raise MetricsWriteError(
                f"Round {metrics.round_index} follows round {self._last_round}; metrics must have no gaps"
            )
        row = metrics.to_row()
        frame = pd.DataFrame([row], columns=METRICS_COLUMNS)
        frame["bits_budget"] = frame["bits_budget"].astype("Int64")
        frame.to_csv(self.path, mode="a", header=False, index=False)
        self.rows.append(row)
        self._last_round = metrics.round_index


def read_metrics(path: Union[str, Path]) -> pd.DataFrame:
    """Load a metrics file; bits_budget is empty when the run had no budget."""
    return pd.read_csv(path, dtype={"bits_budget": "Int64"})
