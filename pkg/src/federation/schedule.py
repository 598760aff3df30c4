"""
Grid-extension schedule: g(t) = g0 + sum of the first floor(t / T_p) deltas.
"""

from dataclasses import dataclass
from typing import Tuple


class ScheduleError(ValueError):
    """Raised for an invalid grid schedule."""
    pass


@dataclass(frozen=True)
class GridSchedule:
    """
    Piecewise-constant grid size over rounds.

    Once every delta has been applied the grid stays fixed.
    """
    g0: int
    period: int
    deltas: Tuple[int, ...] = ()

    def __post_init__(self):
        deltas = tuple(int(d) for d in self.deltas)
        if self.g0 < 1:
            raise ScheduleError(f"g0 must be >= 1, got {self.g0}")
        if self.period < 1:
            raise ScheduleError(f"period must be >= 1, got {self.period}")
        if any(d < 1 for d in deltas):
            raise ScheduleError(f"deltas must all be >= 1, got {self.deltas}")
        object.__setattr__(self, "deltas", deltas)

    @classmethod
    def fixed(cls, grid: int) -> "GridSchedule":
        return cls(g0=grid, period=1, deltas=())

    @property
    def final_grid(self) -> int:
        return self.g0 + sum(self.deltas)

    def steps_applied(self, t: int) -> int:
        return min(t // self.period, len(self.deltas))

    def extends_at(self, t: int) -> bool:
        """True when round t is the first round of a larger grid."""
        return t > 0 and t % self.period == 0 and t // self.period <= len(self.deltas)

    def boundaries(self, rounds: int) -> Tuple[Tuple[int, int], ...]:
        """(round, grid) pairs at which the grid changes within the first `rounds` rounds."""
        return tuple(
            (t, grid_size_at(t, self))
            for t in range(0, rounds)
            if t == 0 or self.extends_at(t)
        )


def grid_size_at(t: int, schedule: GridSchedule) -> int:
    """
    Grid size used in round t.

    Args:
        t: Round index, t >= 0
        schedule: Grid schedule

    Returns:
        g0 + delta_1 + ... + delta_min(floor(t / T_p), len(deltas))
    """
    if t < 0:
        raise ScheduleError(f"Round index must be >= 0, got {t}")
    return schedule.g0 + sum(schedule.deltas[:schedule.steps_applied(t)])
