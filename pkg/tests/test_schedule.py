"""
Tests for the grid-extension schedule
"""

import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.federation import GridSchedule, ScheduleError, create_schedule, grid_size_at


class TestGridSchedule:
    """Test g(t)"""

    def setup_method(self):
        self.schedule = GridSchedule(g0=3, period=200, deltas=(2, 7, 27, 47))

    def test_full_scale_values(self):
        values = [grid_size_at(t, self.schedule) for t in (0, 200, 400, 600, 800)]
        assert values == [3, 5, 12, 39, 86]

    def test_constant_within_period(self):
        assert grid_size_at(199, self.schedule) == 3
        assert grid_size_at(399, self.schedule) == 5

    def test_stays_final_after_last_delta(self):
        assert grid_size_at(999, self.schedule) == 86
        assert grid_size_at(5000, self.schedule) == self.schedule.final_grid == 86

    def test_no_deltas(self):
        fixed = GridSchedule.fixed(10)
        assert [grid_size_at(t, fixed) for t in (0, 1, 50, 1000)] == [10, 10, 10, 10]
        assert not any(fixed.extends_at(t) for t in range(100))

    def test_extends_at(self):
        assert [t for t in range(1000) if self.schedule.extends_at(t)] == [200, 400, 600, 800]

    def test_boundaries(self):
        desk = GridSchedule(g0=3, period=50, deltas=(2, 7))
        assert desk.boundaries(200) == ((0, 3), (50, 5), (100, 12))

    def test_negative_round(self):
        with pytest.raises(ScheduleError):
            grid_size_at(-1, self.schedule)

    @pytest.mark.parametrize("kwargs", [
        {"g0": 0, "period": 10},
        {"g0": 3, "period": 0},
        {"g0": 3, "period": 10, "deltas": (2, 0)},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ScheduleError):
            GridSchedule(**kwargs)

    def test_factory_defaults(self):
        assert create_schedule() == self.schedule


if __name__ == "__main__":
    pytest.main([__file__])
