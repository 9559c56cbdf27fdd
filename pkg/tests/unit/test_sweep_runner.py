"""Unit tests for sweep_runner module."""
from __future__ import annotations

import pytest

from config import QosSimConfig
from scenario_loader import parse_sweep_text
from sweep_runner import STATUS_INVALID, STATUS_OK, STATUS_UNSTABLE, SweepRunner, run_point

RESERVATION = """\
discipline = partitioned
mu = 1.0
reserved_mu = 0.4
horizon = 400
seed = 7
class.0.lambda = 0.2
class.0.tier = reserved
class.1.lambda = 0.3
class.1.tier = best_effort
sweep.key = reserved_mu
sweep.grid = {grid}
sweep.replications = {reps}
"""


def _spec(grid: str = "0.3, 0.4, 0.5", reps: int = 2):
    return parse_sweep_text(RESERVATION.format(grid=grid, reps=reps), name="res")


def _config(workers: int = 1) -> QosSimConfig:
    return QosSimConfig.from_flat_dict({"parallel_workers": workers})


class TestRunPoint:
    """Tests for a single sweep point."""

    def test_one_row_per_tier(self):
        spec = _spec()
        outcome = run_point(spec, 0, 0.4, 7, _config().simulation)
        assert [r.tier for r in outcome.rows] == ["reserved", "best_effort"]
        assert all(r.status == STATUS_OK for r in outcome.rows)
        best_effort = outcome.rows[1]
        assert best_effort.analytic_var_delay == pytest.approx(1.0 / 0.09)
        assert best_effort.delay.count > 0

    def test_invalid_point_is_flagged(self):
        spec = _spec(grid="0.3, 1.0")
        outcome = run_point(spec, 1, 1.0, 7, _config().simulation)
        assert {r.status for r in outcome.rows} == {STATUS_INVALID}
        assert outcome.rows[0].delay is None
        assert outcome.note

    def test_unstable_point_is_flagged(self):
        spec = _spec(grid="0.15, 0.4")
        outcome = run_point(spec, 0, 0.15, 7, _config().simulation)
        assert {r.status for r in outcome.rows} == {STATUS_UNSTABLE}


class TestSweepRunner:
    """Tests for SweepRunner."""

    def test_seeds_follow_scenario_seed(self):
        runner = SweepRunner(_config())
        assert runner.seeds(_spec(reps=3)) == [7, 8, 9]
        assert runner.seeds(_spec(reps=2), base_seed=100) == [100, 101]

    def test_large_scenario_seed_is_exact(self):
        spec = parse_sweep_text(RESERVATION.format(grid="0.4", reps=2).replace("seed = 7", "seed = 12345678901234567891"), name="res")
        assert SweepRunner(_config()).seeds(spec) == [12345678901234567891, 12345678901234567892]

    async def test_row_order(self):
        rows = await SweepRunner(_config()).run(_spec())
        keys = [(r.grid_value, r.seed, r.tier) for r in rows]
        expected = [
            (value, seed, tier)
            for value in (0.3, 0.4, 0.5)
            for seed in (7, 8)
            for tier in ("reserved", "best_effort")
        ]
        assert keys == expected

    async def test_mixed_grid_keeps_every_point(self):
        rows = await SweepRunner(_config()).run(_spec(grid="0.15, 0.4, 1.0", reps=1))
        assert [r.status for r in rows] == [
            STATUS_UNSTABLE, STATUS_UNSTABLE, STATUS_OK, STATUS_OK, STATUS_INVALID, STATUS_INVALID,
        ]

    async def test_single_point(self):
        rows = await SweepRunner(_config()).run(_spec(grid="0.4", reps=1))
        assert len(rows) == 2

    async def test_worker_count_does_not_change_results(self):
        spec = _spec(reps=1)
        inline = await SweepRunner(_config(1)).run(spec)
        pooled = await SweepRunner(_config(2)).run(spec)
        assert inline == pooled

    async def test_analytic_variance_grows_with_reservation(self):
        rows = await SweepRunner(_config()).run(_spec(reps=1))
        variances = [r.analytic_var_delay for r in rows if r.tier == "best_effort"]
        assert variances == sorted(variances)
        assert variances[0] < variances[-1]
