"""Concurrent parameter sweeps: grid points x seed replications, rows in fixed order."""
from __future__ import annotations

import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Dict, List, Optional, Sequence

from config import QosSimConfig, SimulationConfig
from cost_accounting import marginal_cost_all
from des_core import is_saturated, simulate
from exceptions import AnalyticError, ScenarioError
from pricing import certainty_report, price_trace
from queueing_analytics import AnalyticRow, analytic_targets
from scenario_loader import SweepSpec, parse_int
from sim_types import DelayStats, Tier

STATUS_OK = "ok"
STATUS_UNSTABLE = "unstable"
STATUS_INVALID = "invalid"
STATUS_ERROR = "error"


@dataclass(frozen=True)
class SweepRow:
    """One tier of one (grid value, seed) point; skipped points carry no statistics."""

    swept_key: str
    grid_value: float
    seed: int
    tier: str
    status: str
    delay: Optional[DelayStats] = None
    price: Optional[DelayStats] = None
    blocked_frac: Optional[float] = None
    analytic_mean_delay: Optional[float] = None
    analytic_var_delay: Optional[float] = None


@dataclass(frozen=True)
class PointOutcome:
    grid_index: int
    grid_value: float
    seed: int
    rows: List[SweepRow]
    note: Optional[str] = None


def _flagged(spec: SweepSpec, index: int, value: float, seed: int, status: str, note: str) -> PointOutcome:
    rows = [SweepRow(spec.key, value, seed, tier.value, status) for tier in spec.tiers]
    return PointOutcome(index, value, seed, rows, note)


def _analytic_by_tier(rows: Sequence[AnalyticRow]) -> Dict[Tier, AnalyticRow]:
    return {tier: row for row in rows for tier in row.tiers}


def run_point(spec: SweepSpec, index: int, value: float, seed: int, settings: SimulationConfig) -> PointOutcome:
    """Simulate one grid value under one seed. Runs in a worker process."""
    try:
        scenario_file = spec.point(value)
    except ScenarioError as exc:
        return _flagged(spec, index, value, seed, STATUS_INVALID, exc.message)
    scenario = scenario_file.scenario.with_seed(seed)
    if is_saturated(scenario):
        return _flagged(spec, index, value, seed, STATUS_UNSTABLE, f"offered loads {scenario.offered_loads()}")

    try:
        analytic = _analytic_by_tier(analytic_targets(scenario))
    except AnalyticError:
        analytic = {}

    trace = simulate(scenario)
    scheme = scenario_file.pricing
    costs = None
    if scheme.needs_costs:
        costs = marginal_cost_all(trace, method=settings.mc_method, sample=settings.sample_for(len(trace)))
    report = certainty_report(trace, price_trace(trace, scheme, costs), scheme)

    rows = []
    for tier_row in report.by_tier:
        target = analytic.get(tier_row.tier)
        rows.append(
            SweepRow(
                swept_key=spec.key,
                grid_value=value,
                seed=seed,
                tier=tier_row.tier.value,
                status=STATUS_OK,
                delay=tier_row.delay,
                price=tier_row.price,
                blocked_frac=tier_row.blocked_frac,
                analytic_mean_delay=target.mean_sojourn if target else None,
                analytic_var_delay=target.var_sojourn if target else None,
            )
        )
    return PointOutcome(index, value, seed, rows)


def _tier_rank(tier: str) -> int:
    for rank, t in enumerate(Tier):
        if t.value == tier:
            return rank
    return len(Tier)


class SweepRunner:
    """Runs every (grid value, seed) pair with bounded concurrency."""

    def __init__(self, config: QosSimConfig, logger: Optional[logging.Logger] = None):
        self.config = config
        self.logger = logger or logging.getLogger("sweep_runner")

    def seeds(self, spec: SweepSpec, base_seed: Optional[int] = None) -> List[int]:
        """Replication seeds: consecutive integers from the scenario (or overriding) seed."""
        if base_seed is None:
            entry = spec.entries.get("seed")
            base_seed = parse_int(entry.value) if entry else 1
        return [base_seed + r for r in range(spec.replications)]

    async def run(self, spec: SweepSpec, base_seed: Optional[int] = None) -> List[SweepRow]:
        """Run the sweep and return rows ordered by grid value, then seed, then tier."""
        workers = self.config.sweep.parallel_workers
        settings = self.config.simulation
        jobs = [(i, value, seed) for i, value in enumerate(spec.grid) for seed in self.seeds(spec, base_seed)]
        self.logger.info(f"Sweeping '{spec.key}' over {len(spec.grid)} values x {spec.replications} seeds with {workers} worker(s)")

        semaphore = asyncio.Semaphore(workers)
        loop = asyncio.get_running_loop()
        executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None

        async def run_with_limit(index: int, value: float, seed: int) -> PointOutcome:
            async with semaphore:
                self.logger.debug(f"Point {spec.key}={value!r} seed={seed}")
                if executor is None:
                    return run_point(spec, index, value, seed, settings)
                return await loop.run_in_executor(executor, partial(run_point, spec, index, value, seed, settings))

        try:
            results = await asyncio.gather(*(run_with_limit(*job) for job in jobs), return_exceptions=True)
        finally:
            if executor is not None:
                executor.shutdown()

        outcomes: List[PointOutcome] = []
        for (index, value, seed), result in zip(jobs, results):
            if isinstance(result, BaseException):
                self.logger.error(f"Point {spec.key}={value!r} seed={seed} failed: {result}")
                outcomes.append(_flagged(spec, index, value, seed, STATUS_ERROR, str(result)))
                continue
            if result.note:
                self.logger.warning(f"Point {spec.key}={value!r} seed={seed} skipped: {result.note}")
            outcomes.append(result)

        outcomes.sort(key=lambda o: (o.grid_index, o.seed))
        return [row for o in outcomes for row in sorted(o.rows, key=lambda r: _tier_rank(r.tier))]
