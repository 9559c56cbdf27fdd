"""Built-in acceptance suite: closed-form targets, directional claims and exactness checks.

Each check reports its target, what was observed and the tolerance applied.
Directional claims are judged over many seeds and pass when enough of them
agree. The quick scale shortens horizons, uses fewer seeds and doubles
relative tolerances.
"""
from __future__ import annotations

import logging
import math
import tempfile
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cost_accounting import marginal_cost, marginal_cost_all, segment_replay_mc, TraceColumns
from des_core import simulate, summarize
from pricing import PricingScheme, certainty_report, price_trace
from queueing_analytics import (
    PartitionSpec,
    PriorityParams,
    QueueParams,
    intserv_split,
    mm1_metrics,
    priority_mm1_means,
    reservation_variance_sweep,
)
from sim_types import (
    CostRecord,
    Discipline,
    PacketTrace,
    Scenario,
    ServiceDistribution,
    Tier,
    TrafficClassSpec,
)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one acceptance check."""

    name: str
    description: str
    passed: bool
    target: str
    observed: str
    tolerance: str
    detail: Optional[str] = None
    duration_seconds: float = 0.0


@dataclass
class ValidationRun:
    """All checks of one suite run."""

    scale: str
    started_at: datetime
    finished_at: datetime
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    @property
    def duration_seconds(self) -> float:
        return (self.finished_at - self.started_at).total_seconds()


@dataclass(frozen=True)
class Scale:
    """Run lengths and seed counts for one suite size."""

    name: str
    mm1_horizon: float
    mm1_warmup: float
    intserv_horizon: float
    priority_horizon: float
    sweep_horizon: float
    seed_horizon: float
    heavy_horizon: float
    blocking_horizon: float
    blocking_mc_horizon: float
    oracle_traces: int
    oracle_horizon: float
    mc_sample: int
    seeds: int
    required: int
    tolerance_factor: float = 1.0


FULL = Scale(
    name="full",
    mm1_horizon=2e6,
    mm1_warmup=1e5,
    intserv_horizon=1.7e6,
    priority_horizon=1e6,
    sweep_horizon=2e4,
    seed_horizon=1e4,
    heavy_horizon=2e4,
    blocking_horizon=2e5,
    blocking_mc_horizon=2e3,
    oracle_traces=50,
    oracle_horizon=1430.0,
    mc_sample=400,
    seeds=20,
    required=18,
)

QUICK = Scale(
    name="quick",
    mm1_horizon=2e5,
    mm1_warmup=1e4,
    intserv_horizon=2e5,
    priority_horizon=1e5,
    sweep_horizon=1e4,
    seed_horizon=4e3,
    heavy_horizon=1e4,
    blocking_horizon=5e4,
    blocking_mc_horizon=1e3,
    oracle_traces=5,
    oracle_horizon=430.0,
    mc_sample=150,
    seeds=10,
    required=9,
    tolerance_factor=2.0,
)

Outcome = Tuple[bool, str, str, str, Optional[str]]


def _classes(*rates: Tuple[float, Tier], service: Optional[ServiceDistribution] = None) -> Tuple[TrafficClassSpec, ...]:
    service = service or ServiceDistribution.exponential(1.0)
    return tuple(TrafficClassSpec(i, lam, service, tier) for i, (lam, tier) in enumerate(rates))


def _scenario(classes, discipline: Discipline, horizon: float, seed: int = 1, warmup: Optional[float] = None, name: str = "validate") -> Scenario:
    return Scenario(
        classes=classes,
        discipline=discipline,
        mu=1.0,
        horizon=horizon,
        warmup=horizon / 10.0 if warmup is None else warmup,
        seed=seed,
        name=name,
    )


def _rel_close(observed: float, target: float, tolerance: float) -> bool:
    return abs(observed - target) <= tolerance * abs(target)


def _steady_mean(trace: PacketTrace, tier: Tier, column: np.ndarray) -> float:
    ids = [c.class_id for c in trace.scenario.classes if c.tier is tier]
    mask = ~trace.warmup_mask & trace.delivered & np.isin(trace.class_id, ids)
    return float(np.mean(column[mask]))


def _mean_mc(costs: Sequence[CostRecord], tier: Tier, warmup: float, trace: PacketTrace) -> float:
    values = [c.mc for c in costs if c.tier is tier and trace.arrival[c.packet_id] >= warmup]
    return float(np.mean(values)) if values else math.nan


class ValidationSuite:
    """Runs the acceptance checks at one scale."""

    def __init__(self, scale: Scale = FULL, logger: Optional[logging.Logger] = None):
        self.scale = scale
        self.logger = logger or logging.getLogger("validation")

    @property
    def checks(self) -> List[Tuple[str, str, Callable[[], Outcome]]]:
        return [
            ("mm1_agreement", "Simulated M/M/1 mean delay and delay CoV match the closed form", self.check_mm1_agreement),
            ("intserv_delay_increase", "Partitioning raises best-effort delay by the closed-form difference", self.check_intserv),
            ("reservation_monotonicity", "Best-effort variance grows with the reserved rate", self.check_reservation_monotonicity),
            ("diffserv_direction", "Low priority incurs more delay and causes less", self.check_diffserv_direction),
            ("mc_oracle_equivalence", "Segment replay equals full replay exactly", self.check_mc_oracle),
            ("blocking_price_certainty", "A loss system delivers only zero-cost packets", self.check_blocking),
            ("flat_rate_pole", "Flat-rate prices have zero variance everywhere", self.check_flat_rate),
            ("heavy_tail_direction", "Hyperexponential sizes raise delay CoV", self.check_heavy_tail),
            ("determinism", "Simulating twice writes identical bytes", self.check_determinism),
        ]

    def run(self, only: Optional[Sequence[str]] = None) -> ValidationRun:
        started = datetime.now(timezone.utc)
        results: List[CheckResult] = []
        for name, description, check in self.checks:
            if only and name not in only:
                continue
            self.logger.info(f"Running check {name} ({self.scale.name})")
            t0 = time.perf_counter()
            try:
                passed, target, observed, tolerance, detail = check()
            except Exception as exc:
                self.logger.error(f"Check {name} crashed: {exc}", exc_info=True)
                passed, target, observed, tolerance, detail = False, "-", "-", "-", f"Exception: {exc}"
            result = CheckResult(name, description, passed, target, observed, tolerance, detail)
            results.append(replace(result, duration_seconds=time.perf_counter() - t0))
        return ValidationRun(self.scale.name, started, datetime.now(timezone.utc), results)

    def _agree(self, flags: Sequence[bool]) -> Tuple[bool, str]:
        count = sum(bool(f) for f in flags)
        return count >= self.scale.required, f"{count}/{len(flags)}"

    def check_mm1_agreement(self) -> Outcome:
        s = self.scale
        scenario = _scenario(_classes((0.5, Tier.DEFAULT)), Discipline.fifo(), s.mm1_horizon, warmup=s.mm1_warmup)
        target = mm1_metrics(QueueParams(0.5, 1.0))
        stats = summarize(simulate(scenario))[0]
        tol_mean, tol_cov = 0.02 * s.tolerance_factor, 0.03 * s.tolerance_factor
        passed = _rel_close(stats.mean, target.mean_sojourn, tol_mean) and _rel_close(stats.cov, target.cov, tol_cov)
        return (
            passed,
            f"mean_delay={target.mean_sojourn:.4f} cov={target.cov:.4f}",
            f"mean_delay={stats.mean:.4f} cov={stats.cov:.4f}",
            f"{tol_mean:.0%} / {tol_cov:.0%}",
            None,
        )

    def check_intserv(self) -> Outcome:
        s = self.scale
        split = intserv_split(PartitionSpec(QueueParams(0.6, 1.0), 0.2, 0.5))
        classes = _classes((0.2, Tier.RESERVED), (0.4, Tier.BEST_EFFORT))
        partitioned = simulate(_scenario(classes, Discipline.partitioned(0.5), s.intserv_horizon))
        shared = simulate(_scenario(classes, Discipline.fifo(), s.intserv_horizon))
        best_effort = _steady_mean(partitioned, Tier.BEST_EFFORT, partitioned.delay)
        steady = ~shared.warmup_mask & shared.delivered
        baseline = float(np.mean(shared.delay[steady]))
        tol = 0.03 * s.tolerance_factor
        passed = (
            math.isclose(split.best_effort.mean_sojourn, 10.0)
            and math.isclose(split.baseline.mean_sojourn, 2.5)
            and _rel_close(best_effort, 10.0, tol)
            and _rel_close(baseline, 2.5, tol)
        )
        return (
            passed,
            "best_effort=10.0 baseline=2.5",
            f"best_effort={best_effort:.4f} baseline={baseline:.4f}",
            f"{tol:.0%}",
            None,
        )

    def check_reservation_monotonicity(self) -> Outcome:
        s = self.scale
        grid = [0.3, 0.4, 0.5]
        points = reservation_variance_sweep(QueueParams(0.6, 1.0), 0.2, grid)
        analytic = [p.best_effort_var for p in points]
        analytic_ok = all(
            v is not None and math.isclose(v, t, rel_tol=1e-9)
            for v, t in zip(analytic, [100.0 / 9.0, 25.0, 100.0])
        )
        classes = _classes((0.2, Tier.RESERVED), (0.4, Tier.BEST_EFFORT))
        flags = []
        for seed in range(1, s.seeds + 1):
            variances = []
            for mu1 in grid:
                trace = simulate(_scenario(classes, Discipline.partitioned(mu1), s.sweep_horizon, seed=seed))
                costs = marginal_cost_all(trace)
                report = certainty_report(trace, price_trace(trace, PricingScheme.marginal_cost(), costs))
                variances.append(report.for_tier(Tier.BEST_EFFORT).price.variance)
            flags.append(all(b >= a for a, b in zip(variances, variances[1:])))
        agreed, count = self._agree(flags)
        return (
            analytic_ok and agreed,
            "analytic var 11.11, 25.0, 100.0; simulated price variance nondecreasing",
            "analytic var " + ", ".join(f"{v:.2f}" for v in analytic if v is not None) + f"; nondecreasing in {count} seeds",
            f">= {s.required}/{s.seeds} seeds",
            None,
        )

    def check_diffserv_direction(self) -> Outcome:
        s = self.scale
        classes = _classes((0.25, Tier.HIGH_PRIORITY), (0.25, Tier.LOW_PRIORITY))
        long_run = simulate(_scenario(classes, Discipline.priority(), s.priority_horizon))
        wait_hi = _steady_mean(long_run, Tier.HIGH_PRIORITY, long_run.wait)
        wait_lo = _steady_mean(long_run, Tier.LOW_PRIORITY, long_run.wait)
        target = priority_mm1_means(PriorityParams(0.25, 0.25, 1.0))
        tol = 0.03 * s.tolerance_factor
        waits_ok = _rel_close(wait_hi, target.wait_hi, tol) and _rel_close(wait_lo, target.wait_lo, tol)

        checks: Dict[str, List[bool]] = {"lo_delay_up": [], "lo_var_up": [], "lo_mc_down": [], "hi_delay_down": []}
        for seed in range(1, s.seeds + 1):
            priority = simulate(_scenario(classes, Discipline.priority(), s.seed_horizon, seed=seed))
            fifo = simulate(_scenario(classes, Discipline.fifo(), s.seed_horizon, seed=seed))
            stats_p, stats_f = summarize(priority), summarize(fifo)
            checks["lo_delay_up"].append(stats_p[1].mean > stats_f[1].mean)
            checks["lo_var_up"].append(stats_p[1].variance > stats_f[1].variance)
            checks["hi_delay_down"].append(stats_p[0].mean < stats_f[0].mean)
            warmup = priority.scenario.warmup
            mc_p = _mean_mc(marginal_cost_all(priority, sample=s.mc_sample), Tier.LOW_PRIORITY, warmup, priority)
            mc_f = _mean_mc(marginal_cost_all(fifo, sample=s.mc_sample), Tier.LOW_PRIORITY, warmup, fifo)
            checks["lo_mc_down"].append(mc_p < mc_f)

        verdicts = {name: self._agree(flags) for name, flags in checks.items()}
        passed = waits_ok and all(ok for ok, _ in verdicts.values())
        observed = f"wait_hi={wait_hi:.4f} wait_lo={wait_lo:.4f}; " + ", ".join(
            f"{name} {count}" for name, (_, count) in verdicts.items()
        )
        return (
            passed,
            f"wait_hi={target.wait_hi:.4f} wait_lo={target.wait_lo:.4f}; every direction holds",
            observed,
            f"{tol:.0%}; >= {s.required}/{s.seeds} seeds",
            None,
        )

    def check_mc_oracle(self) -> Outcome:
        s = self.scale
        mismatches = 0
        packets = 0
        for seed in range(1, s.oracle_traces + 1):
            for discipline, classes in (
                (Discipline.fifo(), _classes((0.7, Tier.DEFAULT))),
                (Discipline.partitioned(0.4), _classes((0.25, Tier.RESERVED), (0.45, Tier.BEST_EFFORT))),
            ):
                trace = simulate(_scenario(classes, discipline, s.oracle_horizon, seed=seed, warmup=0.0))
                cols = TraceColumns(trace)
                for pid in range(len(trace)):
                    packets += 1
                    if segment_replay_mc(trace, pid, cols).mc != marginal_cost(trace, pid, cols).mc:
                        mismatches += 1
        return (
            mismatches == 0,
            "0 mismatches",
            f"{mismatches} mismatches over {packets} packets",
            "exact",
            None,
        )

    def check_blocking(self) -> Outcome:
        s = self.scale
        classes = _classes((1.0, Tier.DEFAULT))
        long_run = simulate(_scenario(classes, Discipline.blocking(1), s.blocking_horizon))
        steady = ~long_run.warmup_mask
        blocked = float(np.count_nonzero(steady & ~long_run.delivered)) / float(np.count_nonzero(steady))
        tol = 0.02 * s.tolerance_factor

        small = simulate(_scenario(classes, Discipline.blocking(1), s.blocking_mc_horizon))
        costs = marginal_cost_all(small)
        report = certainty_report(small, price_trace(small, PricingScheme.marginal_cost(), costs))
        all_zero = all(c.mc == 0.0 for c in costs)
        price_var = report.for_tier(Tier.DEFAULT).price.variance
        passed = _rel_close(blocked, 0.5, tol) and all_zero and price_var == 0.0
        return (
            passed,
            "blocking=0.5; every mc 0; price variance 0",
            f"blocking={blocked:.4f}; every mc 0: {all_zero}; price variance {price_var!r}",
            f"{tol:.0%}; exact",
            None,
        )

    def _suite_scenarios(self) -> List[Scenario]:
        h = self.scale.seed_horizon
        return [
            _scenario(_classes((0.5, Tier.DEFAULT)), Discipline.fifo(), h),
            _scenario(_classes((0.2, Tier.RESERVED), (0.4, Tier.BEST_EFFORT)), Discipline.partitioned(0.5), h),
            _scenario(_classes((0.25, Tier.HIGH_PRIORITY), (0.25, Tier.LOW_PRIORITY)), Discipline.priority(), h),
            _scenario(_classes((0.25, Tier.HIGH_PRIORITY), (0.25, Tier.LOW_PRIORITY)), Discipline.priority("preemptive_resume"), h),
            _scenario(_classes((1.0, Tier.DEFAULT)), Discipline.blocking(1), h),
            _scenario(_classes((0.5, Tier.DEFAULT), service=ServiceDistribution.balanced_h2(1.0, 2.0)), Discipline.fifo(), h),
        ]

    def check_flat_rate(self) -> Outcome:
        scheme = PricingScheme.flat_rate(0.1)
        nonzero = []
        for scenario in self._suite_scenarios():
            trace = simulate(scenario)
            report = certainty_report(trace, price_trace(trace, scheme), scheme)
            for row in report.rows:
                if not row.price.empty and row.price.variance != 0.0:
                    nonzero.append(f"{scenario.discipline.describe()}/{row.tier.value}")
        return (
            not nonzero,
            "price variance 0 in every group",
            "all zero" if not nonzero else "nonzero in " + ", ".join(nonzero),
            "exact",
            None,
        )

    def check_heavy_tail(self) -> Outcome:
        s = self.scale
        heavy = _classes((0.5, Tier.DEFAULT), service=ServiceDistribution.balanced_h2(1.0, 2.0))
        light = _classes((0.5, Tier.DEFAULT))
        flags = []
        for seed in range(1, s.seeds + 1):
            cov_heavy = summarize(simulate(_scenario(heavy, Discipline.fifo(), s.heavy_horizon, seed=seed)))[0].cov
            cov_light = summarize(simulate(_scenario(light, Discipline.fifo(), s.heavy_horizon, seed=seed)))[0].cov
            flags.append(cov_heavy > cov_light)
        agreed, count = self._agree(flags)
        return (
            agreed,
            "heavy-tailed delay CoV above exponential baseline",
            f"higher in {count} seeds",
            f">= {s.required}/{s.seeds} seeds",
            None,
        )

    def check_determinism(self) -> Outcome:
        from config import QosSimConfig
        from experiments_cli import cmd_simulate

        text = "\n".join([
            "discipline = priority",
            "mu = 1.0",
            "horizon = 2000",
            "seed = 7",
            "class.0.lambda = 0.3",
            "class.0.tier = high_priority",
            "class.1.lambda = 0.3",
            "class.1.tier = low_priority",
            "",
        ])
        config = QosSimConfig()
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            scenario_path = root / "determinism.scn"
            scenario_path.write_text(text, encoding="utf-8")
            outputs = []
            for run in ("a", "b"):
                cmd_simulate(scenario_path, root / run, config, self.logger, quiet=True)
                outputs.append({p.name: p.read_bytes() for p in sorted((root / run).iterdir())})
        identical = outputs[0] == outputs[1] and bool(outputs[0])
        return (
            identical,
            "identical bytes",
            f"{len(outputs[0])} files identical: {identical}",
            "exact",
            None,
        )
