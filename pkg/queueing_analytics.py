"""Closed-form results for the shared, partitioned, priority and loss queues.

Every function is a pure function of its inputs. Steady-state quantities are
only returned for stable queues (strict rho < 1); callers that want to look at
saturation use the simulator instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from exceptions import InvalidParameterError, InvalidPartitionError, NoAnalyticModelError, UnstableQueueError


class PriorityPolicy(str, Enum):
    """Service policy of the two-class priority queue."""
    NON_PREEMPTIVE = "non_preemptive"
    PREEMPTIVE_RESUME = "preemptive_resume"


@dataclass(frozen=True)
class QueueParams:
    """Arrival rate ``lam`` and service rate ``mu`` of one M/M/1 queue."""

    lam: float
    mu: float

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise InvalidParameterError("Service rate must be positive", "mu", self.mu)
        if not self.lam >= 0:
            raise InvalidParameterError("Arrival rate cannot be negative", "lambda", self.lam)

    @property
    def rho(self) -> float:
        return self.lam / self.mu


@dataclass(frozen=True)
class AnalyticResult:
    """Sojourn-time moments of a queue or of one class in it."""

    mean_sojourn: float
    var_sojourn: float
    std_sojourn: float
    mean_wait: float
    utilization: float

    @property
    def cov(self) -> float:
        return self.std_sojourn / self.mean_sojourn


@dataclass(frozen=True)
class PartitionSpec:
    """A reserved sub-queue carved out of a shared queue."""

    total: QueueParams
    reserved_lambda: float
    reserved_mu: float

    def __post_init__(self) -> None:
        if not 0 <= self.reserved_lambda <= self.total.lam:
            raise InvalidPartitionError(
                "Reserved arrival rate must lie in [0, total lambda]",
                reserved_lambda=self.reserved_lambda,
            )
        if not 0 < self.reserved_mu < self.total.mu:
            raise InvalidPartitionError(
                "Reserved service rate must lie strictly inside (0, total mu)",
                reserved_mu=self.reserved_mu,
            )

    @property
    def reserved(self) -> QueueParams:
        return QueueParams(self.reserved_lambda, self.reserved_mu)

    @property
    def best_effort(self) -> QueueParams:
        return QueueParams(self.total.lam - self.reserved_lambda, self.total.mu - self.reserved_mu)


@dataclass(frozen=True)
class IntservSplit:
    """Outcome of splitting a shared queue into reserved and best-effort queues."""

    reserved: AnalyticResult
    best_effort: AnalyticResult
    baseline: AnalyticResult
    delay_increase: float
    var_increase: float


@dataclass(frozen=True)
class PriorityParams:
    """Two-class priority M/M/1 with a common exponential service rate."""

    lambda_hi: float
    lambda_lo: float
    mu: float
    policy: PriorityPolicy = PriorityPolicy.NON_PREEMPTIVE

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise InvalidParameterError("Service rate must be positive", "mu", self.mu)
        for name, value in (("lambda_hi", self.lambda_hi), ("lambda_lo", self.lambda_lo)):
            if not value >= 0:
                raise InvalidParameterError("Arrival rate cannot be negative", name, value)
        object.__setattr__(self, "policy", PriorityPolicy(self.policy))

    @property
    def rho(self) -> float:
        return (self.lambda_hi + self.lambda_lo) / self.mu


@dataclass(frozen=True)
class PriorityResult:
    """Per-class mean waits and sojourns, with the FIFO wait for comparison."""

    wait_hi: float
    wait_lo: float
    sojourn_hi: float
    sojourn_lo: float
    fifo_wait: float


@dataclass(frozen=True)
class BlockingResult:
    """Stationary M/M/1/K quantities."""

    blocking_prob: float
    delivered_mean_sojourn: float
    throughput: float
    occupancy: tuple[float, ...] = field(default=())


@dataclass(frozen=True)
class ReservationPoint:
    """One grid point of the reservation sweep; flagged points carry no variance."""

    mu1: float
    rho1: Optional[float]
    best_effort_var: Optional[float]
    flagged: bool = False
    reason: Optional[str] = None


def _require_stable(rho: float, queue: Optional[str] = None) -> None:
    if rho >= 1:
        raise UnstableQueueError(rho, queue)


def mm1_metrics(p: QueueParams, queue: Optional[str] = None) -> AnalyticResult:
    """Return M/M/1 sojourn moments; the sojourn is exponential with rate mu - lambda."""
    _require_stable(p.rho, queue)
    mean = (1.0 / p.mu) / (1.0 - p.rho)
    return AnalyticResult(
        mean_sojourn=mean,
        var_sojourn=mean * mean,
        std_sojourn=mean,
        mean_wait=mean - 1.0 / p.mu,
        utilization=p.rho,
    )


def intserv_split(s: PartitionSpec) -> IntservSplit:
    """Compare the reserved and best-effort queues with the unpartitioned baseline."""
    baseline = mm1_metrics(s.total, "baseline")
    reserved = mm1_metrics(s.reserved, "reserved")
    best_effort = mm1_metrics(s.best_effort, "best_effort")
    return IntservSplit(
        reserved=reserved,
        best_effort=best_effort,
        baseline=baseline,
        delay_increase=best_effort.mean_sojourn - baseline.mean_sojourn,
        var_increase=best_effort.var_sojourn - baseline.var_sojourn,
    )


def priority_mm1_means(p: PriorityParams) -> PriorityResult:
    """
    Mean waits of the two-class priority M/M/1 queue.

    Non-preemptive classes wait W0 / ((1 - s_{k-1})(1 - s_k)) where W0 is the
    mean residual work found in service (lambda * E[S^2] / 2 = rho / mu) and
    s_k the cumulative load of classes 1..k. Under preemptive-resume a class
    only sees the residual work of itself and higher classes, and its service
    is stretched by 1 / (1 - s_{k-1}); the wait reported there is the total
    time not in service.
    """
    _require_stable(p.rho, "priority")
    service = 1.0 / p.mu
    rho_hi = p.lambda_hi / p.mu
    sigma_hi = rho_hi
    sigma_all = p.rho

    fifo_wait = (p.rho / p.mu) / (1.0 - p.rho)

    if p.policy is PriorityPolicy.NON_PREEMPTIVE:
        w0 = p.rho / p.mu
        wait_hi = w0 / (1.0 - sigma_hi)
        wait_lo = w0 / ((1.0 - sigma_hi) * (1.0 - sigma_all))
        return PriorityResult(
            wait_hi=wait_hi,
            wait_lo=wait_lo,
            sojourn_hi=wait_hi + service,
            sojourn_lo=wait_lo + service,
            fifo_wait=fifo_wait,
        )

    residual_hi = rho_hi / p.mu
    residual_all = p.rho / p.mu
    sojourn_hi = service + residual_hi / (1.0 - sigma_hi)
    sojourn_lo = service / (1.0 - sigma_hi) + residual_all / ((1.0 - sigma_hi) * (1.0 - sigma_all))
    return PriorityResult(
        wait_hi=sojourn_hi - service,
        wait_lo=sojourn_lo - service,
        sojourn_hi=sojourn_hi,
        sojourn_lo=sojourn_lo,
        fifo_wait=fifo_wait,
    )


def mm1k_blocking(p: QueueParams, capacity: int = 1) -> BlockingResult:
    """
    Stationary M/M/1/K results, where ``capacity`` counts the packet in
    service plus the waiting room. ``capacity=1`` is the pure loss system.
    The finite system is stable for any load.
    """
    if capacity < 1 or int(capacity) != capacity:
        raise InvalidParameterError("Capacity must be a positive integer", "capacity", capacity)
    capacity = int(capacity)

    # Normalize against the largest term so rho > 1 does not overflow.
    n = np.arange(capacity + 1, dtype=float)
    if p.rho == 0:
        weights = np.zeros(capacity + 1)
        weights[0] = 1.0
    elif p.rho <= 1:
        weights = np.power(p.rho, n)
    else:
        weights = np.power(1.0 / p.rho, capacity - n)
    occupancy = weights / weights.sum()

    blocking_prob = float(occupancy[-1])
    throughput = p.lam * (1.0 - blocking_prob)
    # A loss system only admits packets that find it empty.
    if throughput > 0 and capacity > 1:
        delivered_mean_sojourn = float(np.dot(n, occupancy)) / throughput
    else:
        delivered_mean_sojourn = 1.0 / p.mu
    return BlockingResult(
        blocking_prob=blocking_prob,
        delivered_mean_sojourn=delivered_mean_sojourn,
        throughput=throughput,
        occupancy=tuple(float(x) for x in occupancy),
    )


def reservation_variance_sweep(
    total: QueueParams,
    reserved_lambda: float,
    mu1_grid: Sequence[float],
) -> List[ReservationPoint]:
    """
    Best-effort sojourn variance as the reserved rate mu1 grows.

    Points that do not form a valid stable partition are kept in the output
    with ``flagged=True`` instead of aborting the sweep.
    """
    points: List[ReservationPoint] = []
    for mu1 in sorted(mu1_grid):
        try:
            split = intserv_split(PartitionSpec(total, reserved_lambda, mu1))
        except (InvalidPartitionError, InvalidParameterError, UnstableQueueError) as exc:
            points.append(ReservationPoint(mu1=mu1, rho1=None, best_effort_var=None, flagged=True, reason=exc.message))
            continue
        points.append(
            ReservationPoint(
                mu1=mu1,
                rho1=reserved_lambda / mu1,
                best_effort_var=split.best_effort.var_sojourn,
            )
        )
    return points


def is_strictly_increasing(values: Sequence[float]) -> bool:
    """True when every value is strictly larger than the one before it."""
    return all(b > a for a, b in zip(values, values[1:]))


def work_conservation_gap(p: PriorityParams) -> float:
    """
    Difference between rho_hi*W_hi + rho_lo*W_lo and rho*W_fifo.

    Zero (up to rounding) for the non-preemptive policy, which is the
    conservation law for work-conserving single-server disciplines.
    """
    r = priority_mm1_means(p)
    weighted = (p.lambda_hi / p.mu) * r.wait_hi + (p.lambda_lo / p.mu) * r.wait_lo
    return weighted - p.rho * r.fifo_wait



@dataclass(frozen=True)
class AnalyticRow:
    """Closed-form results for one queue of a scenario and the tiers it carries."""

    queue: str
    lam: float
    mu: float
    utilization: float
    mean_sojourn: float
    var_sojourn: Optional[float]
    std_sojourn: Optional[float]
    mean_wait: float
    blocking_prob: float = 0.0
    tiers: tuple = ()


def _row_from_result(queue: str, p: QueueParams, r: AnalyticResult, tiers: tuple) -> AnalyticRow:
    return AnalyticRow(
        queue=queue,
        lam=p.lam,
        mu=p.mu,
        utilization=r.utilization,
        mean_sojourn=r.mean_sojourn,
        var_sojourn=r.var_sojourn,
        std_sojourn=r.std_sojourn,
        mean_wait=r.mean_wait,
        tiers=tiers,
    )


def analytic_targets(scenario) -> List[AnalyticRow]:
    """
    Closed-form rows for a scenario, one per queue.

    Requires every class to draw exponential sizes of one common rate, so that
    each server is an M/M/1 queue with rate ``mu * size_rate``. Partitioned
    scenarios also get the unpartitioned ``baseline`` row, which carries no
    tiers. Priority rows have no closed-form variance.
    """
    from sim_types import DisciplineKind, Tier

    classes = list(scenario.classes)
    rates = {c.service.rates for c in classes if c.service.is_exponential}
    if any(not c.service.is_exponential for c in classes) or len(rates) > 1:
        raise NoAnalyticModelError(
            "Closed-form results need exponential sizes with one common rate",
            {"scenario": scenario.name},
        )
    size_rate = rates.pop()[0] if rates else 1.0
    present = tuple(t for t in Tier if any(c.tier is t for c in classes))
    d = scenario.discipline
    total = QueueParams(scenario.total_lambda, scenario.mu * size_rate)

    if d.kind is DisciplineKind.FIFO:
        return [_row_from_result("shared", total, mm1_metrics(total, "shared"), present)]

    if d.kind is DisciplineKind.PARTITIONED:
        reserved_lambda = sum(c.lam for c in classes if c.tier is Tier.RESERVED)
        spec = PartitionSpec(total, reserved_lambda, float(d.reserved_mu) * size_rate)
        split = intserv_split(spec)
        others = tuple(t for t in present if t is not Tier.RESERVED)
        return [
            _row_from_result("reserved", spec.reserved, split.reserved, (Tier.RESERVED,)),
            _row_from_result("best_effort", spec.best_effort, split.best_effort, others),
            _row_from_result("baseline", total, split.baseline, ()),
        ]

    if d.kind is DisciplineKind.PRIORITY:
        lambda_hi = sum(c.lam for c in classes if c.tier is Tier.HIGH_PRIORITY)
        params = PriorityParams(lambda_hi, total.lam - lambda_hi, total.mu, d.policy)
        r = priority_mm1_means(params)
        lows = tuple(t for t in present if t is not Tier.HIGH_PRIORITY)
        return [
            AnalyticRow("high_priority", params.lambda_hi, total.mu, params.lambda_hi / total.mu,
                        r.sojourn_hi, None, None, r.wait_hi, tiers=(Tier.HIGH_PRIORITY,)),
            AnalyticRow("low_priority", params.lambda_lo, total.mu, params.lambda_lo / total.mu,
                        r.sojourn_lo, None, None, r.wait_lo, tiers=lows),
        ]

    capacity = int(d.capacity)
    b = mm1k_blocking(total, capacity)
    # With no waiting room a delivered packet's sojourn is its service time.
    var = 1.0 / (total.mu * total.mu) if capacity == 1 else None
    return [
        AnalyticRow(
            queue="shared",
            lam=total.lam,
            mu=total.mu,
            utilization=b.throughput / total.mu,
            mean_sojourn=b.delivered_mean_sojourn,
            var_sojourn=var,
            std_sojourn=None if var is None else 1.0 / total.mu,
            mean_wait=b.delivered_mean_sojourn - 1.0 / total.mu,
            blocking_prob=b.blocking_prob,
            tiers=present,
        )
    ]
