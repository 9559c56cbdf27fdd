"""Seeded discrete-event simulation of one shared transmission resource.

Arrivals and packet sizes are drawn up front from per-class substreams; the
schedule is then a deterministic function of (arrivals, service demands,
discipline). ``simulate`` and ``replay`` both run that same scheduler, which
is what makes counterfactual replays exact.

Event order at equal timestamps: departures first, then arrivals in packet-id
order. A packet that finds its server idle starts at once, whatever its tier.
"""
from __future__ import annotations

import bisect
import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from exceptions import TraceError
from queueing_analytics import PriorityPolicy
from sim_types import DelayStats, Discipline, DisciplineKind, PacketTrace, Scenario, Tier
from streams import Purpose, poisson_arrivals, substream

_NAN = float("nan")


@dataclass
class Schedule:
    """Per-packet outcome of one scheduler run, as plain lists."""

    start: List[float]
    departure: List[float]
    wait: List[float]
    delivered: List[bool]


def _fifo_lanes(arrival: Sequence[float], demand: Sequence[float], lane: Sequence[int]) -> Schedule:
    """Independent FIFO servers, one per lane (Lindley recursion)."""
    n = len(arrival)
    start = [0.0] * n
    departure = [0.0] * n
    wait = [0.0] * n
    last: Dict[int, float] = {}
    for i in range(n):
        a = arrival[i]
        prev = last.get(lane[i], -math.inf)
        s = a if a >= prev else prev
        d = s + demand[i]
        start[i] = s
        departure[i] = d
        wait[i] = s - a
        last[lane[i]] = d
    return Schedule(start, departure, wait, [True] * n)


def _priority_non_preemptive(arrival: Sequence[float], demand: Sequence[float], level: Sequence[int]) -> Schedule:
    """One server; at each completion the oldest packet of the best level goes next."""
    n = len(arrival)
    start = [0.0] * n
    departure = [0.0] * n
    wait = [0.0] * n
    queues = [deque() for _ in range(max(level, default=0) + 1)]
    now = -math.inf
    i = 0
    while True:
        while i < n and arrival[i] < now:
            queues[level[i]].append(i)
            i += 1
        j = None
        for q in queues:
            if q:
                j = q.popleft()
                break
        if j is None:
            if i >= n:
                break
            j = i
            i += 1
            s = arrival[j]
        else:
            s = now
        start[j] = s
        now = s + demand[j]
        departure[j] = now
        wait[j] = s - arrival[j]
    return Schedule(start, departure, wait, [True] * n)


def _priority_preemptive(arrival: Sequence[float], demand: Sequence[float], level: Sequence[int]) -> Schedule:
    """One server; a better-level arrival interrupts service, which later resumes."""
    n = len(arrival)
    start = [_NAN] * n
    departure = [0.0] * n
    wait = [0.0] * n
    remaining = list(demand)
    preempted = [False] * n
    queues = [deque() for _ in range(max(level, default=0) + 1)]
    current: Optional[int] = None
    now = -math.inf
    i = 0
    while i < n or current is not None or any(queues):
        if current is None:
            for q in queues:
                if q:
                    current = q.popleft()
                    break
            if current is None:
                current = i
                i += 1
                now = arrival[current]
            if math.isnan(start[current]):
                start[current] = now
        done = now + remaining[current]
        upcoming = arrival[i] if i < n else math.inf
        if done <= upcoming:
            now = done
            departure[current] = now
            current = None
            continue
        remaining[current] -= upcoming - now
        now = upcoming
        j = i
        i += 1
        if level[j] < level[current]:
            preempted[current] = True
            queues[level[current]].appendleft(current)
            current = j
            start[j] = now
        else:
            queues[level[j]].append(j)

    for k in range(n):
        if preempted[k]:
            wait[k] = max(departure[k] - arrival[k] - demand[k], start[k] - arrival[k])
        else:
            wait[k] = start[k] - arrival[k]
    return Schedule(start, departure, wait, [True] * n)


def _blocking(arrival: Sequence[float], demand: Sequence[float], capacity: int) -> Schedule:
    """FIFO server admitting a packet only while fewer than ``capacity`` are present."""
    n = len(arrival)
    start = [_NAN] * n
    departure = [_NAN] * n
    wait = [_NAN] * n
    delivered = [False] * n
    present: deque = deque()
    last = -math.inf
    for i in range(n):
        a = arrival[i]
        while present and present[0] <= a:
            present.popleft()
        if len(present) >= capacity:
            continue
        s = a if a >= last else last
        d = s + demand[i]
        start[i] = s
        departure[i] = d
        wait[i] = s - a
        delivered[i] = True
        present.append(d)
        last = d
    return Schedule(start, departure, wait, delivered)


def schedule(
    arrival: Sequence[float],
    demand: Sequence[float],
    lane: Sequence[int],
    discipline: Discipline,
) -> Schedule:
    """
    Run the discipline over packets given in arrival order.

    ``lane`` is the server index for partitioned scheduling and the priority
    level (0 = served first) for priority scheduling; it is ignored otherwise.
    """
    kind = discipline.kind
    if kind is DisciplineKind.FIFO:
        return _fifo_lanes(arrival, demand, [0] * len(arrival))
    if kind is DisciplineKind.PARTITIONED:
        return _fifo_lanes(arrival, demand, lane)
    if kind is DisciplineKind.PRIORITY:
        if discipline.policy is PriorityPolicy.PREEMPTIVE_RESUME:
            return _priority_preemptive(arrival, demand, lane)
        return _priority_non_preemptive(arrival, demand, lane)
    return _blocking(arrival, demand, int(discipline.capacity))


def _check_priority_tiers(s: Scenario, log: logging.Logger) -> None:
    tiers = {c.tier for c in s.classes if c.lam > 0}
    if Tier.HIGH_PRIORITY not in tiers or tiers == {Tier.HIGH_PRIORITY}:
        log.warning(f"Scenario '{s.name}': priority discipline has a single populated level and degenerates to FIFO")


def is_saturated(s: Scenario) -> bool:
    """True when any queue of an infinite-buffer discipline is offered rho >= 1."""
    if s.discipline.kind is DisciplineKind.BLOCKING:
        return False
    return any(rho >= 1 for rho in s.offered_loads().values())


def simulate(s: Scenario, logger: Optional[logging.Logger] = None) -> PacketTrace:
    """Generate arrivals and sizes for ``s`` and schedule them under its discipline."""
    log = logger or logging.getLogger("des_core")

    epochs: List[np.ndarray] = []
    sizes: List[np.ndarray] = []
    owners: List[np.ndarray] = []
    generated: Dict[int, int] = {}
    for spec in s.classes:
        t = poisson_arrivals(substream(s.seed, Purpose.ARRIVALS, spec.class_id), spec.lam, s.horizon)
        size = spec.service.sample(substream(s.seed, Purpose.SIZES, spec.class_id), len(t))
        epochs.append(t)
        sizes.append(size)
        owners.append(np.full(len(t), spec.class_id, dtype=np.int64))
        generated[spec.class_id] = len(t)

    arrival = np.concatenate(epochs) if epochs else np.empty(0)
    size = np.concatenate(sizes) if sizes else np.empty(0)
    class_id = np.concatenate(owners) if owners else np.empty(0, dtype=np.int64)
    order = np.lexsort((class_id, arrival))
    arrival, size, class_id = arrival[order], size[order], class_id[order]

    rate_of = {c.class_id: s.server_rate(c.tier) for c in s.classes}
    lane_of = {c.class_id: s.lane(c.tier) for c in s.classes}
    ids = class_id.tolist()
    demand = size / np.array([rate_of[c] for c in ids], dtype=float)
    lane = np.array([lane_of[c] for c in ids], dtype=np.int64)

    saturated = is_saturated(s)
    if saturated:
        log.warning(f"Scenario '{s.name}' is saturated: offered loads {s.offered_loads()}")
    if s.discipline.kind is DisciplineKind.PRIORITY:
        _check_priority_tiers(s, log)

    result = schedule(arrival.tolist(), demand.tolist(), lane.tolist(), s.discipline)
    delivered = np.array(result.delivered, dtype=bool)
    blocked = {cid: int(np.count_nonzero((class_id == cid) & ~delivered)) for cid in generated}
    log.debug(f"Simulated '{s.name}' ({s.discipline.describe()}): {len(arrival)} packets, blocked {sum(blocked.values())}")

    return PacketTrace(
        scenario=s,
        class_id=class_id,
        lane=lane,
        arrival=arrival,
        service_demand=demand,
        start=np.array(result.start, dtype=float),
        departure=np.array(result.departure, dtype=float),
        wait=np.array(result.wait, dtype=float),
        delivered=delivered,
        generated=generated,
        blocked=blocked,
        saturated=saturated,
    )


def replay(trace: PacketTrace, exclude: int) -> PacketTrace:
    """
    Reschedule the recorded arrivals and service demands without ``exclude``.

    No randomness is drawn; every other packet keeps its arrival time and
    service demand.
    """
    if trace.excluded is not None:
        raise TraceError("Cannot replay a trace that is already a counterfactual", {"excluded": trace.excluded})
    idx = trace.index_of(exclude)
    keep = np.ones(len(trace), dtype=bool)
    keep[idx] = False

    arrival = trace.arrival[keep]
    demand = trace.service_demand[keep]
    lane = trace.lane[keep]
    class_id = trace.class_id[keep]
    result = schedule(arrival.tolist(), demand.tolist(), lane.tolist(), trace.scenario.discipline)
    delivered = np.array(result.delivered, dtype=bool)

    generated = dict(trace.generated)
    generated[int(trace.class_id[idx])] -= 1
    blocked = {cid: int(np.count_nonzero((class_id == cid) & ~delivered)) for cid in generated}
    return PacketTrace(
        scenario=trace.scenario,
        class_id=class_id,
        lane=lane,
        arrival=arrival,
        service_demand=demand,
        start=np.array(result.start, dtype=float),
        departure=np.array(result.departure, dtype=float),
        wait=np.array(result.wait, dtype=float),
        delivered=delivered,
        generated=generated,
        blocked=blocked,
        saturated=trace.saturated,
        excluded=exclude,
    )


def sample_stats(values: np.ndarray, blocked: int = 0) -> DelayStats:
    """
    Unbiased sample statistics with nearest-rank quantiles.

    An empty sample yields the explicit empty marker; a single value has zero
    variance; CoV is left undefined (None) when the mean is zero.
    """
    values = np.asarray(values, dtype=float)
    n = int(values.shape[0])
    if n == 0:
        return DelayStats.empty_marker(blocked=blocked)
    if np.all(values == values[0]):
        # Constant samples (flat prices, zero costs) must report exactly zero spread.
        mean, variance = float(values[0]), 0.0
    else:
        mean = float(np.mean(values))
        variance = float(np.var(values, ddof=1))
    std = math.sqrt(variance)
    p50, p95, p99 = (float(q) for q in np.quantile(values, [0.5, 0.95, 0.99], method="inverted_cdf"))
    return DelayStats(
        count=n,
        mean=mean,
        variance=variance,
        std=std,
        cov=std / mean if mean > 0 else None,
        p50=p50,
        p95=p95,
        p99=p99,
        blocked=blocked,
    )


def summarize(trace: PacketTrace) -> Dict[int, DelayStats]:
    """Post-warmup delay statistics per class; blocked packets are only counted."""
    steady = ~trace.warmup_mask
    delay = trace.delay
    stats: Dict[int, DelayStats] = {}
    for spec in trace.scenario.classes:
        mine = steady & (trace.class_id == spec.class_id)
        blocked = int(np.count_nonzero(mine & ~trace.delivered))
        stats[spec.class_id] = sample_stats(delay[mine & trace.delivered], blocked=blocked)
    return stats


def _busy_periods(starts: Sequence[float], ends: Sequence[float]) -> List[List[float]]:
    periods: List[List[float]] = []
    for s, e in sorted(zip(starts, ends)):
        if periods and s <= periods[-1][1]:
            periods[-1][1] = max(periods[-1][1], e)
        else:
            periods.append([s, e])
    return periods


def server_idle_while_waiting(trace: PacketTrace) -> bool:
    """
    True if some server sits idle while a packet waits for service.

    A packet waits over [arrival, start). Partitioned scheduling checks both
    servers against every waiting packet, so an unused reservation counts even
    when no reserved packet ever arrived. Other disciplines have one server
    whose busy time is the union of delivered packets' [start, departure).
    """
    delivered = trace.delivered
    if trace.scenario.discipline.kind is DisciplineKind.PARTITIONED:
        servers = [delivered & (trace.lane == lane_id) for lane_id in (0, 1)]
    else:
        servers = [delivered]
    waiting = delivered & (trace.start > trace.arrival)
    waits = list(zip(trace.arrival[waiting].tolist(), trace.start[waiting].tolist()))
    for mine in servers:
        periods = _busy_periods(trace.start[mine].tolist(), trace.departure[mine].tolist())
        period_starts = [p[0] for p in periods]
        for a, s in waits:
            k = bisect.bisect_right(period_starts, a) - 1
            if k < 0 or periods[k][1] < s:
                return True
    return False
