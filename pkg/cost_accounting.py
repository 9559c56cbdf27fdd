"""Marginal cost of each packet: the extra delay its presence imposes on others.

The cost is measured by counterfactual replay. Removing packet i and
rescheduling everything else gives every other packet's delay in a world
without i; the marginal cost is the sum of the delay differences over packets
delivered in both runs. For FIFO and partitioned scheduling the replay can be
restricted to the busy period holding i, up to the first packet whose start
time is unchanged; after that point the two schedules coincide.

Both paths compute the same floating-point delays and add them with
``math.fsum``, so their results are identical, not merely close.
"""
from __future__ import annotations

import logging
import math
from typing import Dict, List, Literal, Optional

import numpy as np

from des_core import schedule
from sim_types import CostMethod, CostRecord, DisciplineKind, PacketTrace
from streams import Purpose, substream

MethodChoice = Literal["auto", "full", "segment"]

_SEGMENT_DISCIPLINES = (DisciplineKind.FIFO, DisciplineKind.PARTITIONED)


class TraceColumns:
    """Plain-list view of a trace plus per-lane packet order, built once per trace."""

    def __init__(self, trace: PacketTrace):
        if trace.excluded is not None:
            raise ValueError("Marginal costs are defined on complete traces only")
        self.trace = trace
        self.arrival: List[float] = trace.arrival.tolist()
        self.demand: List[float] = trace.service_demand.tolist()
        self.lane: List[int] = trace.lane.tolist()
        self.start: List[float] = trace.start.tolist()
        self.wait: List[float] = trace.wait.tolist()
        self.delivered: List[bool] = trace.delivered.tolist()
        self.delay: List[float] = [w + d for w, d in zip(self.wait, self.demand)]
        self.by_lane: Dict[int, List[int]] = {}
        self.position: List[int] = [0] * len(self.arrival)
        for i, lane in enumerate(self.lane):
            members = self.by_lane.setdefault(lane, [])
            self.position[i] = len(members)
            members.append(i)


def _zero_cost(trace: PacketTrace, idx: int, method: CostMethod) -> CostRecord:
    class_id = int(trace.class_id[idx])
    return CostRecord(
        packet_id=idx,
        class_id=class_id,
        tier=trace.tier_of(class_id),
        mc=0.0,
        affected_count=0,
        method=method,
    )


def delay_differences(trace: PacketTrace, packet_id: int, columns: Optional[TraceColumns] = None) -> tuple[Dict[int, float], int]:
    """
    Full counterfactual replay without ``packet_id``.

    Returns the delay difference (original minus counterfactual) of every
    other packet delivered in both runs, keyed by packet id, and the number
    of packets whose admission changed.
    """
    cols = columns or TraceColumns(trace)
    idx = trace.index_of(packet_id)
    others = [j for j in range(len(cols.arrival)) if j != idx]
    cf = schedule(
        [cols.arrival[j] for j in others],
        [cols.demand[j] for j in others],
        [cols.lane[j] for j in others],
        trace.scenario.discipline,
    )
    diffs: Dict[int, float] = {}
    churn = 0
    for k, j in enumerate(others):
        if cols.delivered[j] and cf.delivered[k]:
            diffs[j] = cols.delay[j] - (cf.wait[k] + cols.demand[j])
        elif cols.delivered[j] != cf.delivered[k]:
            churn += 1
    return diffs, churn


def marginal_cost(trace: PacketTrace, packet_id: int, columns: Optional[TraceColumns] = None) -> CostRecord:
    """Marginal cost of ``packet_id`` by full replay; a blocked packet costs nothing."""
    cols = columns or TraceColumns(trace)
    idx = trace.index_of(packet_id)
    if not cols.delivered[idx]:
        return _zero_cost(trace, idx, CostMethod.FULL_REPLAY)
    diffs, churn = delay_differences(trace, packet_id, cols)
    class_id = int(trace.class_id[idx])
    return CostRecord(
        packet_id=idx,
        class_id=class_id,
        tier=trace.tier_of(class_id),
        mc=math.fsum(diffs.values()),
        affected_count=sum(1 for d in diffs.values() if d > 0),
        method=CostMethod.FULL_REPLAY,
        admission_churn=churn,
    )


def segment_replay_mc(
    trace: PacketTrace,
    packet_id: int,
    columns: Optional[TraceColumns] = None,
    logger: Optional[logging.Logger] = None,
) -> CostRecord:
    """
    Marginal cost of ``packet_id`` replaying only the affected stretch of its queue.

    Falls back to full replay for priority and blocking scheduling, where
    removing a packet couples the classes or changes admissions.
    """
    cols = columns or TraceColumns(trace)
    if trace.scenario.discipline.kind not in _SEGMENT_DISCIPLINES:
        log = logger or logging.getLogger("cost_accounting")
        log.debug(f"Segment replay not available for {trace.scenario.discipline.describe()}; using full replay")
        return marginal_cost(trace, packet_id, cols)

    idx = trace.index_of(packet_id)
    members = cols.by_lane[cols.lane[idx]]
    here = cols.position[idx]

    # Back up to the packet that opened the busy period; it started on arrival.
    first = here
    while first > 0 and cols.wait[members[first]] > 0:
        first -= 1

    diffs: List[float] = []
    prev = -math.inf
    for j in members[first:]:
        if j == idx:
            continue
        a = cols.arrival[j]
        s = a if a >= prev else prev
        prev = s + cols.demand[j]
        diffs.append(cols.delay[j] - ((s - a) + cols.demand[j]))
        if j > idx and s == cols.start[j]:
            break

    class_id = int(trace.class_id[idx])
    return CostRecord(
        packet_id=idx,
        class_id=class_id,
        tier=trace.tier_of(class_id),
        mc=math.fsum(diffs),
        affected_count=sum(1 for d in diffs if d > 0),
        method=CostMethod.SEGMENT_REPLAY,
    )


def sample_packets(trace: PacketTrace, size: int) -> List[int]:
    """Deterministic random subset of delivered packet ids, in id order."""
    if size < 0:
        raise ValueError(f"Sample size must be non-negative, got {size}")
    delivered = np.flatnonzero(trace.delivered)
    if size >= len(delivered):
        return delivered.tolist()
    rng = substream(trace.scenario.seed, Purpose.MC_SAMPLE)
    chosen = rng.choice(delivered, size=size, replace=False)
    return sorted(int(x) for x in chosen)


def marginal_cost_all(
    trace: PacketTrace,
    method: MethodChoice = "auto",
    sample: Optional[int] = None,
    logger: Optional[logging.Logger] = None,
) -> List[CostRecord]:
    """
    One cost record per delivered packet (or per sampled packet), in id order.

    ``auto`` uses segment replay where it applies and full replay elsewhere.
    Partitioned queues never interact, so a packet's cost only ever sums
    over its own queue.
    """
    log = logger or logging.getLogger("cost_accounting")
    cols = TraceColumns(trace)
    if sample is not None:
        packet_ids = sample_packets(trace, sample)
        log.info(f"Computing marginal costs for {len(packet_ids)} sampled packets of {len(trace)}")
    else:
        packet_ids = np.flatnonzero(trace.delivered).tolist()

    use_segment = method == "segment" or (
        method == "auto" and trace.scenario.discipline.kind in _SEGMENT_DISCIPLINES
    )
    if use_segment:
        return [segment_replay_mc(trace, pid, cols, log) for pid in packet_ids]
    return [marginal_cost(trace, pid, cols) for pid in packet_ids]
