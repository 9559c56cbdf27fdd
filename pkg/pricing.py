"""Prices from delay externalities, and the certainty table that compares them with delay.

A marginal-cost price is the packet's externality times the value of time; a
flat-rate price is the same constant for every delivered packet. The
certainty report puts delay spread (bandwidth certainty) and price spread
(price certainty) side by side per class and per tier.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from des_core import sample_stats
from exceptions import InvalidScenarioError
from sim_types import CostRecord, DelayStats, PacketTrace, Tier


class PricingKind(str, Enum):
    """How packets are charged."""
    MARGINAL_COST = "marginal_cost"
    FLAT_RATE = "flat_rate"


@dataclass(frozen=True)
class PricingScheme:
    """Pricing regime; ``value_of_time`` applies to marginal-cost pricing, ``price`` to flat rate."""

    kind: PricingKind = PricingKind.MARGINAL_COST
    value_of_time: float = 1.0
    price: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PricingKind(self.kind))
        if not self.value_of_time > 0:
            raise InvalidScenarioError("value_of_time must be positive", field="value_of_time")
        if not self.price >= 0:
            raise InvalidScenarioError("Flat price cannot be negative", field="flat_price")

    @classmethod
    def marginal_cost(cls, value_of_time: float = 1.0) -> "PricingScheme":
        return cls(PricingKind.MARGINAL_COST, value_of_time=value_of_time)

    @classmethod
    def flat_rate(cls, price: float = 1.0) -> "PricingScheme":
        return cls(PricingKind.FLAT_RATE, price=price)

    @property
    def needs_costs(self) -> bool:
        return self.kind is PricingKind.MARGINAL_COST

    def describe(self) -> str:
        if self.kind is PricingKind.FLAT_RATE:
            return f"flat_rate({self.price!r})"
        return f"marginal_cost({self.value_of_time!r})"


@dataclass(frozen=True)
class PacketPrice:
    packet_id: int
    class_id: int
    tier: Tier
    price: float


def price_packets(costs: Sequence[CostRecord], scheme: PricingScheme) -> List[PacketPrice]:
    """Price each costed packet under ``scheme``, keeping the order of ``costs``."""
    if scheme.kind is PricingKind.FLAT_RATE:
        return [PacketPrice(c.packet_id, c.class_id, c.tier, scheme.price) for c in costs]
    return [PacketPrice(c.packet_id, c.class_id, c.tier, scheme.value_of_time * c.mc) for c in costs]


def price_trace(
    trace: PacketTrace,
    scheme: PricingScheme,
    costs: Optional[Sequence[CostRecord]] = None,
) -> Dict[int, float]:
    """
    Prices keyed by packet id.

    Flat-rate prices need no cost accounting and cover every delivered
    packet. Marginal-cost prices cover exactly the packets in ``costs``,
    which may be a sample.
    """
    if scheme.kind is PricingKind.FLAT_RATE and costs is None:
        return {int(pid): scheme.price for pid in np.flatnonzero(trace.delivered)}
    if costs is None:
        raise ValueError("Marginal-cost pricing needs cost records")
    return {p.packet_id: p.price for p in price_packets(costs, scheme)}


@dataclass(frozen=True)
class CertaintyRow:
    """Delay and price spread of one class (``class_id`` set) or one tier (``class_id`` None)."""

    tier: Tier
    class_id: Optional[int]
    delay: DelayStats
    price: DelayStats
    offered: int
    blocked: int

    @property
    def blocked_frac(self) -> Optional[float]:
        if self.offered == 0:
            return None
        return self.blocked / self.offered


@dataclass(frozen=True)
class CertaintyReport:
    """Per-class rows followed by per-tier rows for one trace and pricing scheme."""

    scenario_name: str
    discipline: str
    scheme: PricingScheme
    by_class: List[CertaintyRow]
    by_tier: List[CertaintyRow]
    saturated: bool = False

    @property
    def rows(self) -> List[CertaintyRow]:
        return self.by_class + self.by_tier

    @property
    def delivered_count(self) -> int:
        return sum(r.delay.count for r in self.by_tier)

    def for_tier(self, tier: Tier | str) -> CertaintyRow:
        tier = Tier(tier)
        for row in self.by_tier:
            if row.tier is tier:
                return row
        raise KeyError(tier.value)

    def for_class(self, class_id: int) -> CertaintyRow:
        for row in self.by_class:
            if row.class_id == class_id:
                return row
        raise KeyError(class_id)


def _row(trace: PacketTrace, members: np.ndarray, prices: Mapping[int, float], tier: Tier, class_id: Optional[int]) -> CertaintyRow:
    delivered = members & trace.delivered
    ids = trace.packet_ids[delivered].tolist()
    priced = [prices[i] for i in ids if i in prices]
    return CertaintyRow(
        tier=tier,
        class_id=class_id,
        delay=sample_stats(trace.delay[delivered]),
        price=sample_stats(np.asarray(priced, dtype=float)),
        offered=int(np.count_nonzero(members)),
        blocked=int(np.count_nonzero(members & ~trace.delivered)),
    )


def certainty_report(trace: PacketTrace, prices: Mapping[int, float], scheme: Optional[PricingScheme] = None) -> CertaintyReport:
    """
    Delay and price statistics over post-warmup packets, per class and per tier.

    Prices missing for a delivered packet (sampled marginal costs) simply
    leave it out of the price statistics. A group with no delivered packets
    carries the empty marker.
    """
    steady = ~trace.warmup_mask
    scenario = trace.scenario

    by_class = [
        _row(trace, steady & (trace.class_id == spec.class_id), prices, spec.tier, spec.class_id)
        for spec in scenario.classes
    ]
    present = {spec.tier for spec in scenario.classes}
    by_tier = []
    for tier in Tier:
        if tier not in present:
            continue
        ids = [spec.class_id for spec in scenario.classes if spec.tier is tier]
        by_tier.append(_row(trace, steady & np.isin(trace.class_id, ids), prices, tier, None))

    return CertaintyReport(
        scenario_name=scenario.name,
        discipline=scenario.discipline.describe(),
        scheme=scheme or PricingScheme.marginal_cost(),
        by_class=by_class,
        by_tier=by_tier,
        saturated=trace.saturated,
    )
