"""Typed objects for scenarios, packet traces and their accounting."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from exceptions import InvalidScenarioError, UnknownPacketError
from queueing_analytics import PriorityPolicy


class Tier(str, Enum):
    """QoS tier a traffic class is marked with."""
    RESERVED = "reserved"
    BEST_EFFORT = "best_effort"
    HIGH_PRIORITY = "high_priority"
    LOW_PRIORITY = "low_priority"
    DEFAULT = "default"


class DisciplineKind(str, Enum):
    """How the shared transmission resource is scheduled."""
    FIFO = "fifo"
    PARTITIONED = "partitioned"
    PRIORITY = "priority"
    BLOCKING = "blocking"


class CostMethod(str, Enum):
    """How a marginal cost was obtained."""
    FULL_REPLAY = "full_replay"
    SEGMENT_REPLAY = "segment_replay"


@dataclass(frozen=True)
class ServiceDistribution:
    """
    Distribution of packet size in work units.

    An exponential distribution is the one-phase case of the hyperexponential
    mixture: ``rates`` are the phase rates and ``probs`` the phase weights.
    """

    rates: Tuple[float, ...]
    probs: Tuple[float, ...] = (1.0,)

    def __post_init__(self) -> None:
        if not self.rates or len(self.rates) != len(self.probs):
            raise InvalidScenarioError("Service rates and mix probabilities must pair up", field="service")
        if any(not r > 0 for r in self.rates):
            raise InvalidScenarioError("Service rates must be positive", field="service")
        if any(p < 0 for p in self.probs) or not math.isclose(sum(self.probs), 1.0, abs_tol=1e-9):
            raise InvalidScenarioError("Mix probabilities must be nonnegative and sum to 1", field="service")

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "ServiceDistribution":
        return cls(rates=(float(rate),))

    @classmethod
    def hyperexponential(cls, rates: List[float], probs: List[float]) -> "ServiceDistribution":
        return cls(rates=tuple(float(r) for r in rates), probs=tuple(float(p) for p in probs))

    @classmethod
    def balanced_h2(cls, mean: float, cov: float) -> "ServiceDistribution":
        """Two-phase mixture with balanced means matching ``mean`` and ``cov`` (cov >= 1)."""
        if not mean > 0:
            raise InvalidScenarioError("balanced_h2 mean must be positive", field="service")
        if cov < 1:
            raise InvalidScenarioError("balanced_h2 needs a coefficient of variation >= 1", field="service")
        if cov == 1:
            return cls.exponential(1.0 / mean)
        c2 = cov * cov
        p1 = 0.5 * (1.0 + math.sqrt((c2 - 1.0) / (c2 + 1.0)))
        p2 = 1.0 - p1
        return cls(rates=(2.0 * p1 / mean, 2.0 * p2 / mean), probs=(p1, p2))

    @property
    def is_exponential(self) -> bool:
        return len(self.rates) == 1

    @property
    def mean(self) -> float:
        return sum(p / r for r, p in zip(self.rates, self.probs))

    @property
    def second_moment(self) -> float:
        return sum(2.0 * p / (r * r) for r, p in zip(self.rates, self.probs))

    @property
    def cov(self) -> float:
        mean = self.mean
        return math.sqrt(max(self.second_moment - mean * mean, 0.0)) / mean

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` packet sizes from ``rng``."""
        if self.is_exponential:
            return rng.exponential(1.0 / self.rates[0], size=size)
        phase = rng.choice(len(self.rates), size=size, p=np.asarray(self.probs))
        scales = 1.0 / np.asarray(self.rates)
        return rng.exponential(1.0, size=size) * scales[phase]

    def describe(self) -> str:
        if self.is_exponential:
            return f"exponential({self.rates[0]!r})"
        rates = ",".join(repr(r) for r in self.rates)
        probs = ",".join(repr(p) for p in self.probs)
        return f"hyperexponential({rates}|{probs})"


@dataclass(frozen=True)
class TrafficClassSpec:
    """Poisson packet stream of one class and the tier it is marked with."""

    class_id: int
    lam: float
    service: ServiceDistribution = field(default_factory=ServiceDistribution.exponential)
    tier: Tier = Tier.DEFAULT

    def __post_init__(self) -> None:
        if not self.lam >= 0:
            raise InvalidScenarioError(f"Class {self.class_id} arrival rate cannot be negative", field="lambda")
        object.__setattr__(self, "tier", Tier(self.tier))


@dataclass(frozen=True)
class Discipline:
    """Scheduling discipline and its single parameter."""

    kind: DisciplineKind = DisciplineKind.FIFO
    reserved_mu: Optional[float] = None
    policy: PriorityPolicy = PriorityPolicy.NON_PREEMPTIVE
    capacity: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DisciplineKind(self.kind))
        object.__setattr__(self, "policy", PriorityPolicy(self.policy))

    @classmethod
    def fifo(cls) -> "Discipline":
        return cls(DisciplineKind.FIFO)

    @classmethod
    def partitioned(cls, reserved_mu: float) -> "Discipline":
        return cls(DisciplineKind.PARTITIONED, reserved_mu=reserved_mu)

    @classmethod
    def priority(cls, policy: PriorityPolicy | str = PriorityPolicy.NON_PREEMPTIVE) -> "Discipline":
        return cls(DisciplineKind.PRIORITY, policy=PriorityPolicy(policy))

    @classmethod
    def blocking(cls, capacity: int = 1) -> "Discipline":
        return cls(DisciplineKind.BLOCKING, capacity=capacity)

    def describe(self) -> str:
        if self.kind is DisciplineKind.PARTITIONED:
            return f"partitioned({self.reserved_mu!r})"
        if self.kind is DisciplineKind.PRIORITY:
            return f"priority({self.policy.value})"
        if self.kind is DisciplineKind.BLOCKING:
            return f"blocking({self.capacity})"
        return self.kind.value


@dataclass(frozen=True)
class Scenario:
    """Full description of one simulation experiment."""

    classes: Tuple[TrafficClassSpec, ...]
    discipline: Discipline
    mu: float
    horizon: float
    warmup: float
    seed: int = 1
    name: str = "scenario"

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        for message, field_name in self.violations():
            raise InvalidScenarioError(message, field=field_name)

    def violations(self) -> List[Tuple[str, str]]:
        """List every violated invariant as (message, field)."""
        errors: List[Tuple[str, str]] = []
        if not self.mu > 0:
            errors.append(("Total service rate mu must be positive", "mu"))
        if not self.warmup >= 0:
            errors.append(("Warmup cannot be negative", "warmup"))
        if not self.horizon > self.warmup:
            errors.append(("Horizon must exceed warmup", "horizon"))
        if not 0 <= self.seed < 2**64:
            errors.append(("Seed must be a 64-bit unsigned integer", "seed"))
        ids = [c.class_id for c in self.classes]
        if any(i < 0 for i in ids):
            errors.append(("Class ids must be nonnegative", "classes"))
        if len(set(ids)) != len(ids):
            errors.append(("Class ids must be unique", "classes"))

        d = self.discipline
        if d.kind is DisciplineKind.PARTITIONED:
            if d.reserved_mu is None or not 0 < d.reserved_mu < self.mu:
                errors.append(("Partitioned discipline needs 0 < reserved_mu < mu", "reserved_mu"))
            if not any(c.tier is Tier.RESERVED for c in self.classes):
                errors.append(("Partitioned discipline needs at least one reserved-tier class", "tier"))
        if d.kind is DisciplineKind.BLOCKING:
            if d.capacity is None or d.capacity < 1:
                errors.append(("Blocking discipline needs a capacity >= 1", "capacity"))
        return errors

    def class_spec(self, class_id: int) -> TrafficClassSpec:
        for spec in self.classes:
            if spec.class_id == class_id:
                return spec
        raise KeyError(class_id)

    @property
    def total_lambda(self) -> float:
        return sum(c.lam for c in self.classes)

    def server_rate(self, tier: Tier) -> float:
        """Rate of the server that carries packets of ``tier``."""
        if self.discipline.kind is DisciplineKind.PARTITIONED:
            if tier is Tier.RESERVED:
                return float(self.discipline.reserved_mu)
            return self.mu - float(self.discipline.reserved_mu)
        return self.mu

    def lane(self, tier: Tier) -> int:
        """Server index (partitioned) or priority level (priority) of ``tier``; 0 otherwise."""
        kind = self.discipline.kind
        if kind is DisciplineKind.PARTITIONED:
            return 0 if tier is Tier.RESERVED else 1
        if kind is DisciplineKind.PRIORITY:
            return 0 if tier is Tier.HIGH_PRIORITY else 1
        return 0

    def offered_loads(self) -> Dict[str, float]:
        """Utilization offered to every queue of the discipline."""
        loads: Dict[str, float] = {}
        for spec in self.classes:
            if self.discipline.kind is DisciplineKind.PARTITIONED:
                key = "reserved" if spec.tier is Tier.RESERVED else "best_effort"
            else:
                key = "shared"
            rate = self.server_rate(spec.tier)
            loads[key] = loads.get(key, 0.0) + spec.lam * spec.service.mean / rate
        return loads

    def with_seed(self, seed: int) -> "Scenario":
        return Scenario(self.classes, self.discipline, self.mu, self.horizon, self.warmup, seed, self.name)

    def with_discipline(self, discipline: Discipline) -> "Scenario":
        return Scenario(self.classes, discipline, self.mu, self.horizon, self.warmup, self.seed, self.name)


@dataclass(frozen=True)
class PacketRecord:
    """Lifecycle of one packet; blocked packets carry no start or departure."""

    packet_id: int
    class_id: int
    tier: Tier
    arrival: float
    service_demand: float
    start: Optional[float]
    departure: Optional[float]
    wait: Optional[float]
    delivered: bool
    warmup: bool = False

    @property
    def delay(self) -> Optional[float]:
        if self.wait is None:
            return None
        return self.wait + self.service_demand


@dataclass(frozen=True, eq=False)
class PacketTrace:
    """
    Immutable columnar record of one simulation run.

    Columns are read-only numpy arrays indexed by packet id, which is also
    arrival order. Blocked packets hold NaN start, departure and wait. Delay is
    wait plus service demand, so a packet that never queued has a delay equal
    to its service demand exactly.
    """

    scenario: Scenario
    class_id: np.ndarray
    lane: np.ndarray
    arrival: np.ndarray
    service_demand: np.ndarray
    start: np.ndarray
    departure: np.ndarray
    wait: np.ndarray
    delivered: np.ndarray
    generated: Dict[int, int]
    blocked: Dict[int, int]
    saturated: bool = False
    excluded: Optional[int] = None

    def __post_init__(self) -> None:
        for name in ("class_id", "lane", "arrival", "service_demand", "start", "departure", "wait", "delivered"):
            getattr(self, name).flags.writeable = False

    def __len__(self) -> int:
        return int(self.arrival.shape[0])

    @property
    def packet_ids(self) -> np.ndarray:
        ids = np.arange(len(self) + (self.excluded is not None))
        if self.excluded is not None:
            ids = np.delete(ids, self.excluded)
        return ids

    @property
    def delay(self) -> np.ndarray:
        return self.wait + self.service_demand

    @property
    def warmup_mask(self) -> np.ndarray:
        return self.arrival < self.scenario.warmup

    @property
    def admitted(self) -> Dict[int, int]:
        return {cid: self.generated[cid] - self.blocked.get(cid, 0) for cid in self.generated}

    def tier_of(self, class_id: int) -> Tier:
        return self.scenario.class_spec(class_id).tier

    def index_of(self, packet_id: int) -> int:
        """Row of ``packet_id`` in the columns."""
        if packet_id < 0:
            raise UnknownPacketError(packet_id)
        if self.excluded is None:
            if packet_id >= len(self):
                raise UnknownPacketError(packet_id)
            return packet_id
        if packet_id == self.excluded or packet_id > len(self):
            raise UnknownPacketError(packet_id)
        return packet_id if packet_id < self.excluded else packet_id - 1

    def record(self, packet_id: int) -> PacketRecord:
        i = self.index_of(packet_id)
        return self._record_at(i, packet_id)

    def _record_at(self, i: int, packet_id: int) -> PacketRecord:
        delivered = bool(self.delivered[i])
        class_id = int(self.class_id[i])
        return PacketRecord(
            packet_id=packet_id,
            class_id=class_id,
            tier=self.tier_of(class_id),
            arrival=float(self.arrival[i]),
            service_demand=float(self.service_demand[i]),
            start=float(self.start[i]) if delivered else None,
            departure=float(self.departure[i]) if delivered else None,
            wait=float(self.wait[i]) if delivered else None,
            delivered=delivered,
            warmup=bool(self.arrival[i] < self.scenario.warmup),
        )

    def records(self) -> Iterator[PacketRecord]:
        for i, packet_id in enumerate(self.packet_ids.tolist()):
            yield self._record_at(i, packet_id)


@dataclass(frozen=True)
class CostRecord:
    """Delay externality one packet imposes on every other packet."""

    packet_id: int
    class_id: int
    tier: Tier
    mc: float
    affected_count: int
    method: CostMethod
    admission_churn: int = 0


@dataclass(frozen=True)
class DelayStats:
    """Sample statistics of a delay (or price) population; ``empty`` marks no samples."""

    count: int
    mean: Optional[float] = None
    variance: Optional[float] = None
    std: Optional[float] = None
    cov: Optional[float] = None
    p50: Optional[float] = None
    p95: Optional[float] = None
    p99: Optional[float] = None
    blocked: int = 0

    @property
    def empty(self) -> bool:
        return self.count == 0

    @classmethod
    def empty_marker(cls, blocked: int = 0) -> "DelayStats":
        return cls(count=0, blocked=blocked)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "std": self.std,
            "cov": self.cov,
            "p50": self.p50,
            "p95": self.p95,
            "p99": self.p99,
            "blocked": self.blocked,
        }
