"""Pytest fixtures for the QoS certainty simulator tests."""
from __future__ import annotations

import tempfile
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pytest

from des_core import schedule
from sim_types import Discipline, PacketTrace, Scenario, Tier, TrafficClassSpec

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def build_trace(
    arrivals: Sequence[float],
    demands: Sequence[float],
    class_ids: Optional[Sequence[int]] = None,
    discipline: Optional[Discipline] = None,
    classes: Optional[Sequence[TrafficClassSpec]] = None,
    warmup: float = 0.0,
) -> PacketTrace:
    """Schedule hand-picked arrivals and service demands into a trace."""
    class_ids = list(class_ids) if class_ids is not None else [0] * len(arrivals)
    classes = tuple(classes) if classes is not None else (TrafficClassSpec(0, 1.0),)
    discipline = discipline or Discipline.fifo()
    scenario = Scenario(
        classes=classes,
        discipline=discipline,
        mu=1.0,
        horizon=max(arrivals, default=0.0) + 1.0,
        warmup=warmup,
        name="hand",
    )
    lane = [scenario.lane(scenario.class_spec(c).tier) for c in class_ids]
    result = schedule(list(arrivals), list(demands), lane, discipline)

    cid = np.asarray(class_ids, dtype=np.int64)
    delivered = np.asarray(result.delivered, dtype=bool)
    generated = {c.class_id: int(np.count_nonzero(cid == c.class_id)) for c in classes}
    blocked = {c.class_id: int(np.count_nonzero((cid == c.class_id) & ~delivered)) for c in classes}
    return PacketTrace(
        scenario=scenario,
        class_id=cid,
        lane=np.asarray(lane, dtype=np.int64),
        arrival=np.asarray(arrivals, dtype=float),
        service_demand=np.asarray(demands, dtype=float),
        start=np.asarray(result.start, dtype=float),
        departure=np.asarray(result.departure, dtype=float),
        wait=np.asarray(result.wait, dtype=float),
        delivered=delivered,
        generated=generated,
        blocked=blocked,
    )


def mm1_scenario(
    lam: float = 0.5,
    horizon: float = 2000.0,
    discipline: Optional[Discipline] = None,
    seed: int = 1,
) -> Scenario:
    """One default-tier Poisson class on a unit-rate server."""
    return Scenario(
        classes=(TrafficClassSpec(0, lam),),
        discipline=discipline or Discipline.fifo(),
        mu=1.0,
        horizon=horizon,
        warmup=horizon / 10.0,
        seed=seed,
        name="mm1",
    )


def two_tier_scenario(
    discipline: Discipline,
    lam_first: float = 0.25,
    lam_second: float = 0.25,
    horizon: float = 2000.0,
    seed: int = 1,
) -> Scenario:
    """Two classes whose tiers follow the discipline (reserved/best effort or high/low)."""
    if discipline.kind.value == "partitioned":
        tiers = (Tier.RESERVED, Tier.BEST_EFFORT)
    elif discipline.kind.value == "priority":
        tiers = (Tier.HIGH_PRIORITY, Tier.LOW_PRIORITY)
    else:
        tiers = (Tier.DEFAULT, Tier.DEFAULT)
    return Scenario(
        classes=(TrafficClassSpec(0, lam_first, tier=tiers[0]), TrafficClassSpec(1, lam_second, tier=tiers[1])),
        discipline=discipline,
        mu=1.0,
        horizon=horizon,
        warmup=horizon / 10.0,
        seed=seed,
        name="two_tier",
    )


@pytest.fixture
def hand_fifo_trace() -> PacketTrace:
    """Arrivals at 0, 1, 2 with two units of work each: delays 2, 3, 4."""
    return build_trace([0.0, 1.0, 2.0], [2.0, 2.0, 2.0])


@pytest.fixture
def priority_classes() -> tuple:
    return (
        TrafficClassSpec(0, 1.0, tier=Tier.HIGH_PRIORITY),
        TrafficClassSpec(1, 1.0, tier=Tier.LOW_PRIORITY),
    )


@pytest.fixture
def partitioned_classes() -> tuple:
    return (
        TrafficClassSpec(0, 0.1, tier=Tier.RESERVED),
        TrafficClassSpec(1, 0.1, tier=Tier.BEST_EFFORT),
    )


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture
def temp_dir() -> Path:
    """Create a temporary directory for test files."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def write_file(temp_dir: Path):
    """Write text into the temp directory and return its path."""

    def _write(name: str, text: str) -> Path:
        path = temp_dir / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
