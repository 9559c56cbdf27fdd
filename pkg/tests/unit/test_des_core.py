"""Unit tests for des_core module."""
from __future__ import annotations

import logging
from dataclasses import replace

import numpy as np
import pytest

from des_core import (
    is_saturated,
    replay,
    sample_stats,
    schedule,
    server_idle_while_waiting,
    simulate,
    summarize,
)
from exceptions import TraceError, UnknownPacketError
from queueing_analytics import PriorityPolicy
from sim_types import Discipline, ServiceDistribution, Tier, TrafficClassSpec
from tests.conftest import build_trace, mm1_scenario, two_tier_scenario


class TestSchedule:
    """Tests for the per-discipline schedulers on hand-built inputs."""

    def test_fifo_lindley(self, hand_fifo_trace):
        assert hand_fifo_trace.start.tolist() == [0.0, 2.0, 4.0]
        assert hand_fifo_trace.delay.tolist() == [2.0, 3.0, 4.0]
        assert hand_fifo_trace.wait.tolist() == [0.0, 1.0, 2.0]

    def test_departure_before_arrival_at_same_time(self):
        trace = build_trace([0.0, 2.0], [2.0, 1.0])
        assert trace.wait.tolist() == [0.0, 0.0]
        assert trace.delay[1] == trace.service_demand[1]

    def test_non_preemptive_serves_high_level_next(self, priority_classes):
        trace = build_trace(
            [0.0, 0.5, 1.0],
            [2.0, 1.0, 1.0],
            class_ids=[1, 1, 0],
            discipline=Discipline.priority(),
            classes=priority_classes,
        )
        assert trace.start.tolist() == [0.0, 3.0, 2.0]
        assert trace.wait.tolist() == [0.0, 2.5, 1.0]

    def test_preemptive_resume(self, priority_classes):
        trace = build_trace(
            [0.0, 1.0],
            [2.0, 1.0],
            class_ids=[1, 0],
            discipline=Discipline.priority(PriorityPolicy.PREEMPTIVE_RESUME),
            classes=priority_classes,
        )
        assert trace.departure.tolist() == [3.0, 2.0]
        assert trace.start.tolist() == [0.0, 1.0]
        # Wait counts the time a resumed packet spends off the server.
        assert trace.wait.tolist() == [1.0, 0.0]
        assert trace.delay.tolist() == [3.0, 1.0]

    def test_partitioned_lanes_are_independent(self, partitioned_classes):
        trace = build_trace(
            [0.0, 0.0, 0.5],
            [2.0, 2.0, 1.0],
            class_ids=[0, 1, 1],
            discipline=Discipline.partitioned(0.5),
            classes=partitioned_classes,
        )
        assert trace.start.tolist() == [0.0, 0.0, 2.0]

    def test_blocking_drops_arrivals_while_full(self):
        result = schedule([0.0, 1.0, 2.5], [2.0, 1.0, 1.0], [0, 0, 0], Discipline.blocking(1))
        assert result.delivered == [True, False, True]
        assert result.wait[0] == 0.0 and result.wait[2] == 0.0

    def test_blocking_with_waiting_room(self):
        result = schedule([0.0, 1.0, 1.5], [2.0, 1.0, 1.0], [0, 0, 0], Discipline.blocking(2))
        assert result.delivered == [True, True, False]
        assert result.start[1] == 2.0


class TestSimulate:
    """Tests for simulate."""

    def test_deterministic(self):
        s = mm1_scenario(horizon=500.0)
        a, b = simulate(s), simulate(s)
        assert np.array_equal(a.arrival, b.arrival)
        assert np.array_equal(a.delay, b.delay)

    def test_seed_changes_trace(self):
        a = simulate(mm1_scenario(horizon=500.0, seed=1))
        b = simulate(mm1_scenario(horizon=500.0, seed=2))
        assert not np.array_equal(a.arrival[:10], b.arrival[:10])

    def test_empty_trace(self):
        trace = simulate(mm1_scenario(lam=0.0, horizon=100.0))
        assert len(trace) == 0
        assert summarize(trace)[0].empty

    def test_causality(self):
        trace = simulate(two_tier_scenario(Discipline.priority(), horizon=1000.0))
        assert np.all(trace.start >= trace.arrival)
        assert np.all(trace.departure >= trace.start)
        assert np.all(np.diff(trace.arrival) >= 0)

    def test_count_conservation(self):
        trace = simulate(mm1_scenario(lam=1.0, horizon=500.0, discipline=Discipline.blocking(1)))
        for cid, generated in trace.generated.items():
            assert trace.admitted[cid] + trace.blocked[cid] == generated
        assert sum(trace.generated.values()) == len(trace)
        assert trace.blocked[0] > 0

    def test_loss_system_delay_is_service_demand(self):
        trace = simulate(mm1_scenario(lam=1.0, horizon=500.0, discipline=Discipline.blocking(1)))
        d = trace.delivered
        assert np.array_equal(trace.delay[d], trace.service_demand[d])

    def test_common_random_numbers_across_disciplines(self):
        fifo = simulate(two_tier_scenario(Discipline.fifo(), horizon=500.0))
        prio = simulate(two_tier_scenario(Discipline.priority(), horizon=500.0))
        assert np.array_equal(fifo.arrival, prio.arrival)
        assert np.array_equal(fifo.service_demand, prio.service_demand)
        assert np.array_equal(fifo.class_id, prio.class_id)

    def test_class_streams_do_not_depend_on_other_classes(self):
        both = simulate(two_tier_scenario(Discipline.fifo(), lam_second=0.25, horizon=500.0))
        other = simulate(two_tier_scenario(Discipline.fifo(), lam_second=0.4, horizon=500.0))
        assert np.array_equal(both.arrival[both.class_id == 0], other.arrival[other.class_id == 0])

    def test_partitioned_demand_uses_partition_rate(self):
        s = two_tier_scenario(Discipline.partitioned(0.4), lam_first=0.1, lam_second=0.3, horizon=500.0)
        fifo = simulate(s.with_discipline(Discipline.fifo()))
        part = simulate(s)
        reserved = part.class_id == 0
        assert np.allclose(part.service_demand[reserved], fifo.service_demand[reserved] / 0.4)
        assert np.allclose(part.service_demand[~reserved], fifo.service_demand[~reserved] / 0.6)

    def test_fifo_is_work_conserving(self):
        trace = simulate(mm1_scenario(horizon=1000.0))
        waited = np.flatnonzero(trace.wait > 0)
        assert np.array_equal(trace.start[waited], trace.departure[waited - 1])

    def test_warmup_mask(self):
        trace = simulate(mm1_scenario(horizon=1000.0))
        assert np.array_equal(trace.warmup_mask, trace.arrival < 100.0)

    def test_saturated_scenario_warns(self, caplog):
        s = mm1_scenario(lam=1.2, horizon=200.0)
        with caplog.at_level(logging.WARNING):
            trace = simulate(s)
        assert trace.saturated
        assert is_saturated(s)
        assert "saturated" in caplog.text

    def test_blocking_is_never_saturated(self):
        assert not is_saturated(mm1_scenario(lam=5.0, discipline=Discipline.blocking(1)))

    def test_single_level_priority_warns(self, caplog):
        s = two_tier_scenario(Discipline.priority(), lam_first=0.0, lam_second=0.5, horizon=200.0)
        with caplog.at_level(logging.WARNING):
            simulate(s)
        assert "degenerates to FIFO" in caplog.text

    def test_mm1_mean_delay(self):
        s = mm1_scenario(lam=0.5, horizon=2e5)
        stats = summarize(simulate(s))[0]
        assert stats.mean == pytest.approx(2.0, rel=0.05)

    def test_hyperexponential_sizes_raise_cov(self):
        base = mm1_scenario(lam=0.5, horizon=2e4)
        heavy = base.__class__(
            classes=(TrafficClassSpec(0, 0.5, ServiceDistribution.balanced_h2(1.0, 3.0)),),
            discipline=base.discipline,
            mu=1.0,
            horizon=base.horizon,
            warmup=base.warmup,
            name="heavy",
        )
        assert summarize(simulate(heavy))[0].cov > summarize(simulate(base))[0].cov


class TestReplay:
    """Tests for counterfactual replay."""

    def test_excluding_first_packet(self, hand_fifo_trace):
        cf = replay(hand_fifo_trace, exclude=0)
        assert cf.delay.tolist() == [2.0, 3.0]
        assert cf.packet_ids.tolist() == [1, 2]

    def test_excluding_middle_packet(self, hand_fifo_trace):
        cf = replay(hand_fifo_trace, exclude=1)
        assert cf.delay.tolist() == [2.0, 2.0]
        assert cf.record(2).delay == 2.0

    def test_original_is_unchanged(self, hand_fifo_trace):
        replay(hand_fifo_trace, exclude=0)
        assert hand_fifo_trace.delay.tolist() == [2.0, 3.0, 4.0]

    def test_unknown_packet(self, hand_fifo_trace):
        with pytest.raises(UnknownPacketError):
            replay(hand_fifo_trace, exclude=7)
        with pytest.raises(UnknownPacketError):
            replay(hand_fifo_trace, exclude=-1)

    def test_counterfactual_cannot_be_replayed(self, hand_fifo_trace):
        cf = replay(hand_fifo_trace, exclude=0)
        with pytest.raises(TraceError):
            replay(cf, exclude=1)
        with pytest.raises(UnknownPacketError):
            cf.record(0)

    def test_counts_follow_exclusion(self, hand_fifo_trace):
        cf = replay(hand_fifo_trace, exclude=2)
        assert cf.generated == {0: 2}


class TestStatistics:
    """Tests for sample_stats and summarize."""

    def test_constant_sample(self):
        stats = sample_stats(np.array([0.1, 0.1, 0.1]))
        assert stats.variance == 0.0
        assert stats.mean == 0.1
        assert stats.cov == 0.0

    def test_single_value(self):
        stats = sample_stats(np.array([3.0]))
        assert stats.count == 1
        assert stats.variance == 0.0

    def test_unbiased_variance(self):
        stats = sample_stats(np.array([1.0, 2.0, 3.0, 4.0]))
        assert stats.mean == 2.5
        assert stats.variance == pytest.approx(5.0 / 3.0)

    def test_nearest_rank_quantiles(self):
        stats = sample_stats(np.arange(1.0, 101.0))
        assert stats.p50 == 50.0
        assert stats.p95 == 95.0
        assert stats.p99 == 99.0

    def test_zero_mean_has_undefined_cov(self):
        assert sample_stats(np.zeros(4)).cov is None

    def test_empty_marker(self):
        stats = sample_stats(np.array([]), blocked=3)
        assert stats.empty
        assert stats.mean is None
        assert stats.blocked == 3

    def test_summarize_skips_warmup(self):
        trace = build_trace([0.0, 1.0, 2.0], [2.0, 2.0, 2.0], warmup=0.5)
        stats = summarize(trace)[0]
        assert stats.count == 2
        assert stats.mean == 3.5


class TestIdleWhileWaiting:
    """Tests for server_idle_while_waiting."""

    def test_partitioned_reservation_idles(self, partitioned_classes):
        trace = build_trace(
            [0.0, 0.0],
            [2.0, 2.0],
            class_ids=[1, 1],
            discipline=Discipline.partitioned(0.5),
            classes=partitioned_classes,
        )
        assert server_idle_while_waiting(trace)

    def test_busy_reservation_does_not_count(self, partitioned_classes):
        trace = build_trace(
            [0.0, 0.0, 0.0],
            [5.0, 2.0, 2.0],
            class_ids=[0, 1, 1],
            discipline=Discipline.partitioned(0.5),
            classes=partitioned_classes,
        )
        assert not server_idle_while_waiting(trace)

    def test_fifo_never_idles(self, hand_fifo_trace):
        assert not server_idle_while_waiting(hand_fifo_trace)
        assert not server_idle_while_waiting(simulate(mm1_scenario(lam=0.8, horizon=1000.0)))

    @pytest.mark.parametrize(
        "discipline",
        [
            Discipline.priority(),
            Discipline.priority(PriorityPolicy.PREEMPTIVE_RESUME),
            Discipline.blocking(3),
        ],
    )
    def test_single_server_disciplines_conserve_work(self, discipline):
        s = two_tier_scenario(discipline, lam_first=0.35, lam_second=0.4, horizon=1000.0)
        assert not server_idle_while_waiting(simulate(s))

    def test_idle_gap_in_priority_trace_is_detected(self, priority_classes):
        trace = build_trace([0.0, 1.0], [1.0, 1.0], class_ids=[1, 0], discipline=Discipline.priority(), classes=priority_classes)
        assert not server_idle_while_waiting(trace)
        gapped = replace(
            trace,
            start=np.array([0.0, 5.0]),
            departure=np.array([1.0, 6.0]),
            wait=np.array([0.0, 4.0]),
        )
        assert server_idle_while_waiting(gapped)

    def test_simulated_partition_idles(self):
        s = two_tier_scenario(Discipline.partitioned(0.4), lam_first=0.05, lam_second=0.5, horizon=1000.0)
        assert server_idle_while_waiting(simulate(s))


class TestTraceRecords:
    """Tests for per-packet records."""

    def test_record_tier_and_delay(self, hand_fifo_trace):
        r = hand_fifo_trace.record(1)
        assert r.tier is Tier.DEFAULT
        assert r.delay == 3.0
        assert r.delivered

    def test_blocked_record_has_no_timing(self):
        trace = build_trace([0.0, 1.0], [2.0, 1.0], discipline=Discipline.blocking(1))
        r = trace.record(1)
        assert not r.delivered
        assert r.start is None and r.delay is None

    def test_columns_are_read_only(self, hand_fifo_trace):
        with pytest.raises(ValueError):
            hand_fifo_trace.arrival[0] = 5.0
