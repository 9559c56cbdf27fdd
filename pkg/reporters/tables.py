"""CSV tables with frozen headers.

Floats are written with ``repr`` of a Python float so identical runs give
identical bytes. A group with no samples is written as ``empty`` and a
coefficient of variation with zero mean as ``undefined``.
"""
from __future__ import annotations

import csv
import sys
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, List, Optional, Sequence, TextIO, Union

from exceptions import OutputError
from pricing import CertaintyReport
from queueing_analytics import AnalyticRow
from sim_types import CostRecord, DelayStats, PacketTrace

if TYPE_CHECKING:
    from sweep_runner import SweepRow

TRACE_HEADER = (
    "packet_id,class_id,tier,arrival,service_demand,start,departure,wait,delay,delivered,warmup_flag"
)
MC_HEADER = "packet_id,class_id,tier,mc,affected_count,method"
SUMMARY_HEADER = (
    "scenario_id,discipline,class_id,tier,n,mean_delay,var_delay,cov_delay,"
    "mean_price,var_price,cov_price,blocked_frac"
)
ANALYZE_HEADER = (
    "scenario_id,discipline,queue,lambda,mu,utilization,mean_sojourn,var_sojourn,"
    "std_sojourn,mean_wait,blocking_prob"
)
SWEEP_HEADER = (
    "swept_key,grid_value,seed,tier,status,n,analytic_mean_delay,analytic_var_delay,"
    "sim_mean_delay,sim_var_delay,sim_cov_delay,sim_mean_price,sim_var_price,sim_cov_price,blocked_frac"
)

EMPTY = "empty"
UNDEFINED = "undefined"
ALL_CLASSES = "*"

Row = List[str]


def fmt_float(value: Optional[float]) -> str:
    if value is None:
        return ""
    return repr(float(value))


def fmt_bool(value: bool) -> str:
    return "true" if value else "false"


def stats_cells(stats: Optional[DelayStats]) -> Row:
    """Mean, variance and CoV cells of a statistics group."""
    if stats is None:
        return ["", "", ""]
    if stats.empty:
        return [EMPTY, EMPTY, EMPTY]
    cov = UNDEFINED if stats.cov is None else fmt_float(stats.cov)
    return [fmt_float(stats.mean), fmt_float(stats.variance), cov]


def trace_rows(trace: PacketTrace) -> Iterable[Row]:
    """One row per packet; blocked packets leave start, departure, wait and delay empty."""
    tiers = {spec.class_id: spec.tier.value for spec in trace.scenario.classes}
    columns = zip(
        trace.packet_ids.tolist(),
        trace.class_id.tolist(),
        trace.arrival.tolist(),
        trace.service_demand.tolist(),
        trace.start.tolist(),
        trace.departure.tolist(),
        trace.wait.tolist(),
        trace.delivered.tolist(),
        trace.warmup_mask.tolist(),
    )
    for pid, cid, arrival, demand, start, departure, wait, delivered, warmup in columns:
        if delivered:
            timing = [fmt_float(start), fmt_float(departure), fmt_float(wait), fmt_float(wait + demand)]
        else:
            timing = ["", "", "", ""]
        yield [str(pid), str(cid), tiers[cid], fmt_float(arrival), fmt_float(demand), *timing,
               fmt_bool(delivered), fmt_bool(warmup)]


def mc_rows(costs: Sequence[CostRecord]) -> Iterable[Row]:
    for c in costs:
        yield [str(c.packet_id), str(c.class_id), c.tier.value, fmt_float(c.mc), str(c.affected_count), c.method.value]


def summary_rows(report: CertaintyReport) -> Iterable[Row]:
    """Per-class rows, then per-tier rows with ``*`` as class id."""
    for row in report.rows:
        blocked = EMPTY if row.blocked_frac is None else fmt_float(row.blocked_frac)
        yield [
            report.scenario_name,
            report.discipline,
            ALL_CLASSES if row.class_id is None else str(row.class_id),
            row.tier.value,
            str(row.delay.count),
            *stats_cells(row.delay),
            *stats_cells(row.price),
            blocked,
        ]


def analyze_rows(scenario_id: str, discipline: str, rows: Sequence[AnalyticRow]) -> Iterable[Row]:
    for r in rows:
        yield [
            scenario_id,
            discipline,
            r.queue,
            fmt_float(r.lam),
            fmt_float(r.mu),
            fmt_float(r.utilization),
            fmt_float(r.mean_sojourn),
            fmt_float(r.var_sojourn),
            fmt_float(r.std_sojourn),
            fmt_float(r.mean_wait),
            fmt_float(r.blocking_prob),
        ]


def sweep_rows(rows: Sequence["SweepRow"]) -> Iterable[Row]:
    for r in rows:
        n = "" if r.delay is None else str(r.delay.count)
        delay = stats_cells(r.delay)
        price = stats_cells(r.price)
        if r.blocked_frac is None:
            blocked = "" if r.delay is None else EMPTY
        else:
            blocked = fmt_float(r.blocked_frac)
        yield [
            r.swept_key,
            fmt_float(r.grid_value),
            str(r.seed),
            r.tier,
            r.status,
            n,
            fmt_float(r.analytic_mean_delay),
            fmt_float(r.analytic_var_delay),
            *delay,
            *price,
            blocked,
        ]


def write_csv(target: Union[Path, TextIO, None], header: str, rows: Iterable[Row]) -> None:
    """Write a header and rows to a path, an open stream, or stdout when ``target`` is None."""
    if target is None or not isinstance(target, Path):
        _write(target or sys.stdout, header, rows)
        return
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="") as f:
            _write(f, header, rows)
    except OSError as exc:
        raise OutputError(f"Cannot write table: {exc.strerror or exc}", file_path=str(target)) from exc


def _write(stream: TextIO, header: str, rows: Iterable[Row]) -> None:
    stream.write(header + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerows(rows)
