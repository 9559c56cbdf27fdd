"""Command-line front end: analyze, simulate, mc, sweep and validate scenario files."""
from __future__ import annotations

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from config import QosSimConfig, load_config
from cost_accounting import marginal_cost_all
from des_core import simulate
from exceptions import AnalyticError, OutputError, QosSimError, ScenarioError
from pricing import CertaintyReport, certainty_report, price_trace
from queueing_analytics import analytic_targets
from reporters import reporters_for
from reporters import tables
from scenario_loader import ScenarioFile, load_scenario_file, load_sweep_file
from sweep_runner import SweepRunner
from validation import FULL, QUICK, ValidationRun, ValidationSuite

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_PARSE = 2
EXIT_ANALYTIC = 3
EXIT_IO = 4
EXIT_INTERRUPTED = 130


def _load(path: Path, seed: Optional[int]) -> ScenarioFile:
    scenario_file = load_scenario_file(path)
    if seed is not None:
        return ScenarioFile(scenario_file.scenario.with_seed(seed), scenario_file.pricing, scenario_file.file_path)
    return scenario_file


def _table_target(out: Optional[Path], filename: str) -> Optional[Path]:
    return None if out is None else out / filename


def cmd_analyze(path: Path, out: Optional[Path], logger: logging.Logger, seed: Optional[int] = None) -> int:
    """Print the closed-form rows of a scenario as CSV."""
    scenario = _load(path, seed).scenario
    rows = analytic_targets(scenario)
    logger.debug(f"Analytic model for '{scenario.name}': {len(rows)} queue(s)")
    tables.write_csv(
        _table_target(out, f"{scenario.name}_analyze.csv"),
        tables.ANALYZE_HEADER,
        tables.analyze_rows(scenario.name, scenario.discipline.describe(), rows),
    )
    return EXIT_OK


def _print_report(report: CertaintyReport) -> None:
    print("\n" + "=" * 60)
    print(f"CERTAINTY SUMMARY: {report.scenario_name} [{report.discipline}, {report.scheme.describe()}]")
    print("=" * 60)
    if report.saturated:
        print("WARNING: scenario is saturated (rho >= 1); statistics describe a transient")
    print(f"{'group':<24}{'n':>8}{'mean delay':>14}{'var delay':>14}{'var price':>14}")
    for row in report.rows:
        label = f"{row.tier.value}/{'*' if row.class_id is None else row.class_id}"
        cells = [
            tables.EMPTY if row.delay.empty else f"{row.delay.mean:.4f}",
            tables.EMPTY if row.delay.empty else f"{row.delay.variance:.4f}",
            tables.EMPTY if row.price.empty else f"{row.price.variance:.4f}",
        ]
        print(f"{label:<24}{row.delay.count:>8}{cells[0]:>14}{cells[1]:>14}{cells[2]:>14}")
    print("=" * 60)


def cmd_simulate(
    path: Path,
    out: Optional[Path],
    config: QosSimConfig,
    logger: logging.Logger,
    seed: Optional[int] = None,
    quiet: bool = False,
) -> int:
    """Simulate a scenario and write its trace and summary tables."""
    scenario_file = _load(path, seed)
    scenario, scheme = scenario_file.scenario, scenario_file.pricing
    out = out or config.reporting.output_folder

    trace = simulate(scenario, logger=logger)
    costs = None
    if scheme.needs_costs:
        sample = config.simulation.sample_for(len(trace))
        if sample is not None:
            logger.info(f"Trace has {len(trace)} packets; pricing a sample of {sample}")
        costs = marginal_cost_all(trace, method=config.simulation.mc_method, sample=sample, logger=logger)
    report = certainty_report(trace, price_trace(trace, scheme, costs), scheme)

    tables.write_csv(out / f"{scenario.name}_trace.csv", tables.TRACE_HEADER, tables.trace_rows(trace))
    tables.write_csv(out / f"{scenario.name}_summary.csv", tables.SUMMARY_HEADER, tables.summary_rows(report))
    logger.info(f"Wrote {scenario.name}_trace.csv and {scenario.name}_summary.csv to {out}")
    if not quiet:
        _print_report(report)
    return EXIT_OK


def cmd_mc(
    path: Path,
    out: Optional[Path],
    config: QosSimConfig,
    logger: logging.Logger,
    sample: Optional[int] = None,
    seed: Optional[int] = None,
) -> int:
    """Write the marginal cost of every (or every sampled) delivered packet."""
    scenario = _load(path, seed).scenario
    trace = simulate(scenario, logger=logger)
    sample = config.simulation.sample_for(len(trace), sample)
    costs = marginal_cost_all(trace, method=config.simulation.mc_method, sample=sample, logger=logger)
    tables.write_csv(_table_target(out, f"{scenario.name}_mc.csv"), tables.MC_HEADER, tables.mc_rows(costs))
    return EXIT_OK


def cmd_sweep(
    path: Path,
    out: Optional[Path],
    config: QosSimConfig,
    logger: logging.Logger,
    seed: Optional[int] = None,
) -> int:
    """Run a sweep file and write the long-format table."""
    spec = load_sweep_file(path)
    rows = asyncio.run(SweepRunner(config, logger).run(spec, base_seed=seed))
    tables.write_csv(_table_target(out, f"{spec.name}_sweep.csv"), tables.SWEEP_HEADER, tables.sweep_rows(rows))
    return EXIT_OK


def _print_validation(run: ValidationRun) -> None:
    print("\n" + "=" * 60)
    print(f"VALIDATION SUMMARY ({run.scale})")
    print("=" * 60)
    for check in run.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}")
        print(f"    target:    {check.target}")
        print(f"    observed:  {check.observed}")
        print(f"    tolerance: {check.tolerance}")
        if check.detail:
            print(f"    detail:    {check.detail}")
    print("=" * 60)
    print(f"Passed: {len(run.checks) - len(run.failed)}/{len(run.checks)}  Duration: {run.duration_seconds:.1f}s")


def cmd_validate(
    config: QosSimConfig,
    logger: logging.Logger,
    quick: bool = False,
    only: Optional[Sequence[str]] = None,
) -> int:
    """Run the acceptance suite; exit code 1 if any check fails."""
    run = ValidationSuite(QUICK if quick else FULL, logger).run(only)
    _print_validation(run)
    for reporter in reporters_for(config.reporting.output_format):
        path = reporter.generate(run, config.reporting.reports_folder)
        logger.info(f"{reporter.format.value.upper()} report: {path}")
    return EXIT_OK if run.passed else EXIT_VALIDATION_FAILED


def _sample_size(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid sample size: '{text}'") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"sample size must be non-negative, got {value}")
    return value


def _build_arg_parser() -> argparse.ArgumentParser:
    """Build the CLI argument parser."""
    parser = argparse.ArgumentParser(
        description="Simulate QoS disciplines and compare delay certainty with price certainty.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s analyze scenarios/fifo.scn                 # Closed-form rows to stdout
  %(prog)s simulate scenarios/priority.scn --out results
  %(prog)s mc scenarios/fifo.scn --sample 1000        # Sampled marginal costs
  %(prog)s sweep scenarios/reservation.sweep --workers 4
  %(prog)s validate --quick --report-dir reports
        """,
    )
    parser.add_argument("--config", help="Path to config file (default: config.json if exists)")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable verbose output")
    parser.add_argument("--quiet", "-q", action="store_true", help="Suppress non-essential output")

    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("path", help="Scenario or sweep file")
        p.add_argument("--out", help="Directory for output tables")
        p.add_argument("--seed", type=int, help="Override the file's seed")
        return p

    scenario_command("analyze", "Print closed-form results as CSV")
    scenario_command("simulate", "Simulate and write trace and summary CSVs")
    mc = scenario_command("mc", "Write per-packet marginal costs as CSV")
    mc.add_argument("--sample", type=_sample_size, metavar="N", help="Cost a random subset of N delivered packets")
    mc.add_argument("--method", choices=["auto", "full", "segment"], help="Replay method (default: auto)")
    sweep = scenario_command("sweep", "Run a sweep file and write the long-format CSV")
    sweep.add_argument("--workers", type=int, metavar="N", help="Grid points simulated at once (default: 1)")

    validate = sub.add_parser("validate", help="Run the acceptance suite")
    validate.add_argument("--quick", action="store_true", help="Reduced-scale suite")
    validate.add_argument("--check", action="append", help="Run only this check (can be used multiple times)")
    validate.add_argument("--report-dir", help="Directory for validation reports")
    validate.add_argument("--output-format", choices=["json", "junit", "all", "none"], help="Validation report format")
    return parser


def _dispatch(args: argparse.Namespace, config: QosSimConfig, logger: logging.Logger) -> int:
    if args.command == "validate":
        return cmd_validate(config, logger, quick=args.quick, only=args.check)
    path = Path(args.path)
    out = Path(args.out) if args.out else None
    if args.command == "analyze":
        return cmd_analyze(path, out, logger, seed=args.seed)
    if args.command == "simulate":
        return cmd_simulate(path, out, config, logger, seed=args.seed, quiet=args.quiet)
    if args.command == "mc":
        return cmd_mc(path, out, config, logger, sample=args.sample, seed=args.seed)
    return cmd_sweep(path, out, config, logger, seed=args.seed)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    parser = _build_arg_parser()
    args = parser.parse_args(argv)

    if args.quiet:
        log_level = logging.WARNING
    elif args.verbose:
        log_level = logging.DEBUG
    else:
        log_level = logging.INFO

    logging.basicConfig(
        level=log_level,
        format="[%(levelname)s] %(message)s" if not args.verbose else "[%(levelname)s] %(name)s: %(message)s",
    )
    logger = logging.getLogger("experiments_cli")

    report_format = getattr(args, "output_format", None)
    if report_format is None and getattr(args, "report_dir", None):
        report_format = "json"
    cli_overrides = {
        "verbose": args.verbose or None,
        "workers": getattr(args, "workers", None),
        "mc_method": getattr(args, "method", None),
        "output_format": report_format,
        "reports_folder": getattr(args, "report_dir", None),
    }
    cli_overrides = {k: v for k, v in cli_overrides.items() if v is not None}

    try:
        config = load_config(Path(args.config) if args.config else None, cli_overrides)
    except Exception as exc:
        logger.error(f"Failed to load config: {exc}")
        return EXIT_PARSE

    try:
        return _dispatch(args, config, logger)
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_INTERRUPTED
    except ScenarioError as exc:
        logger.error(f"Error: {exc}")
        return EXIT_PARSE
    except AnalyticError as exc:
        logger.error(f"Error: {exc}")
        return EXIT_ANALYTIC
    except (OutputError, OSError) as exc:
        logger.error(f"Error: {exc}")
        return EXIT_IO
    except QosSimError as exc:
        logger.error(f"Error: {exc}")
        return EXIT_VALIDATION_FAILED


if __name__ == "__main__":
    sys.exit(main())
