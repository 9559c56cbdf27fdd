"""JUnit XML report generator for CI integration."""
from __future__ import annotations

import html
from pathlib import Path

from exceptions import OutputError
from reporters.base import BaseReporter, ReportFormat
from validation import CheckResult, ValidationRun


class JUnitReporter(BaseReporter):
    """Generate JUnit XML reports so CI can show acceptance checks as tests."""

    @property
    def format(self) -> ReportFormat:
        return ReportFormat.JUNIT

    def _escape_xml(self, text: str) -> str:
        """Escape special XML characters."""
        return html.escape(str(text), quote=True)

    def _build_testcase_xml(self, check: CheckResult, scale: str) -> str:
        lines = []
        classname = f"qossim.validate.{scale}"
        name = self._escape_xml(check.name)
        time_sec = f"{check.duration_seconds:.3f}"

        lines.append(f'    <testcase classname="{classname}" name="{name}" time="{time_sec}">')
        summary = [
            f"Check: {check.name}",
            f"Description: {check.description}",
            f"Target: {check.target}",
            f"Observed: {check.observed}",
            f"Tolerance: {check.tolerance}",
        ]
        if check.passed:
            lines.append("      <system-out><![CDATA[")
            lines.extend(summary)
            lines.append("]]></system-out>")
        else:
            message = self._escape_xml(check.detail or "check failed")
            lines.append(f'      <failure message="{message}" type="AssertionError"><![CDATA[')
            lines.extend(summary)
            if check.detail:
                lines.append(f"Detail: {check.detail}")
            lines.append("]]></failure>")
        lines.append("    </testcase>")
        return "\n".join(lines)

    def generate(self, run: ValidationRun, output_dir: Path) -> Path:
        """Generate JUnit XML report for a validation run."""
        timestamp = run.started_at.strftime("%Y%m%d-%H%M%S")
        target = output_dir / f"junit-{run.scale}-{timestamp}.xml"

        tests = len(run.checks)
        failures = sum(1 for c in run.checks if not c.passed)

        lines = ['<?xml version="1.0" encoding="UTF-8"?>']
        lines.append(
            f'<testsuite name="QoS certainty acceptance ({run.scale})" '
            f'tests="{tests}" '
            f'failures="{failures}" '
            f'errors="0" '
            f'skipped="0" '
            f'time="{run.duration_seconds:.3f}" '
            f'timestamp="{run.started_at.strftime("%Y-%m-%dT%H:%M:%S")}">'
        )
        lines.append("  <properties>")
        lines.append('    <property name="reporter" value="qossim-junit"/>')
        lines.append(f'    <property name="scale" value="{run.scale}"/>')
        lines.append("  </properties>")
        for check in run.checks:
            lines.append(self._build_testcase_xml(check, run.scale))
        lines.append("</testsuite>")

        try:
            output_dir.mkdir(parents=True, exist_ok=True)
            target.write_text("\n".join(lines), encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"Cannot write JUnit report: {exc}", file_path=str(target)) from exc
        return target
