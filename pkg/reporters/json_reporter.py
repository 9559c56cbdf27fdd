"""JSON report generator for validation runs."""
from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict

from exceptions import OutputError
from reporters.base import BaseReporter, ReportFormat
from validation import CheckResult, ValidationRun


class JSONReporter(BaseReporter):
    """Generate machine-readable JSON reports."""

    @property
    def format(self) -> ReportFormat:
        return ReportFormat.JSON

    def _check_to_dict(self, check: CheckResult) -> Dict[str, Any]:
        """Convert CheckResult to JSON-serializable dict."""
        return {
            "name": check.name,
            "description": check.description,
            "passed": check.passed,
            "target": check.target,
            "observed": check.observed,
            "tolerance": check.tolerance,
            "detail": check.detail,
            "duration_seconds": round(check.duration_seconds, 3),
        }

    def generate(self, run: ValidationRun, output_dir: Path) -> Path:
        """Generate JSON report for a validation run."""
        timestamp = run.started_at.strftime("%Y%m%d-%H%M%S")
        target = output_dir / f"validation-{run.scale}-{timestamp}.json"

        passed = sum(1 for c in run.checks if c.passed)
        total = len(run.checks)
        report_data = {
            "generated_at": datetime.now(timezone.utc).isoformat(),
            "report_version": "1.0",
            "scale": run.scale,
            "checks": [self._check_to_dict(c) for c in run.checks],
            "summary": {
                "total": total,
                "passed": passed,
                "failed": total - passed,
                "pass_rate": round(passed / total * 100, 2) if total else 0.0,
                "total_duration_seconds": round(run.duration_seconds, 2),
            },
            "failed_checks": [
                {"name": c.name, "detail": c.detail}
                for c in run.checks if not c.passed
            ],
        }

        try:
            output_dir.mkdir(parents=True, exist_ok=True)
            target.write_text(json.dumps(report_data, indent=2), encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"Cannot write JSON report: {exc}", file_path=str(target)) from exc
        return target
