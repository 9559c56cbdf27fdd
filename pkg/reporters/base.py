"""Base reporter interface for validation runs."""
from __future__ import annotations

from abc import ABC, abstractmethod
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, List

if TYPE_CHECKING:
    from validation import ValidationRun


class ReportFormat(str, Enum):
    """Supported report formats."""
    JSON = "json"
    JUNIT = "junit"
    ALL = "all"
    NONE = "none"


class BaseReporter(ABC):
    """Abstract base class for report generators."""

    @abstractmethod
    def generate(self, run: "ValidationRun", output_dir: Path) -> Path:
        """
        Write a report for one validation run.

        Args:
            run: Completed validation run
            output_dir: Directory to write report to

        Returns:
            Path to the generated report file
        """
        pass

    @property
    @abstractmethod
    def format(self) -> ReportFormat:
        """Return the report format this reporter generates."""
        pass


def reporters_for(fmt: ReportFormat | str) -> List[BaseReporter]:
    """Reporters selected by a configured output format."""
    from reporters.json_reporter import JSONReporter
    from reporters.junit import JUnitReporter

    fmt = ReportFormat(fmt)
    if fmt is ReportFormat.ALL:
        return [JSONReporter(), JUnitReporter()]
    if fmt is ReportFormat.JSON:
        return [JSONReporter()]
    if fmt is ReportFormat.JUNIT:
        return [JUnitReporter()]
    return []
