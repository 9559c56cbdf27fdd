"""CSV tables for simulation output and report generators for validation runs.

The JSON and JUnit reporters import the validation types, so they are loaded
on demand through ``reporters_for`` or imported from their own modules.
"""
from reporters.base import BaseReporter, ReportFormat, reporters_for

__all__ = [
    "BaseReporter",
    "ReportFormat",
    "reporters_for",
]
