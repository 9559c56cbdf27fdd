"""Custom exception hierarchy for the QoS certainty simulator."""
from __future__ import annotations

from typing import Any, Optional


class QosSimError(Exception):
    """Base exception for all simulator errors."""

    def __init__(self, message: str, details: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        if self.details:
            return f"{self.message} | Details: {self.details}"
        return self.message


# Closed-form analytics
class AnalyticError(QosSimError):
    """Base exception for closed-form queueing requests."""

    pass


class InvalidParameterError(AnalyticError):
    """Raised when a rate or capacity is outside its domain."""

    def __init__(self, message: str, parameter: Optional[str] = None, value: Any = None):
        details = {}
        if parameter:
            details["parameter"] = parameter
            details["value"] = value
        super().__init__(message, details)
        self.parameter = parameter
        self.value = value


class UnstableQueueError(AnalyticError):
    """Raised when a steady-state quantity is requested for rho >= 1."""

    def __init__(self, rho: float, queue: Optional[str] = None):
        label = f"Queue '{queue}'" if queue else "Queue"
        details: dict[str, Any] = {"rho": rho}
        if queue:
            details["queue"] = queue
        super().__init__(f"{label} is unstable (rho = {rho:.6g} >= 1)", details)
        self.rho = rho
        self.queue = queue


class InvalidPartitionError(AnalyticError):
    """Raised when a reserved partition does not fit inside the shared queue."""

    def __init__(self, message: str, reserved_lambda: Optional[float] = None, reserved_mu: Optional[float] = None):
        details = {}
        if reserved_lambda is not None:
            details["reserved_lambda"] = reserved_lambda
        if reserved_mu is not None:
            details["reserved_mu"] = reserved_mu
        super().__init__(message, details)
        self.reserved_lambda = reserved_lambda
        self.reserved_mu = reserved_mu


class NoAnalyticModelError(AnalyticError):
    """Raised when a scenario has no closed-form counterpart."""

    pass


# Scenario definition
class ScenarioError(QosSimError):
    """Base exception for scenario and sweep definition errors."""

    pass


class ScenarioParseError(ScenarioError):
    """Raised when a scenario or sweep file cannot be parsed."""

    def __init__(self, message: str, line_no: Optional[int] = None, file_path: Optional[str] = None):
        details: dict[str, Any] = {}
        if file_path:
            details["file_path"] = file_path
        if line_no is not None:
            details["line"] = line_no
        super().__init__(message, details)
        self.line_no = line_no
        self.file_path = file_path

    def __str__(self) -> str:
        where = self.file_path or "<scenario>"
        if self.line_no is not None:
            where = f"{where}:{self.line_no}"
        return f"{where}: {self.message}"


class InvalidScenarioError(ScenarioError):
    """Raised when a parsed scenario violates its invariants."""

    def __init__(self, message: str, field: Optional[str] = None):
        details = {"field": field} if field else {}
        super().__init__(message, details)
        self.field = field


# Traces and accounting
class TraceError(QosSimError):
    """Base exception for operations on packet traces."""

    pass


class UnknownPacketError(TraceError):
    """Raised when a packet id is not part of the trace."""

    def __init__(self, packet_id: int):
        super().__init__(f"Packet {packet_id} is not in the trace", {"packet_id": packet_id})
        self.packet_id = packet_id


# Output
class OutputError(QosSimError):
    """Raised when a result table or report cannot be written."""

    def __init__(self, message: str, file_path: Optional[str] = None):
        details = {"file_path": file_path} if file_path else {}
        super().__init__(message, details)
        self.file_path = file_path
