"""Configuration module for the QoS certainty simulator."""
from config.models import (
    QosSimConfig,
    ReportingConfig,
    SimulationConfig,
    SweepConfig,
    load_config,
)

__all__ = [
    "QosSimConfig",
    "ReportingConfig",
    "SimulationConfig",
    "SweepConfig",
    "load_config",
]
