"""Pydantic configuration models for the QoS certainty simulator.

Only run settings live here. Everything that defines an experiment (rates,
discipline, seed, horizon) belongs to the scenario file.
"""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator, model_validator


# Load .env file if present
load_dotenv()


def _fill_from_env(data: Any, env_mapping: dict[str, str]) -> Any:
    if not isinstance(data, dict):
        return data
    for field_name, env_var in env_mapping.items():
        if field_name not in data or data[field_name] is None:
            env_value = os.getenv(env_var)
            if env_value:
                data[field_name] = env_value
    return data


class SimulationConfig(BaseModel):
    """Marginal-cost accounting settings."""

    mc_full_limit: int = Field(
        default=100_000,
        ge=1,
        description="Traces with more packets than this get sampled marginal costs",
    )
    mc_sample_size: int = Field(
        default=10_000,
        ge=1,
        description="Number of packets costed when sampling",
    )
    mc_method: Literal["auto", "full", "segment"] = Field(
        default="auto",
        description="Replay method for marginal costs",
    )

    @model_validator(mode="before")
    @classmethod
    def load_from_env(cls, data: Any) -> Any:
        """Load values from environment variables if not explicitly set."""
        return _fill_from_env(data, {"mc_sample_size": "QOSSIM_MC_SAMPLE_SIZE"})

    def sample_for(self, packet_count: int, requested: Optional[int] = None) -> Optional[int]:
        """Sample size to use for a trace, or None to cost every packet."""
        if requested is not None:
            return requested
        if packet_count > self.mc_full_limit:
            return self.mc_sample_size
        return None


class SweepConfig(BaseModel):
    """Sweep execution settings."""

    parallel_workers: int = Field(
        default=1,
        ge=1,
        le=64,
        description="Number of sweep points simulated at once",
    )

    @model_validator(mode="before")
    @classmethod
    def load_from_env(cls, data: Any) -> Any:
        return _fill_from_env(data, {"parallel_workers": "QOSSIM_WORKERS"})


class ReportingConfig(BaseModel):
    """Output locations and validation report format."""

    output_folder: Path = Field(
        default=Path("./results"),
        description="Directory for CSV tables when --out is not given",
    )
    reports_folder: Path = Field(
        default=Path("./reports"),
        description="Directory for validation reports",
    )
    output_format: Literal["json", "junit", "all", "none"] = Field(
        default="none",
        description="Validation report format",
    )

    @field_validator("output_folder", "reports_folder", mode="before")
    @classmethod
    def convert_to_path(cls, v: Any) -> Path:
        """Convert string to Path."""
        if isinstance(v, str):
            return Path(v)
        return v

    @model_validator(mode="before")
    @classmethod
    def load_from_env(cls, data: Any) -> Any:
        return _fill_from_env(data, {"output_folder": "QOSSIM_OUTPUT_DIR"})


class QosSimConfig(BaseModel):
    """Root configuration model combining all config sections."""

    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    reporting: ReportingConfig = Field(default_factory=ReportingConfig)

    verbose: bool = Field(
        default=False,
        description="Enable verbose logging",
    )

    @classmethod
    def from_flat_dict(cls, data: dict[str, Any]) -> "QosSimConfig":
        """Create config from a flat dictionary."""
        simulation_keys = {"mc_full_limit", "mc_sample_size", "mc_method"}
        sweep_keys = {"parallel_workers"}
        reporting_keys = {"output_folder", "reports_folder", "output_format"}

        nested: dict[str, Any] = {
            "simulation": {},
            "sweep": {},
            "reporting": {},
        }

        for key, value in data.items():
            if key in simulation_keys:
                nested["simulation"][key] = value
            elif key in sweep_keys:
                nested["sweep"][key] = value
            elif key in reporting_keys:
                nested["reporting"][key] = value
            elif key == "verbose":
                nested["verbose"] = value

        return cls.model_validate(nested)


_SECTIONS = ("simulation", "sweep", "reporting")


def load_config(
    config_path: Optional[Path] = None,
    cli_overrides: Optional[dict[str, Any]] = None,
) -> QosSimConfig:
    """
    Load configuration from file with CLI overrides.

    Priority (highest to lowest):
    1. CLI arguments
    2. Config file
    3. Environment variables
    4. Defaults
    """
    config_data: dict[str, Any] = {}

    if config_path is None:
        config_path = Path("config.json")

    if config_path.exists():
        with open(config_path, "r", encoding="utf-8") as f:
            if config_path.suffix in {".yaml", ".yml"}:
                import yaml
                config_data = yaml.safe_load(f) or {}
            else:
                config_data = json.load(f)

    is_flat = not any(key in config_data for key in _SECTIONS)

    if is_flat:
        config = QosSimConfig.from_flat_dict(config_data)
    else:
        config = QosSimConfig.model_validate(config_data)

    if cli_overrides:
        config_dict = config.model_dump()
        _apply_overrides(config_dict, cli_overrides)
        config = QosSimConfig.model_validate(config_dict)

    return config


def _apply_overrides(config_dict: dict[str, Any], overrides: dict[str, Any]) -> None:
    """Apply CLI overrides to config dictionary."""
    override_mapping = {
        "workers": ("sweep", "parallel_workers"),
        "verbose": ("verbose", None),
        "output_format": ("reporting", "output_format"),
        "reports_folder": ("reporting", "reports_folder"),
        "mc_method": ("simulation", "mc_method"),
        "mc_sample_size": ("simulation", "mc_sample_size"),
    }

    for key, value in overrides.items():
        if value is None:
            continue

        mapping = override_mapping.get(key)
        if mapping:
            section, field = mapping
            if field is None:
                config_dict[section] = value
            else:
                config_dict[section][field] = value
