"""Unit tests for config module."""
from __future__ import annotations

import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from config import QosSimConfig, ReportingConfig, SimulationConfig, SweepConfig, load_config

ENV_VARS = ("QOSSIM_MC_SAMPLE_SIZE", "QOSSIM_WORKERS", "QOSSIM_OUTPUT_DIR")


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)


class TestSimulationConfig:
    """Tests for SimulationConfig model."""

    def test_default_values(self):
        config = SimulationConfig()
        assert config.mc_full_limit == 100_000
        assert config.mc_sample_size == 10_000
        assert config.mc_method == "auto"

    def test_method_choices(self):
        assert SimulationConfig(mc_method="segment").mc_method == "segment"
        with pytest.raises(ValidationError):
            SimulationConfig(mc_method="approximate")

    def test_sample_size_validation(self):
        with pytest.raises(ValidationError):
            SimulationConfig(mc_sample_size=0)

    def test_env_var_loading(self, monkeypatch):
        monkeypatch.setenv("QOSSIM_MC_SAMPLE_SIZE", "250")
        assert SimulationConfig().mc_sample_size == 250

    def test_explicit_value_beats_env(self, monkeypatch):
        monkeypatch.setenv("QOSSIM_MC_SAMPLE_SIZE", "250")
        assert SimulationConfig(mc_sample_size=40).mc_sample_size == 40

    def test_sample_for(self):
        config = SimulationConfig(mc_full_limit=100, mc_sample_size=10)
        assert config.sample_for(50) is None
        assert config.sample_for(101) == 10
        assert config.sample_for(50, requested=5) == 5


class TestSweepConfig:
    """Tests for SweepConfig model."""

    def test_default_values(self):
        assert SweepConfig().parallel_workers == 1

    def test_worker_bounds(self):
        with pytest.raises(ValidationError):
            SweepConfig(parallel_workers=0)
        with pytest.raises(ValidationError):
            SweepConfig(parallel_workers=65)

    def test_env_var_loading(self, monkeypatch):
        monkeypatch.setenv("QOSSIM_WORKERS", "4")
        assert SweepConfig().parallel_workers == 4


class TestReportingConfig:
    """Tests for ReportingConfig model."""

    def test_default_values(self):
        config = ReportingConfig()
        assert config.output_folder == Path("./results")
        assert config.reports_folder == Path("./reports")
        assert config.output_format == "none"

    def test_path_conversion(self):
        config = ReportingConfig(output_folder="/tmp/tables", reports_folder="/tmp/reports")
        assert isinstance(config.output_folder, Path)
        assert config.reports_folder == Path("/tmp/reports")

    def test_output_format_choices(self):
        for fmt in ["json", "junit", "all", "none"]:
            assert ReportingConfig(output_format=fmt).output_format == fmt
        with pytest.raises(ValidationError):
            ReportingConfig(output_format="html")

    def test_env_var_loading(self, monkeypatch):
        monkeypatch.setenv("QOSSIM_OUTPUT_DIR", "/tmp/qossim")
        assert ReportingConfig().output_folder == Path("/tmp/qossim")


class TestQosSimConfig:
    """Tests for the root config."""

    def test_default_nested_configs(self):
        config = QosSimConfig()
        assert isinstance(config.simulation, SimulationConfig)
        assert isinstance(config.sweep, SweepConfig)
        assert isinstance(config.reporting, ReportingConfig)
        assert config.verbose is False

    def test_from_flat_dict(self):
        config = QosSimConfig.from_flat_dict({
            "mc_method": "full",
            "parallel_workers": 3,
            "output_format": "junit",
            "verbose": True,
            "unrelated": "ignored",
        })
        assert config.simulation.mc_method == "full"
        assert config.sweep.parallel_workers == 3
        assert config.reporting.output_format == "junit"
        assert config.verbose is True


class TestLoadConfig:
    """Tests for load_config."""

    def test_loads_from_json_file(self, temp_dir: Path):
        path = temp_dir / "config.json"
        path.write_text(json.dumps({"sweep": {"parallel_workers": 2}, "simulation": {"mc_method": "full"}}))
        config = load_config(path)
        assert config.sweep.parallel_workers == 2
        assert config.simulation.mc_method == "full"

    def test_loads_flat_json(self, temp_dir: Path):
        path = temp_dir / "config.json"
        path.write_text(json.dumps({"parallel_workers": 5, "output_format": "all"}))
        config = load_config(path)
        assert config.sweep.parallel_workers == 5
        assert config.reporting.output_format == "all"

    def test_yaml_config(self, temp_dir: Path):
        path = temp_dir / "config.yaml"
        path.write_text("simulation:\n  mc_sample_size: 77\nreporting:\n  output_format: json\n")
        config = load_config(path)
        assert config.simulation.mc_sample_size == 77
        assert config.reporting.output_format == "json"

    def test_missing_file_gives_defaults(self, temp_dir: Path):
        config = load_config(temp_dir / "absent.json")
        assert config == QosSimConfig()

    def test_cli_overrides(self, temp_dir: Path):
        path = temp_dir / "config.json"
        path.write_text(json.dumps({"sweep": {"parallel_workers": 2}}))
        config = load_config(path, {"workers": 8, "verbose": True, "reports_folder": "out", "output_format": None})
        assert config.sweep.parallel_workers == 8
        assert config.verbose is True
        assert config.reporting.reports_folder == Path("out")
        assert config.reporting.output_format == "none"

    def test_file_beats_env(self, temp_dir: Path, monkeypatch):
        monkeypatch.setenv("QOSSIM_WORKERS", "6")
        path = temp_dir / "config.json"
        path.write_text(json.dumps({"sweep": {"parallel_workers": 2}}))
        assert load_config(path).sweep.parallel_workers == 2
        assert load_config(temp_dir / "absent.json").sweep.parallel_workers == 6

    def test_invalid_value_rejected(self, temp_dir: Path):
        path = temp_dir / "config.json"
        path.write_text(json.dumps({"sweep": {"parallel_workers": 0}}))
        with pytest.raises(ValidationError):
            load_config(path)
