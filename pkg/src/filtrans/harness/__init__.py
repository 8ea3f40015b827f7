"""Scenario configuration, orchestration, persistence and the command line."""

from .config import ConfigError, ScenarioConfig, load_config
from .io import TraceFormatError, emit_csv, read_csv
from .scenarios import (
    RunArtifacts,
    diagnose_trace,
    figure1_scenario,
    figure2_scenario,
    record_columns,
    run_scenario,
)

__all__ = [
    "ConfigError",
    "RunArtifacts",
    "ScenarioConfig",
    "TraceFormatError",
    "diagnose_trace",
    "emit_csv",
    "figure1_scenario",
    "figure2_scenario",
    "load_config",
    "read_csv",
    "record_columns",
    "run_scenario",
]
