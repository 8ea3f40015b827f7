"""Scenario configuration: a versioned JSON document with strict field checking."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA_VERSION = 1
ESTIMATOR_NAMES = ("vec_b1", "vec_b2", "mat_B")


class ConfigError(ValueError):
    """Invalid scenario configuration; ``field`` names the offending entry."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ScenarioConfig:
    schema_version: int = SCHEMA_VERSION
    name: str = "run"
    system: str = "example"
    estimators: list[str] = field(default_factory=lambda: list(ESTIMATOR_NAMES))
    a: float = 0.5
    b1: float = 0.5
    b2: float = 2.0
    gamma: float = 1.0
    mat_B_diag: list[float] | None = None
    dt: float = 1e-3
    t_final: float = 300.0
    record_every: int = 100
    initial_conditions: dict = field(default_factory=dict)
    output_dir: str = "out"
    emit_svg: bool = True
    log_det_axis: bool = False
    settle_threshold: float = 0.05
    fit_window: list[float] | None = None
    pe_window: float = 2 * math.pi
    stability_limit: float = 2.78

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "configuration must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown field")
        if "schema_version" not in data:
            raise ConfigError("schema_version", "missing")
        cfg = cls(**data)
        cfg.check()
        return cfg

    def check(self) -> None:
        """Structural checks; gain checks happen in :func:`build_estimators`."""
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError("schema_version", f"unsupported version {self.schema_version!r}")
        for name in ("a", "b1", "b2", "gamma", "dt", "t_final", "settle_threshold", "pe_window",
                     "stability_limit"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(name, f"expected a number, got {value!r}")
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(name, f"must be positive, got {value!r}")
        if self.t_final < self.dt:
            raise ConfigError("t_final", "must be at least dt")
        if isinstance(self.record_every, bool) or not isinstance(self.record_every, int) or self.record_every < 1:
            raise ConfigError("record_every", f"must be a positive integer, got {self.record_every!r}")
        if not isinstance(self.estimators, list) or not self.estimators:
            raise ConfigError("estimators", "must be a non-empty list")
        for est in self.estimators:
            if est not in ESTIMATOR_NAMES:
                raise ConfigError("estimators", f"unknown estimator {est!r}; choose from {ESTIMATOR_NAMES}")
        if len(set(self.estimators)) != len(self.estimators):
            raise ConfigError("estimators", "duplicate entries")
        if not isinstance(self.system, str) or not self.system:
            raise ConfigError("system", "must be 'example' or a path to a system file")
        if not isinstance(self.initial_conditions, dict):
            raise ConfigError("initial_conditions", "must be an object")
        bad = set(self.initial_conditions) - {"y", "x", "M0", "mu0"}
        if bad:
            raise ConfigError("initial_conditions", f"unknown keys {sorted(bad)}")
        if self.fit_window is not None:
            if (not isinstance(self.fit_window, list) or len(self.fit_window) != 2
                    or not self.fit_window[0] < self.fit_window[1]):
                raise ConfigError("fit_window", "must be [start, end] with start < end")
        if self.system == "example" and self.b1 == self.b2:
            raise ConfigError("b2", "b1 and b2 must differ for the benchmark regressor")
        if "mat_B" in self.estimators and self.mat_B_diag is None and self.b1 == self.b2:
            raise ConfigError("b2", "mat_B needs distinct B eigenvalues (b1 != b2)")


def load_config(path) -> ScenarioConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON ({exc})") from exc
    return ScenarioConfig.from_dict(data)
