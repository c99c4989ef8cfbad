"""Experiment configuration: a single JSON file describing the instance,
the wind model fit, the training run, and the evaluation protocol."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]

SAMPLER_KINDS = ("none", "standard", "importance")
MODEL_KINDS = ("crossing", "iid")


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


@dataclass
class ExperimentConfig:
    instance: str
    training_series: str
    model: str = "crossing"
    sampler: str = "importance"
    m: int = 3
    n: int = 1
    grid_points: int = 40
    grid: tuple = ()                 # explicit outcome grid; overrides grid_points
    smoothing: float = 1e-6
    rho0: float = 1.0
    decay: float = 0.95
    epsilon: float = 0.02
    max_iters: int = 200
    seed: int = 0
    seeds: tuple = (0, 1, 2, 3)
    test_scenarios: int = 50
    aggregation_bins: int = 5
    basis_count: int = 6
    stepsize_a: float = 10.0
    samples_per_state: int = 1
    cut_cap: int | None = None
    penalty_overrides: dict = field(default_factory=dict)
    base_dir: str = "."

    def resolve(self, path_str: str) -> Path:
        p = Path(path_str)
        return p if p.is_absolute() else Path(self.base_dir) / p

    @property
    def instance_path(self) -> Path:
        return self.resolve(self.instance)

    @property
    def training_series_path(self) -> Path:
        return self.resolve(self.training_series)

    def validate(self) -> None:
        if not self.instance_path.exists():
            raise ConfigError(f"instance file not found: {self.instance_path}")
        if not self.training_series_path.exists():
            raise ConfigError(f"training series not found: {self.training_series_path}")
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.model!r}; expected one of {MODEL_KINDS}")
        if self.sampler not in SAMPLER_KINDS:
            raise ConfigError(
                f"unknown sampler kind {self.sampler!r}; expected one of {SAMPLER_KINDS}"
            )
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1); got {self.epsilon}")
        if self.m < 1 or self.n < 1:
            raise ConfigError("duration and error bin counts must be at least 1")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be positive")
        if self.test_scenarios < 1:
            raise ConfigError("test_scenarios must be positive")
        if self.grid and len(self.grid) < 2:
            raise ConfigError("explicit grid needs at least two points")
        if not self.grid and self.grid_points < 2:
            raise ConfigError("grid_points must be at least 2")
        for key, value in self.penalty_overrides.items():
            if key not in ("shortage", "excess", "overflow", "terminal", "threshold"):
                raise ConfigError(f"unknown penalty override {key!r}")
            if float(value) < 0:
                raise ConfigError(f"penalty override {key!r} must be nonnegative")


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")

    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    raw.setdefault("base_dir", str(path.parent))
    for key in ("seeds", "grid"):
        if key in raw:
            raw[key] = tuple(raw[key])
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    cfg.validate()
    return cfg
