"""Run configuration: defaults, JSON manifest loading, and validation.

Every physical input is dimensionless or expressed relative to the decay
rate gamma: the sampling interval and horizon are gamma*dt and gamma*t, so
the predictions depend only on (gamma*dt, gamma*t, n_thermal).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace

from .core import BathParams, bath_from_gamma

ENGINES = ("luders", "gillespie")
MODES = ("paper", "exact")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    gamma: float = 1.0
    n_thermal: float = 0.1
    trunc: int = 40
    gdt: float = 0.01       # gamma * dt between measurements
    horizon: float = 1.0    # gamma * t total
    traj: int = 100_000     # ensemble size (step count for the dwell command)
    seed: int = 0
    engine: str = "luders"
    mode: str = "exact"
    out: str | None = None

    @property
    def dt(self) -> float:
        return self.gdt / self.gamma

    @property
    def steps(self) -> int:
        return max(1, round(self.horizon / self.gdt))

    def bath(self) -> BathParams:
        return bath_from_gamma(self.gamma, self.n_thermal)

    def validate(self) -> list[str]:
        """Raise :class:`ConfigError` on hard violations; return warnings."""
        for name in ("gamma", "n_thermal", "gdt", "horizon"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.trunc < 1:
            raise ConfigError(f"trunc must be at least 1, got {self.trunc}")
        if self.traj < 1:
            raise ConfigError(f"traj must be at least 1, got {self.traj}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.gdt > self.horizon:
            raise ConfigError(f"gdt = {self.gdt} exceeds horizon = {self.horizon}")
        warnings = []
        if self.n_thermal >= 1.0:
            warnings.append(
                f"n_thermal = {self.n_thermal:g} >= 1: persistence-time ordering degenerates"
            )
        elif self.n_thermal >= 0.5:
            warnings.append(
                f"n_thermal = {self.n_thermal:g}: ground-state slowdown is only "
                f"{1.0 / self.n_thermal:.3g}x and the two-level analytics are first order "
                "in n_thermal"
            )
        return warnings


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, value):
    if name not in _FIELD_TYPES:
        raise ConfigError(f"unknown configuration key {name!r}")
    try:
        if name in ("trunc", "traj", "seed"):
            coerced = int(value)
            if coerced != float(value):
                raise ValueError
            return coerced
        if name in ("engine", "mode", "out"):
            return value if value is None else str(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {name!r}: {value!r}") from None


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then JSON manifest values, then explicit overrides (flags win)."""
    config = RunConfig()
    if path is not None:
        try:
            with open(path) as fp:
                data = json.load(fp)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        config = replace(config, **{k: _coerce(k, v) for k, v in data.items()})
    if overrides:
        config = replace(
            config, **{k: _coerce(k, v) for k, v in overrides.items() if v is not None}
        )
    return config
