"""Service configuration: file loading, env overrides, validation.

The config is a flat JSON object.  Every key is optional; defaults run
a standalone station with the built-in board geometry and a local data
directory.  ``AEROSELECT_DATA_DIR`` overrides ``data_dir`` regardless
of what the file says, which keeps deployments and tests from writing
into a shared tree by accident.
"""

from __future__ import annotations

import json
import os
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Union

from .game import DIFFICULTIES
from .locate import DwellConfig
from .wire import SensorGeometry, default_geometry

__all__ = ["ConfigError", "ServiceConfig", "DATA_DIR_ENV", "load_config"]

DATA_DIR_ENV = "AEROSELECT_DATA_DIR"


class ConfigError(ValueError):
    """Raised for unusable configuration (bad keys, values, or paths)."""


@dataclass(frozen=True)
class ServiceConfig:
    """Everything the station needs to run."""

    geometry_path: Optional[str] = None  # None: built-in default board
    dwell_ms: float = 800.0
    flicker_ms: float = 120.0
    cooldown_ms: float = 500.0
    reject_residual_mm: float = 15.0
    rate_hz: float = 30.0
    data_dir: str = "data"
    listen_host: str = "127.0.0.1"
    listen_port: int = 8765
    # Optional per-level round time limits, seconds.
    time_limits_s: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("dwell_ms", "flicker_ms", "cooldown_ms", "rate_hz"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.reject_residual_mm <= 0:
            raise ConfigError("reject_residual_mm must be positive")
        if not 0 < self.listen_port < 65536:
            raise ConfigError(f"listen_port out of range: {self.listen_port}")
        for level, limit in self.time_limits_s.items():
            if level not in DIFFICULTIES:
                raise ConfigError(f"unknown difficulty level in time_limits_s: {level!r}")
            if limit is not None and limit <= 0:
                raise ConfigError(f"time limit for {level} must be positive")

    def dwell_config(self) -> DwellConfig:
        return DwellConfig(
            dwell_ms=self.dwell_ms,
            flicker_ms=self.flicker_ms,
            cooldown_ms=self.cooldown_ms,
        )

    def load_geometry(self) -> SensorGeometry:
        """Board geometry from the configured file, or the default."""
        if self.geometry_path is None:
            return default_geometry()
        try:
            data = json.loads(Path(self.geometry_path).read_text(encoding="utf-8"))
            return SensorGeometry.from_dict(data)
        except OSError as exc:
            raise ConfigError(f"cannot read geometry file: {exc}") from exc
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad geometry file {self.geometry_path}: {exc}") from exc

    def time_limit_for(self, level: str) -> Optional[float]:
        return self.time_limits_s.get(level)

    def ensure_data_dir(self) -> Path:
        """Create the data directory and prove it is writable."""
        path = Path(self.data_dir)
        try:
            path.mkdir(parents=True, exist_ok=True)
            probe = path / f".write-probe-{uuid.uuid4().hex}"
            probe.write_text("", encoding="utf-8")
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"data_dir {path} is not writable: {exc}") from exc
        return path

    def snapshot(self) -> dict:
        """JSON-ready copy, recorded in session log headers."""
        return {
            "geometry_path": self.geometry_path,
            "dwell_ms": self.dwell_ms,
            "flicker_ms": self.flicker_ms,
            "cooldown_ms": self.cooldown_ms,
            "reject_residual_mm": self.reject_residual_mm,
            "rate_hz": self.rate_hz,
            "time_limits_s": dict(self.time_limits_s),
        }


def load_config(
    path: Optional[Union[str, Path]] = None,
    env: Optional[Mapping[str, str]] = None,
) -> ServiceConfig:
    """Build a ServiceConfig from an optional JSON file plus env overrides."""
    env = os.environ if env is None else env
    if path is None:
        config = ServiceConfig()
    else:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        known = set(ServiceConfig.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            config = ServiceConfig(**raw)
        except TypeError as exc:
            raise ConfigError(f"bad config value: {exc}") from exc

    override = env.get(DATA_DIR_ENV)
    if override:
        config = replace(config, data_dir=override)
    return config
