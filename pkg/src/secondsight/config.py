"""Service configuration.

A config file is a flat JSON object; environment variables override file
values by upper-cased key (e.g. ARCHIVE_ROOT overrides archive_root).
Unset values fall back to the defaults below.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Mapping
from zoneinfo import ZoneInfo

from .errors import InvalidTimezone, ValidationError

_FLAT_KEYS = (
    "archive_root",
    "bind_address",
    "theta",
    "theta2",
    "phi",
    "merge_gap",
    "llm_endpoint",
    "llm_timeout_ms",
    "llm_enabled",
    "timezone_default",
)


@dataclass(frozen=True)
class LLMProviderConfig:
    endpoint: str
    timeout_ms: int = 5000
    enabled: bool = True

    def __post_init__(self):
        if not isinstance(self.endpoint, str) or not self.endpoint.strip():
            raise ValidationError("llm_endpoint must be a nonempty string")
        if not isinstance(self.timeout_ms, int) or isinstance(self.timeout_ms, bool) or self.timeout_ms <= 0:
            raise ValidationError("llm_timeout_ms must be a positive integer")
        if not isinstance(self.enabled, bool):
            raise ValidationError("llm_enabled must be a boolean")


@dataclass(frozen=True)
class ServiceConfig:
    archive_root: str = "./archive"
    bind_address: str = "127.0.0.1:8799"
    theta: float = 1.0          # stress / hr z-score "elevated" threshold
    theta2: float = 0.5         # "calm" threshold (stress < -theta2)
    phi: float = 0.6            # focus fraction threshold
    merge_gap: int = 2          # max gap (s) merged into one episode
    llm_provider: LLMProviderConfig | None = None
    timezone_default: str = "UTC"

    def __post_init__(self):
        for name in ("theta", "theta2", "phi"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValidationError(f"{name} must be a finite number")
            object.__setattr__(self, name, float(value))
        if isinstance(self.merge_gap, bool) or not isinstance(self.merge_gap, int) or self.merge_gap < 0:
            raise ValidationError("merge_gap must be an integer >= 0")
        if not isinstance(self.archive_root, str) or not self.archive_root:
            raise ValidationError("archive_root must be a nonempty path")
        if not isinstance(self.bind_address, str) or ":" not in self.bind_address:
            raise ValidationError("bind_address must look like host:port")
        try:
            ZoneInfo(self.timezone_default)
        except Exception as exc:
            raise InvalidTimezone(f"unknown timezone_default: {self.timezone_default!r}") from exc

    @property
    def thresholds(self) -> dict[str, float]:
        return {"theta": self.theta, "theta2": self.theta2, "phi": self.phi}

    def bind_host_port(self) -> tuple[str, int]:
        host, _, port = self.bind_address.rpartition(":")
        try:
            return host, int(port)
        except ValueError as exc:
            raise ValidationError(f"invalid bind_address port: {self.bind_address!r}") from exc


def _coerce(key: str, value):
    """Parse a raw (possibly string) config value into its typed form."""
    if key in ("theta", "theta2", "phi"):
        try:
            return float(value)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{key} must be a number, got {value!r}") from exc
    if key in ("merge_gap", "llm_timeout_ms"):
        try:
            if isinstance(value, bool):
                raise ValueError
            return int(value)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{key} must be an integer, got {value!r}") from exc
    if key == "llm_enabled":
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0"):
            return value.lower() in ("true", "1")
        raise ValidationError(f"{key} must be a boolean, got {value!r}")
    if not isinstance(value, str):
        raise ValidationError(f"{key} must be a string, got {value!r}")
    return value


def load_config(
    path: str | os.PathLike | None = None,
    env: Mapping[str, str] | None = None,
) -> ServiceConfig:
    """Build a ServiceConfig from defaults <- config file <- environment."""
    env = os.environ if env is None else env
    raw: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                loaded = json.load(f)
        except OSError as exc:
            raise ValidationError(f"cannot read config file {path!r}: {exc}") from exc
        except ValueError as exc:
            raise ValidationError(f"config file {path!r} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ValidationError("config file must hold a flat JSON object")
        unknown = sorted(set(loaded) - set(_FLAT_KEYS))
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        raw.update(loaded)
    for key in _FLAT_KEYS:
        if key.upper() in env:
            raw[key] = env[key.upper()]
    raw = {k: _coerce(k, v) for k, v in raw.items()}

    llm_provider = None
    if "llm_endpoint" in raw:
        llm_provider = LLMProviderConfig(
            endpoint=raw.pop("llm_endpoint"),
            timeout_ms=raw.pop("llm_timeout_ms", 5000),
            enabled=raw.pop("llm_enabled", True),
        )
    else:
        for key in ("llm_timeout_ms", "llm_enabled"):
            if key in raw:
                raise ValidationError(f"{key} set without llm_endpoint")
    return ServiceConfig(llm_provider=llm_provider, **raw)
