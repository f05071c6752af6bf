"""Runtime configuration with layered precedence.

Values resolve as: command-line flag, then ``MEDROUTER_*`` environment
variable, then JSON config file, then built-in default.  Every consumer goes
through ``resolve_config`` so the precedence rules live in one place.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping

from .errors import ConfigError
from .lexicon import SynonymLexicon, default_lexicon, load_lexicon
from .normalize import DEFAULT_TAU
from .routing import DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_THRESHOLD, RoutingParams

__all__ = ["AppConfig", "resolve_config", "ENV_PREFIX"]

ENV_PREFIX = "MEDROUTER_"

_BACKENDS = ("stub", "remote")
_FRONTENDS = ("offline", "llm")


@dataclass
class AppConfig:
    registry: Path | None = None
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    threshold: float = DEFAULT_THRESHOLD
    tau: float = DEFAULT_TAU
    lexicon: Path | None = None
    output_dir: Path = Path("outputs")
    backend: str = "stub"
    endpoint: str | None = None
    timeout: float = 30.0
    frontend: str = "offline"
    port: int = 8000

    def routing_params(self) -> RoutingParams:
        return RoutingParams(alpha=self.alpha, beta=self.beta, threshold=self.threshold)

    def load_lexicon(self) -> SynonymLexicon:
        if self.lexicon is None:
            return default_lexicon()
        return load_lexicon(self.lexicon)

    def validate(self) -> "AppConfig":
        if self.backend not in _BACKENDS:
            raise ConfigError(f"backend must be one of {_BACKENDS}, got {self.backend!r}")
        if self.frontend not in _FRONTENDS:
            raise ConfigError(f"frontend must be one of {_FRONTENDS}, got {self.frontend!r}")
        if self.backend == "remote" and not self.endpoint:
            raise ConfigError("remote backend requires an endpoint")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau must be in (0, 1], got {self.tau}")
        if self.timeout <= 0:
            raise ConfigError(f"timeout must be positive, got {self.timeout}")
        if not 0 < self.port < 65536:
            raise ConfigError(f"port must be in 1..65535, got {self.port}")
        self.routing_params()
        return self


_FLOATS = {"alpha", "beta", "threshold", "tau", "timeout"}
_PATHS = {"registry", "lexicon", "output_dir"}
_STRINGS = {"backend", "endpoint", "frontend"}
_INTS = {"port"}
_KEYS = _FLOATS | _PATHS | _STRINGS | _INTS


def _coerce(key: str, value: object, origin: str) -> object:
    if key in _FLOATS:
        try:
            return float(value)  # type: ignore[arg-type]
        except (TypeError, ValueError):
            raise ConfigError(f"{origin}: {key} must be a number, got {value!r}") from None
    if key in _INTS:
        try:
            return int(value)  # type: ignore[arg-type]
        except (TypeError, ValueError):
            raise ConfigError(f"{origin}: {key} must be an integer, got {value!r}") from None
    if key in _PATHS:
        if not isinstance(value, (str, Path)) or not str(value):
            raise ConfigError(f"{origin}: {key} must be a path, got {value!r}")
        return Path(value)
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{origin}: {key} must be a string, got {value!r}")
    return value


def _from_file(path: Path) -> dict:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(raw) - _KEYS)
    if unknown:
        raise ConfigError(f"config file {path} has unknown keys: {', '.join(unknown)}")
    return {key: _coerce(key, value, str(path)) for key, value in raw.items() if value is not None}


def _from_env(env: Mapping[str, str]) -> dict:
    settings = {}
    for key in _KEYS:
        value = env.get(f"{ENV_PREFIX}{key.upper()}")
        if value is not None and value != "":
            settings[key] = _coerce(key, value, f"{ENV_PREFIX}{key.upper()}")
    return settings


def resolve_config(
    *,
    cli: Mapping[str, object] | None = None,
    config_file: Path | str | None = None,
    env: Mapping[str, str] | None = None,
) -> AppConfig:
    """Merge the three override layers onto the defaults and validate."""
    if env is None:
        env = os.environ
    settings: dict[str, object] = {}
    if config_file is not None:
        settings.update(_from_file(Path(config_file)))
    settings.update(_from_env(env))
    for key, value in (cli or {}).items():
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if value is not None:
            settings[key] = _coerce(key, value, "command line")

    config = AppConfig()
    for field in fields(AppConfig):
        if field.name in settings:
            setattr(config, field.name, settings[field.name])
    return config.validate()
