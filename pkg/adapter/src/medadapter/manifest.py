"""Hosting manifest: which weights this server offers, and how to load them.

The manifest is a JSON object {"models": [...]} where each entry pins the
weight_id, its mode (0 classify, 1 segment), the class count the caller
will assert, and a loader spec.  Mode and class count must match what the
caller's registry derives from the weight name, so entries whose id starts
with a recognizable intent token are checked against it here.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError

__all__ = ["LoaderSpec", "HostedModel", "load_manifest"]

MODE_CLASSIFY = 0
MODE_SEGMENT = 1

_CLS_PREFIXES = frozenset({"cls", "classification"})
_SEG_PREFIXES = frozenset({"seg", "segmentation"})


@dataclass(frozen=True)
class LoaderSpec:
    """How to materialize one model: a kind plus kind-specific options."""

    kind: str
    options: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class HostedModel:
    weight_id: str
    mode: int
    class_count: int
    loader: LoaderSpec

    def __post_init__(self) -> None:
        if self.mode not in (MODE_CLASSIFY, MODE_SEGMENT):
            raise ConfigError(f"{self.weight_id!r}: mode must be 0 or 1, got {self.mode!r}")
        # Segmentation counts background and foreground, so 2 is the floor
        # for both modes, matching what callers derive from the weight name.
        if not isinstance(self.class_count, int) or self.class_count < 2:
            raise ConfigError(f"{self.weight_id!r}: class_count must be an integer >= 2")
        declared = self.weight_id.split("_", 1)[0].lower()
        if declared in _CLS_PREFIXES and self.mode != MODE_CLASSIFY:
            raise ConfigError(f"{self.weight_id!r}: name declares classification, mode is 1")
        if declared in _SEG_PREFIXES and self.mode != MODE_SEGMENT:
            raise ConfigError(f"{self.weight_id!r}: name declares segmentation, mode is 0")


def _parse_entry(index: int, entry: Any) -> HostedModel:
    origin = f"models[{index}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{origin}: entry must be an object")
    weight_id = entry.get("weight_id")
    if not isinstance(weight_id, str) or not weight_id:
        raise ConfigError(f"{origin}: weight_id must be a non-empty string")
    mode = entry.get("mode")
    if not isinstance(mode, int) or isinstance(mode, bool):
        raise ConfigError(f"{origin}: mode must be an integer")
    class_count = entry.get("class_count")
    if not isinstance(class_count, int) or isinstance(class_count, bool):
        raise ConfigError(f"{origin}: class_count must be an integer")
    loader = entry.get("loader")
    if not isinstance(loader, dict) or not isinstance(loader.get("kind"), str):
        raise ConfigError(f"{origin}: loader must be an object with a string 'kind'")
    options = {key: value for key, value in loader.items() if key != "kind"}
    return HostedModel(
        weight_id=weight_id,
        mode=mode,
        class_count=class_count,
        loader=LoaderSpec(kind=loader["kind"], options=options),
    )


def load_manifest(path: Path | str) -> tuple[HostedModel, ...]:
    """Read and validate a hosting manifest file."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("models"), list):
        raise ConfigError(f"{path}: manifest must be an object with a 'models' list")

    models = tuple(_parse_entry(i, entry) for i, entry in enumerate(doc["models"]))
    seen: set[str] = set()
    for model in models:
        if model.weight_id in seen:
            raise ConfigError(f"duplicate weight_id {model.weight_id!r} in manifest")
        seen.add(model.weight_id)
    if not models:
        raise ConfigError(f"{path}: manifest hosts no models")
    return models
