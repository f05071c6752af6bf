"""Canonical JSON serialization used by every export surface.

CLI stdout and service bodies must be byte-identical for the same document,
so both go through this one serializer.
"""
from __future__ import annotations

import json
from typing import Any

__all__ = ["canonical_json"]


def canonical_json(obj: Any) -> str:
    """Serialize with sorted keys, two-space indent, and a trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
