"""Synonym lexicon mapping raw phrasings to canonical vocabulary terms.

Targets and modalities share one namespace; a lookup hit is only meaningful
to callers when the mapped value belongs to the vocabulary side they are
resolving against.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Iterator, Mapping

from .errors import ConfigError
from .text import canonicalize_text

__all__ = ["SynonymLexicon", "load_lexicon", "default_lexicon"]

_DEFAULT_ASSET = "default_lexicon.json"


class SynonymLexicon:
    """Immutable mapping from canonicalized raw term to canonical term."""

    def __init__(self, entries: Mapping[str, str] | None = None):
        table: dict[str, str] = {}
        for raw, canonical in (entries or {}).items():
            key = canonicalize_text(raw)
            value = canonicalize_text(canonical)
            if not key or not value:
                raise ConfigError(f"lexicon entry {raw!r} -> {canonical!r} canonicalizes to empty text")
            if key == value:
                raise ConfigError(f"lexicon entry {key!r} maps to itself")
            table[key] = value
        self._table = table

    def get(self, term: str) -> str | None:
        """Return the canonical form for ``term``, or None when unmapped."""
        return self._table.get(canonicalize_text(term))

    def items(self) -> Iterator[tuple[str, str]]:
        return iter(sorted(self._table.items()))

    def __len__(self) -> int:
        return len(self._table)

    def __contains__(self, term: str) -> bool:
        return canonicalize_text(term) in self._table


def load_lexicon(path: Path | str) -> SynonymLexicon:
    """Load a lexicon from a JSON object of raw -> canonical entries."""
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in data.items()
    ):
        raise ConfigError(f"{path}: lexicon file must be a JSON object of string entries")
    return SynonymLexicon(data)


def default_lexicon() -> SynonymLexicon:
    """Bundled default lexicon."""
    asset = resources.files("medrouter").joinpath("data").joinpath(_DEFAULT_ASSET)
    data = json.loads(asset.read_text(encoding="utf-8"))
    return SynonymLexicon(data)
