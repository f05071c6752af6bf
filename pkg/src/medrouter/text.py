"""Text canonicalization and character-trigram embeddings.

The embedding is a deterministic, dependency-free stand-in for a sentence
encoder: terms are padded with boundary sentinels, split into character
trigrams, and represented as L2-normalized term-frequency vectors.  Cosine
similarity over these vectors is therefore a plain dot product in [0, 1].
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import EmptyText

__all__ = ["canonicalize_text", "EmbeddingVector", "embed", "cosine"]

_WS_RUN = re.compile(r"\s+")
_DISALLOWED = re.compile(r"[^0-9a-z\- ]+")  # applied after lowercasing
_PAD_START = "^"
_PAD_END = "$"


def canonicalize_text(text: str) -> str:
    """Lowercase, trim, collapse whitespace, strip punctuation except hyphen."""
    lowered = _WS_RUN.sub(" ", text.lower())
    stripped = _DISALLOWED.sub("", lowered)
    return _WS_RUN.sub(" ", stripped).strip()


@dataclass(frozen=True)
class EmbeddingVector:
    """Sparse trigram vector.

    ``counts`` keeps the raw integer term frequencies so dot products stay
    exact; ``weights`` exposes the L2-normalized view.  ``norm_sq`` is the
    squared Euclidean norm of ``counts``.
    """

    counts: dict[str, int] = field(repr=False)
    norm_sq: int

    @property
    def weights(self) -> dict[str, float]:
        scale = 1.0 / math.sqrt(self.norm_sq)
        return {trigram: count * scale for trigram, count in self.counts.items()}

    @property
    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights.values()))


@lru_cache(maxsize=8192)
def embed(token: str) -> EmbeddingVector:
    """Embed a term as a trigram frequency vector.

    The term is canonicalized first; a term that canonicalizes to the empty
    string cannot be embedded and raises :class:`EmptyText`.
    """
    canonical = canonicalize_text(token)
    if not canonical:
        raise EmptyText(f"cannot embed empty text (from {token!r})")
    padded = f"{_PAD_START}{canonical}{_PAD_END}"
    counts = dict(Counter(padded[i : i + 3] for i in range(len(padded) - 2)))
    norm_sq = sum(c * c for c in counts.values())
    return EmbeddingVector(counts=counts, norm_sq=norm_sq)


def cosine(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """Cosine similarity in [0, 1].

    Computed as an exact integer dot product over raw counts divided by the
    product of norms, so identical terms score exactly 1.0 and disjoint terms
    exactly 0.0.
    """
    small, large = (u.counts, v.counts) if len(u.counts) <= len(v.counts) else (v.counts, u.counts)
    dot = sum(count * large.get(trigram, 0) for trigram, count in small.items())
    if dot == 0:
        return 0.0
    return dot / math.sqrt(u.norm_sq * v.norm_sq)
