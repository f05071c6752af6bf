"""Staged term normalization against a reference vocabulary.

Resolution proceeds through fixed stages and stops at the first hit:
exact membership, lexicon lookup, trigram-embedding nearest neighbour
(accepted only at or above the similarity floor), then an optional
provider.  Terms no stage resolves come back ``unresolved``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Collection, Protocol, Sequence

from .errors import ProviderFailure
from .lexicon import SynonymLexicon
from .text import canonicalize_text, cosine, embed

__all__ = [
    "DEFAULT_TAU",
    "Stage",
    "NormalizationResult",
    "NormalizationProvider",
    "normalize_term",
]

log = logging.getLogger(__name__)

# Minimum trigram cosine for an embedding-stage hit.  0.55 keeps close
# misspellings while rejecting unrelated terms.
DEFAULT_TAU = 0.55


class Stage(str, Enum):
    EXACT = "exact"
    LEXICON = "lexicon"
    EMBEDDING = "embedding"
    LLM = "llm"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class NormalizationResult:
    """Outcome of normalizing one raw term.

    ``canonical`` is None exactly when ``stage`` is ``unresolved``.
    ``similarity`` is 1.0 for exact and lexicon hits, the accepted cosine for
    embedding hits, and an informational cosine for provider hits.
    """

    canonical: str | None
    stage: Stage
    similarity: float

    @property
    def resolved(self) -> bool:
        return self.canonical is not None


class NormalizationProvider(Protocol):
    """Optional last-resort resolver (typically backed by a language model)."""

    def choose(self, term: str, candidates: Sequence[str]) -> str | None:
        """Return one of ``candidates`` or None to abstain."""
        ...


def normalize_term(
    raw: str,
    vocab: Collection[str],
    lexicon: SynonymLexicon,
    *,
    provider: NormalizationProvider | None = None,
    tau: float = DEFAULT_TAU,
) -> NormalizationResult:
    """Resolve ``raw`` to a canonical vocabulary term.

    Stage order is fixed: exact, lexicon, embedding, provider.  A provider
    failure degrades to ``unresolved`` with a logged warning rather than
    propagating.
    """
    canonical = canonicalize_text(raw)
    if not canonical:
        return NormalizationResult(None, Stage.UNRESOLVED, 0.0)

    if canonical in vocab:
        return NormalizationResult(canonical, Stage.EXACT, 1.0)

    mapped = lexicon.get(canonical)
    if mapped is not None and mapped in vocab:
        return NormalizationResult(mapped, Stage.LEXICON, 1.0)

    if vocab:
        best_token: str | None = None
        best_sim = 0.0
        query = embed(canonical)
        # Sorted iteration makes the lexicographically smaller token win ties.
        for token in sorted(vocab):
            sim = cosine(query, embed(token))
            if sim > best_sim:
                best_token, best_sim = token, sim
        if best_token is not None and best_sim >= tau:
            return NormalizationResult(best_token, Stage.EMBEDDING, best_sim)

    if provider is not None and vocab:
        try:
            proposal = provider.choose(canonical, sorted(vocab))
        except ProviderFailure as exc:
            log.warning("normalization provider failed for %r: %s", canonical, exc)
            proposal = None
        if proposal is not None:
            chosen = canonicalize_text(proposal)
            if chosen in vocab:
                return NormalizationResult(chosen, Stage.LLM, cosine(embed(canonical), embed(chosen)))

    return NormalizationResult(None, Stage.UNRESOLVED, 0.0)
