"""Deterministic offline request parser.

A network-free stand-in for the language-model frontend: requests are split
into clauses at sentence boundaries, each clause is classified by intent
keywords, and targets and modalities are recognized by scanning for known
vocabulary tokens and lexicon keys (longest match wins).  Conditional marker
phrases gate a clause's task on the immediately preceding task.

Known limitation, by design: "if inconclusive" is treated as a negative
outcome marker even though an inconclusive result is really a third state.
"""
from __future__ import annotations

import re
from typing import Iterable

from .errors import NoTaskRecognized
from .lexicon import SynonymLexicon
from .plan import Plan, plan_from_dict
from .registry import ReferenceVocab
from .text import canonicalize_text

__all__ = ["offline_parse"]

_SENTENCE_SPLIT = re.compile(r"[.!?]+")

_POSITIVE_MARKERS = ("if confirmed", "upon confirmation", "if found", "if detected", "if present")
_NEGATIVE_MARKERS = ("if not", "if negative", "if absent", "if inconclusive")

_SEG_KEYWORDS = ("segmentation", "segment", "isolate", "delimit", "delineate", "outline")
_CLS_KEYWORDS = (
    "classification",
    "classify",
    "detect",
    "check",
    "assess",
    "screen",
    "evaluate",
    "examine",
    "determine",
    "diagnose",
)
# "Does ... have/show ..." style questions are classification requests.
_QUESTION_PATTERN = re.compile(r"\b(?:does|do)\b.+?\b(?:have|show|find|contain|exhibit|reveal)\b")


def _keyword_pattern(keywords: Iterable[str]) -> re.Pattern[str]:
    ordered = sorted(set(keywords), key=lambda k: (-len(k), k))
    return re.compile(r"\b(?:" + "|".join(re.escape(k) for k in ordered) + r")\b")


_SEG_PATTERN = _keyword_pattern(_SEG_KEYWORDS)
_CLS_PATTERN = _keyword_pattern(_CLS_KEYWORDS)
_MARKER_PATTERNS = {
    marker: re.compile(r"\b" + re.escape(marker) + r"\b")
    for marker in _POSITIVE_MARKERS + _NEGATIVE_MARKERS
}


def _scan_terms(vocab_tokens: Iterable[str], lexicon: SynonymLexicon, vocab_side: set[str]) -> re.Pattern[str] | None:
    terms = set(vocab_tokens)
    terms.update(key for key, value in lexicon.items() if value in vocab_side)
    if not terms:
        return None
    ordered = sorted(terms, key=lambda t: (-len(t), t))
    return re.compile(r"\b(?:" + "|".join(re.escape(t) for t in ordered) + r")\b")


def _best_match(pattern: re.Pattern[str] | None, clause: str) -> str | None:
    if pattern is None:
        return None
    best: tuple[int, int, str] | None = None
    for match in pattern.finditer(clause):
        key = (-len(match.group()), match.start(), match.group())
        if best is None or key < best:
            best = key
    return best[2] if best else None


def _detect_intent(clause: str) -> str | None:
    hits: list[tuple[int, str]] = []
    seg = _SEG_PATTERN.search(clause)
    if seg:
        hits.append((seg.start(), "segmentation"))
    cls = _CLS_PATTERN.search(clause)
    if cls:
        hits.append((cls.start(), "classification"))
    question = _QUESTION_PATTERN.search(clause)
    if question:
        hits.append((question.start(), "classification"))
    if not hits:
        return None
    return min(hits)[1]


def _detect_marker(clause: str) -> tuple[str | None, str]:
    """Return the condition kind (if any) and the clause with the marker removed."""
    best: tuple[int, str, str] | None = None
    for marker, pattern in _MARKER_PATTERNS.items():
        match = pattern.search(clause)
        if match and (best is None or match.start() < best[0]):
            kind = "outcome_positive" if marker in _POSITIVE_MARKERS else "outcome_negative"
            best = (match.start(), kind, match.group())
    if best is None:
        return None, clause
    _, kind, span = best
    stripped = canonicalize_text(clause.replace(span, " ", 1))
    return kind, stripped


def offline_parse(query: str, vocab: ReferenceVocab, lexicon: SynonymLexicon) -> Plan:
    """Parse a request into a plan using the deterministic rule grammar.

    Raises :class:`NoTaskRecognized` when no clause yields a task.
    """
    target_side = set(vocab.targets)
    modality_side = set(vocab.modalities)
    if target_side:
        target_pattern = _scan_terms(vocab.targets, lexicon, target_side)
    else:
        # Empty registry: fall back to lexicon terms so the request still
        # parses and downstream routing reports the missing weight.
        fallback = {term for pair in lexicon.items() for term in pair}
        target_pattern = _scan_terms(fallback, lexicon, fallback)
    modality_pattern = _scan_terms(vocab.modalities, lexicon, modality_side)

    tasks: list[dict] = []
    for sentence in _SENTENCE_SPLIT.split(query):
        clause = canonicalize_text(sentence)
        if not clause:
            continue
        condition_kind, clause = _detect_marker(clause)
        intent = _detect_intent(clause)
        if intent is None:
            continue
        target = _best_match(target_pattern, clause)
        if target is None:
            continue
        task: dict = {"intent": intent, "target": target}
        modality = _best_match(modality_pattern, clause)
        if modality is not None:
            task["modality"] = modality
        if condition_kind is not None and tasks:
            task["condition"] = {"kind": condition_kind}
        tasks.append(task)

    if not tasks:
        raise NoTaskRecognized(f"no actionable task recognized in {query!r}")
    return plan_from_dict({"query": query, "tasks": tasks}, query=query)
