"""Match scoring and weight selection.

A task scores against a weight as

    S = I + alpha * sim_target + beta * sim_modality

where ``I`` is 1 only when the intents agree, the similarities are trigram
cosines over canonical terms, and the modality term is omitted entirely when
the task declares no modality.  Selection considers only same-intent weights,
requires the best score to strictly exceed the acceptance threshold, and
breaks exact ties by fewer classes, then lexicographically smaller weight id.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .registry import Intent, Registry, WeightRecord
from .text import cosine, embed

__all__ = [
    "DEFAULT_ALPHA",
    "DEFAULT_BETA",
    "DEFAULT_THRESHOLD",
    "RoutingParams",
    "RouteQuery",
    "ScoreBreakdown",
    "RankedCandidate",
    "RoutingDecision",
    "match_score",
    "select_weight",
]

DEFAULT_ALPHA = 1.5
DEFAULT_BETA = 1.0
DEFAULT_THRESHOLD = 1.6

REASON_BELOW_THRESHOLD = "below_threshold"
REASON_NO_CANDIDATES = "no_candidates"
REASON_INTENT_FILTERED = "intent_filtered"


@dataclass(frozen=True)
class RoutingParams:
    """Scoring weights and acceptance threshold.

    With similarities in [0, 1] the score is bounded by 1 + alpha + beta, so
    the threshold must sit strictly inside (0, 1 + alpha + beta).
    """

    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.beta <= 0:
            raise ConfigError("alpha and beta must be positive")
        if not 0 < self.threshold < 1 + self.alpha + self.beta:
            raise ConfigError(
                f"threshold {self.threshold} outside (0, {1 + self.alpha + self.beta})"
            )


@dataclass(frozen=True)
class RouteQuery:
    """A task in router terms: intent plus canonical target and modality."""

    intent: Intent
    target: str
    modality: str | None = None


@dataclass(frozen=True)
class ScoreBreakdown:
    intent_match: int
    sim_target: float
    sim_modality: float | None
    alpha: float
    beta: float

    @property
    def total(self) -> float:
        score = self.intent_match + self.alpha * self.sim_target
        if self.sim_modality is not None:
            score += self.beta * self.sim_modality
        return score

    def to_json_dict(self) -> dict:
        return {
            "I": self.intent_match,
            "sim_target": self.sim_target,
            "sim_modality": self.sim_modality,
            "alpha": self.alpha,
            "beta": self.beta,
            "S": self.total,
        }


@dataclass(frozen=True)
class RankedCandidate:
    weight_id: str
    class_count: int
    breakdown: ScoreBreakdown

    def to_json_dict(self) -> dict:
        return {"weight_id": self.weight_id, "class_count": self.class_count, **self.breakdown.to_json_dict()}


@dataclass(frozen=True)
class RoutingDecision:
    """Outcome of routing one task, with the full ranked candidate list."""

    task_id: str
    selected: str | None
    score: ScoreBreakdown | None
    ranked: tuple[RankedCandidate, ...]
    reason_if_none: str | None

    def to_json_dict(self, *, explain: bool = False) -> dict:
        doc: dict = {
            "selected": self.selected,
            "score": self.score.to_json_dict() if self.score else None,
            "reason_if_none": self.reason_if_none,
        }
        if explain:
            doc["ranked"] = [candidate.to_json_dict() for candidate in self.ranked]
        return doc


def match_score(query: RouteQuery, weight: WeightRecord, params: RoutingParams | None = None) -> ScoreBreakdown:
    """Score one weight against a task.

    ``sim_target`` compares the task target with the weight's full
    hyphen-joined target descriptor; the modality term is omitted (not
    zeroed) when the task has no modality.
    """
    params = params or RoutingParams()
    indicator = 1 if query.intent is weight.intent else 0
    sim_target = cosine(embed(query.target), embed(weight.joined_target))
    sim_modality = (
        cosine(embed(query.modality), embed(weight.norm_modality))
        if query.modality is not None
        else None
    )
    return ScoreBreakdown(
        intent_match=indicator,
        sim_target=sim_target,
        sim_modality=sim_modality,
        alpha=params.alpha,
        beta=params.beta,
    )


def select_weight(
    query: RouteQuery,
    registry: Registry,
    params: RoutingParams | None = None,
    *,
    task_id: str = "t1",
) -> RoutingDecision:
    """Pick the best weight for a task, or report why none qualifies.

    Weights of a different intent are filtered out before scoring; the
    survivors are ranked by score, class count, then weight id, and the
    leader is selected only when its score strictly exceeds the threshold.
    """
    params = params or RoutingParams()
    if not registry.records:
        return RoutingDecision(task_id, None, None, (), REASON_NO_CANDIDATES)

    candidates = [w for w in registry if w.intent is query.intent]
    if not candidates:
        return RoutingDecision(task_id, None, None, (), REASON_INTENT_FILTERED)

    ranked = tuple(
        sorted(
            (
                RankedCandidate(w.weight_id, w.class_count, match_score(query, w, params))
                for w in candidates
            ),
            key=lambda c: (-c.breakdown.total, c.class_count, c.weight_id),
        )
    )
    best = ranked[0]
    if best.breakdown.total > params.threshold:
        return RoutingDecision(task_id, best.weight_id, best.breakdown, ranked, None)
    return RoutingDecision(task_id, None, None, ranked, REASON_BELOW_THRESHOLD)
