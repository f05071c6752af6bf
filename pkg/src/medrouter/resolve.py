"""Plan resolution: normalize terms and route every task to a weight.

Resolution never drops or reorders tasks and never raises for a task that
cannot be served; such tasks are annotated for the engine to skip.  An
unresolved target degrades to routing on its canonicalized raw text, which
normally lands below the acceptance threshold.  An unresolved modality makes
the task modality-unspecified, which drops the modality term from scoring.
"""
from __future__ import annotations

from dataclasses import dataclass

from .lexicon import SynonymLexicon
from .normalize import DEFAULT_TAU, NormalizationProvider, NormalizationResult, normalize_term
from .plan import Plan, TaskSpec
from .registry import Registry, WeightRecord
from .routing import RouteQuery, RoutingDecision, RoutingParams, select_weight
from .text import canonicalize_text

__all__ = ["ResolvedTask", "ResolvedPlan", "resolve_plan"]


@dataclass(frozen=True)
class ResolvedTask:
    spec: TaskSpec
    norm_target: NormalizationResult
    norm_modality: NormalizationResult | None
    routing: RoutingDecision
    weight: WeightRecord | None
    skip_reason: str | None

    @property
    def task_id(self) -> str:
        return self.spec.task_id

    @property
    def effective_target(self) -> str:
        """Canonical target when resolved, canonicalized raw text otherwise."""
        return self.norm_target.canonical or canonicalize_text(self.spec.raw_target)

    @property
    def effective_modality(self) -> str | None:
        if self.norm_modality is None or self.norm_modality.canonical is None:
            return None
        return self.norm_modality.canonical

    @property
    def class_labels(self) -> tuple[str, ...]:
        return self.weight.class_labels if self.weight else ()

    def to_json_dict(self, *, explain: bool = False) -> dict:
        doc = self.spec.to_json_dict()
        doc["normalization"] = {
            "target": _normalization_dict(self.norm_target),
            "modality": _normalization_dict(self.norm_modality) if self.norm_modality else None,
        }
        doc["routing"] = self.routing.to_json_dict(explain=explain)
        doc["class_labels"] = list(self.class_labels)
        doc["skip"] = (
            {"status": "skipped_no_weight", "reason": self.skip_reason}
            if self.skip_reason is not None
            else None
        )
        return doc


def _normalization_dict(result: NormalizationResult) -> dict:
    return {
        "canonical": result.canonical,
        "stage": result.stage.value,
        "similarity": result.similarity,
    }


@dataclass(frozen=True)
class ResolvedPlan:
    query: str
    tasks: tuple[ResolvedTask, ...]

    def task(self, task_id: str) -> ResolvedTask:
        for task in self.tasks:
            if task.task_id == task_id:
                return task
        raise KeyError(task_id)

    def to_json_dict(self, *, explain: bool = False) -> dict:
        return {
            "query": self.query,
            "tasks": [task.to_json_dict(explain=explain) for task in self.tasks],
        }


def resolve_plan(
    plan: Plan,
    registry: Registry,
    lexicon: SynonymLexicon,
    *,
    params: RoutingParams | None = None,
    tau: float = DEFAULT_TAU,
    provider: NormalizationProvider | None = None,
) -> ResolvedPlan:
    """Normalize and route every task of ``plan`` against ``registry``."""
    params = params or RoutingParams()
    resolved: list[ResolvedTask] = []
    for spec in plan.tasks:
        norm_target = normalize_term(
            spec.raw_target, registry.vocab.targets, lexicon, provider=provider, tau=tau
        )
        norm_modality = (
            normalize_term(spec.raw_modality, registry.vocab.modalities, lexicon, provider=provider, tau=tau)
            if spec.raw_modality is not None
            else None
        )

        target_text = norm_target.canonical or canonicalize_text(spec.raw_target)
        modality_text = norm_modality.canonical if norm_modality is not None else None
        decision = select_weight(
            RouteQuery(intent=spec.intent, target=target_text, modality=modality_text),
            registry,
            params,
            task_id=spec.task_id,
        )

        weight = registry.get(decision.selected) if decision.selected else None
        skip_reason = None
        if weight is None:
            detail = f"no weight selected ({decision.reason_if_none})"
            if not norm_target.resolved:
                detail = f"target {spec.raw_target!r} not in vocabulary; {detail}"
            skip_reason = detail

        resolved.append(
            ResolvedTask(
                spec=spec,
                norm_target=norm_target,
                norm_modality=norm_modality,
                routing=decision,
                weight=weight,
                skip_reason=skip_reason,
            )
        )
    return ResolvedPlan(query=plan.query, tasks=tuple(resolved))
