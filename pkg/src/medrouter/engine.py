"""Conditional plan execution.

Tasks form a DAG through ``depends_on`` edges.  A task runs only when it has a
selected weight, every dependency finished, and its condition (if any) holds
against the already-computed source output.  Everything else is recorded as a
skip with a specific status so downstream consumers can tell *why* a task did
not run.

Condition semantics over classification outputs:

* ``outcome_positive``: predicted label differs from the negative class.
* ``outcome_negative``: predicted label equals the negative class.
* ``class_equals``: predicted label equals the condition label (compared on
  canonicalized text, so casing and punctuation differences do not matter).
"""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from enum import Enum

from .backends import ClassificationOutput, ImageRef, InferenceBackend, SegmentationOutput
from .errors import (
    BadConditionSource,
    CycleDetected,
    InvalidPlan,
    MedRouterError,
    SourceNotDone,
    Timeout,
    TransportFailure,
    UnknownConditionLabel,
)
from .plan import ConditionKind, ConditionPredicate, Plan, TaskSpec
from .registry import NEGATIVE_LABEL, Intent
from .resolve import ResolvedPlan, ResolvedTask
from .text import canonicalize_text

__all__ = [
    "TaskStatus",
    "TaskResult",
    "ExecutionReport",
    "validate_dag",
    "topo_order",
    "evaluate_condition",
    "execute",
    "render_answer",
]


class TaskStatus(str, Enum):
    DONE = "done"
    SKIPPED_CONDITION = "skipped_condition"
    SKIPPED_NO_WEIGHT = "skipped_no_weight"
    SKIPPED_DEPENDENCY = "skipped_dependency"
    FAILED = "failed"


@dataclass(frozen=True)
class TaskResult:
    task_id: str
    status: TaskStatus
    output: ClassificationOutput | SegmentationOutput | None = None
    duration_s: float = 0.0
    error: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "status": self.status.value,
            "output": self.output.to_json_dict() if self.output is not None else None,
            "duration_s": self.duration_s,
            "error": self.error,
        }


def _spec_of(task: TaskSpec | ResolvedTask) -> TaskSpec:
    return task.spec if isinstance(task, ResolvedTask) else task


def _tasks_of(plan: Plan | ResolvedPlan) -> list[TaskSpec | ResolvedTask]:
    return list(plan.tasks)


def validate_dag(plan: Plan | ResolvedPlan) -> list[str]:
    """Collect structural problems without raising.

    Checks dependency references, condition sources (they must name an
    existing classification task, not the task itself), condition labels
    against the source weight's classes when those are known, and cycles.
    Returns human-readable issue strings; an empty list means the plan is
    executable.
    """
    tasks = _tasks_of(plan)
    specs = {(_spec_of(t)).task_id: _spec_of(t) for t in tasks}
    resolved = {t.task_id: t for t in tasks if isinstance(t, ResolvedTask)}
    issues: list[str] = []

    for spec in specs.values():
        for dep in spec.depends_on:
            if dep not in specs:
                issues.append(f"task {spec.task_id!r} depends on unknown task {dep!r}")
        cond = spec.condition
        if cond is None:
            continue
        if cond.source_task == spec.task_id:
            issues.append(str(BadConditionSource(f"task {spec.task_id!r} conditions on itself")))
        elif cond.source_task not in specs:
            issues.append(
                str(BadConditionSource(
                    f"task {spec.task_id!r} conditions on unknown task {cond.source_task!r}"
                ))
            )
        else:
            source = specs[cond.source_task]
            if source.intent is not Intent.CLASSIFICATION:
                issues.append(
                    str(BadConditionSource(
                        f"task {spec.task_id!r} conditions on {cond.source_task!r}, "
                        f"which is a {source.intent.value} task"
                    ))
                )
            elif cond.kind is ConditionKind.CLASS_EQUALS and cond.source_task in resolved:
                weight = resolved[cond.source_task].weight
                if weight is not None:
                    wanted = canonicalize_text(cond.label or "")
                    known = {canonicalize_text(label) for label in weight.class_labels}
                    if wanted not in known:
                        issues.append(
                            str(UnknownConditionLabel(
                                f"task {spec.task_id!r} expects label {cond.label!r} "
                                f"but weight {weight.weight_id!r} produces {list(weight.class_labels)}"
                            ))
                        )

    try:
        topo_order(plan)
    except CycleDetected as exc:
        issues.append(str(exc))
    return issues


def topo_order(plan: Plan | ResolvedPlan) -> list[str]:
    """Kahn's algorithm over dependency edges; ties go to the smaller task id.

    Unknown dependency references are ignored here (validate_dag reports
    them); cycles raise CycleDetected naming the tasks left unordered.
    """
    specs = [_spec_of(t) for t in _tasks_of(plan)]
    ids = {s.task_id for s in specs}
    pending: dict[str, set[str]] = {
        s.task_id: {d for d in s.depends_on if d in ids and d != s.task_id} for s in specs
    }
    dependents: dict[str, list[str]] = {s.task_id: [] for s in specs}
    for s in specs:
        for dep in pending[s.task_id]:
            dependents[dep].append(s.task_id)

    ready = [tid for tid, deps in pending.items() if not deps]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        tid = heapq.heappop(ready)
        order.append(tid)
        for follower in dependents[tid]:
            deps = pending[follower]
            deps.discard(tid)
            if not deps:
                heapq.heappush(ready, follower)
    if len(order) != len(specs):
        stuck = sorted(set(pending) - set(order))
        raise CycleDetected(f"dependency cycle involving tasks {stuck}")
    return order


def evaluate_condition(cond: ConditionPredicate, results: dict[str, TaskResult]) -> bool:
    source = results.get(cond.source_task)
    if source is None:
        raise BadConditionSource(f"condition source {cond.source_task!r} has no result")
    if source.status is not TaskStatus.DONE:
        raise SourceNotDone(
            f"condition source {cond.source_task!r} is {source.status.value}, not done"
        )
    if not isinstance(source.output, ClassificationOutput):
        raise BadConditionSource(
            f"condition source {cond.source_task!r} produced no classification output"
        )
    predicted = source.output.predicted_label
    if cond.kind is ConditionKind.OUTCOME_POSITIVE:
        return predicted != NEGATIVE_LABEL
    if cond.kind is ConditionKind.OUTCOME_NEGATIVE:
        return predicted == NEGATIVE_LABEL
    return canonicalize_text(predicted) == canonicalize_text(cond.label or "")


@dataclass(frozen=True)
class ExecutionReport:
    query: str
    plan: ResolvedPlan
    results: tuple[TaskResult, ...] = field(default_factory=tuple)
    answer: str = ""
    total_duration_s: float = 0.0

    def result(self, task_id: str) -> TaskResult:
        for r in self.results:
            if r.task_id == task_id:
                return r
        raise KeyError(task_id)

    def to_json_dict(self, *, explain: bool = False) -> dict:
        tasks = []
        for r in self.results:
            resolved = self.plan.task(r.task_id)
            entry = {
                "task_id": r.task_id,
                "intent": resolved.spec.intent.value,
                "target": resolved.effective_target,
                "modality": resolved.effective_modality,
                "weight_id": resolved.weight.weight_id if resolved.weight else None,
                "status": r.status.value,
                "output": r.output.to_json_dict() if r.output is not None else None,
                "duration_s": r.duration_s,
                "error": r.error,
            }
            tasks.append(entry)
        body = {
            "query": self.query,
            "tasks": tasks,
            "answer": self.answer,
            "total_duration_s": self.total_duration_s,
        }
        if explain:
            body["plan"] = self.plan.to_json_dict(explain=True)
        return body


def _skip_result(task_id: str, status: TaskStatus, note: str) -> TaskResult:
    return TaskResult(task_id=task_id, status=status, error=note)


def execute(
    plan: ResolvedPlan,
    backend: InferenceBackend,
    image: ImageRef,
    *,
    validate: bool = True,
) -> ExecutionReport:
    """Run every runnable task against one input image.

    Raises InvalidPlan (carrying the issue list) when validation finds
    structural problems.  Individual task failures never abort the report;
    they surface as ``failed`` results and cascade as dependency skips.
    The exception is Timeout and TransportFailure: those mean the backend
    itself is down, so they propagate for the caller to report.
    """
    if validate:
        issues = validate_dag(plan)
        if issues:
            raise InvalidPlan(issues)

    by_id = {t.task_id: t for t in plan.tasks}
    results: dict[str, TaskResult] = {}
    started = time.perf_counter()

    for task_id in topo_order(plan):
        task = by_id[task_id]
        spec = task.spec

        if task.weight is None:
            results[task_id] = _skip_result(
                task_id, TaskStatus.SKIPPED_NO_WEIGHT, task.skip_reason or "no weight selected"
            )
            continue

        blocking = [d for d in spec.depends_on if results[d].status is not TaskStatus.DONE]
        if blocking:
            results[task_id] = _skip_result(
                task_id,
                TaskStatus.SKIPPED_DEPENDENCY,
                f"dependencies not satisfied: {', '.join(sorted(blocking))}",
            )
            continue

        if spec.condition is not None:
            try:
                holds = evaluate_condition(spec.condition, results)
            except (BadConditionSource, SourceNotDone) as exc:
                results[task_id] = _skip_result(task_id, TaskStatus.SKIPPED_DEPENDENCY, str(exc))
                continue
            if not holds:
                cond = spec.condition
                label = f" {cond.label!r}" if cond.label else ""
                results[task_id] = _skip_result(
                    task_id,
                    TaskStatus.SKIPPED_CONDITION,
                    f"condition {cond.kind.value}{label} on {cond.source_task!r} not met",
                )
                continue

        task_started = time.perf_counter()
        try:
            if spec.intent is Intent.CLASSIFICATION:
                output: ClassificationOutput | SegmentationOutput = backend.classify(image, task.weight)
            else:
                output = backend.segment(image, task.weight, task_id=task_id)
            results[task_id] = TaskResult(
                task_id=task_id,
                status=TaskStatus.DONE,
                output=output,
                duration_s=time.perf_counter() - task_started,
            )
        except (Timeout, TransportFailure):
            # Connection-level trouble means the backend as a whole is
            # unavailable; retrying the remaining tasks cannot succeed, so
            # the caller gets the raw error instead of a degraded report.
            raise
        except (MedRouterError, ValueError, OSError) as exc:
            results[task_id] = TaskResult(
                task_id=task_id,
                status=TaskStatus.FAILED,
                duration_s=time.perf_counter() - task_started,
                error=str(exc),
            )

    ordered = tuple(results[tid] for tid in topo_order(plan))
    report = ExecutionReport(
        query=plan.query,
        plan=plan,
        results=ordered,
        answer=render_answer(plan, ordered),
        total_duration_s=time.perf_counter() - started,
    )
    return report


def render_answer(plan: ResolvedPlan, results: tuple[TaskResult, ...]) -> str:
    """One line per task, in execution order, readable without the JSON."""
    if not results:
        return "no executable tasks"
    lines = []
    for r in results:
        task = plan.task(r.task_id)
        head = f"{r.task_id}: {task.spec.intent.value}({task.effective_target})"
        if r.status is TaskStatus.DONE and isinstance(r.output, ClassificationOutput):
            probability = max(r.output.probabilities)
            lines.append(f"{head} -> {r.output.predicted_label} (p={probability:.2f})")
        elif r.status is TaskStatus.DONE and isinstance(r.output, SegmentationOutput):
            lines.append(
                f"{head} -> mask {r.output.mask_ref.name} "
                f"(foreground={r.output.foreground_fraction:.4f})"
            )
        elif r.status is TaskStatus.FAILED:
            lines.append(f"{head} failed ({r.error})")
        else:
            lines.append(f"{head} {r.status.value} ({r.error})")
    return "\n".join(lines)
