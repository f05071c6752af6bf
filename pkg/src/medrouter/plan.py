"""Plan model: task specifications, conditions, and JSON parsing.

Both frontends (offline grammar and language model) produce the same plan
document shape and run through the same validator here.  ``parse_plan``
tolerates prose and code fences around the JSON object but is strict about
the object itself; every structural problem raises with the offending field
named.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping

from .errors import DanglingDependency, NoJsonFound, SchemaViolation
from .registry import Intent
from .text import canonicalize_text

__all__ = [
    "ConditionKind",
    "ConditionPredicate",
    "TaskSpec",
    "Plan",
    "parse_plan",
    "plan_from_dict",
    "plan_to_dict",
]

_CLS_TOKENS = frozenset({"cls", "class", "classification"})
_SEG_TOKENS = frozenset({"seg", "segment", "segmentation"})


class ConditionKind(str, Enum):
    OUTCOME_POSITIVE = "outcome_positive"
    OUTCOME_NEGATIVE = "outcome_negative"
    CLASS_EQUALS = "class_equals"


@dataclass(frozen=True)
class ConditionPredicate:
    """Gate on the outcome of an earlier classification task."""

    source_task: str
    kind: ConditionKind
    label: str | None = None

    def __post_init__(self) -> None:
        if (self.kind is ConditionKind.CLASS_EQUALS) != (self.label is not None):
            raise SchemaViolation("condition label is required exactly for class_equals")

    def to_json_dict(self) -> dict:
        doc: dict = {"source_task": self.source_task, "kind": self.kind.value}
        if self.label is not None:
            doc["label"] = self.label
        return doc


@dataclass(frozen=True)
class TaskSpec:
    """One requested task, with raw (unnormalized) terms."""

    task_id: str
    intent: Intent
    raw_target: str
    raw_modality: str | None = None
    depends_on: tuple[str, ...] = ()
    condition: ConditionPredicate | None = None

    def to_json_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "intent": self.intent.value,
            "target": self.raw_target,
            "modality": self.raw_modality,
            "depends_on": list(self.depends_on),
            "condition": self.condition.to_json_dict() if self.condition else None,
        }


@dataclass(frozen=True)
class Plan:
    query: str
    tasks: tuple[TaskSpec, ...]


def plan_to_dict(plan: Plan) -> dict:
    return {"query": plan.query, "tasks": [task.to_json_dict() for task in plan.tasks]}


def _parse_intent(value: Any, where: str) -> Intent:
    if not isinstance(value, str):
        raise SchemaViolation(f"{where}: intent must be a string")
    token = canonicalize_text(value)
    if token in _CLS_TOKENS:
        return Intent.CLASSIFICATION
    if token in _SEG_TOKENS:
        return Intent.SEGMENTATION
    raise SchemaViolation(f"{where}: unknown intent {value!r}")


def _parse_condition(value: Any, where: str, previous_id: str | None) -> ConditionPredicate:
    if not isinstance(value, Mapping):
        raise SchemaViolation(f"{where}: condition must be an object")
    kind_raw = value.get("kind")
    if not isinstance(kind_raw, str):
        raise SchemaViolation(f"{where}: condition.kind is required")
    try:
        kind = ConditionKind(kind_raw)
    except ValueError:
        raise SchemaViolation(f"{where}: unknown condition kind {kind_raw!r}") from None

    label = value.get("label")
    if kind is ConditionKind.CLASS_EQUALS:
        if not isinstance(label, str) or not canonicalize_text(label):
            raise SchemaViolation(f"{where}: class_equals condition requires a label")
        label = canonicalize_text(label)
    elif label is not None:
        raise SchemaViolation(f"{where}: condition kind {kind.value} takes no label")

    source = value.get("source_task")
    if source is None:
        # A condition without an explicit source gates on the previous task.
        if previous_id is None:
            raise SchemaViolation(f"{where}: condition has no source task to attach to")
        source = previous_id
    elif not isinstance(source, str) or not source:
        raise SchemaViolation(f"{where}: condition.source_task must be a non-empty string")
    return ConditionPredicate(source_task=source, kind=kind, label=label)


def plan_from_dict(data: Mapping[str, Any], query: str = "") -> Plan:
    """Validate a plan-shaped dict and build the typed plan.

    Task ids default to ``t1``, ``t2``, ... in array order; a condition's
    source task is added to ``depends_on`` automatically.
    """
    if not isinstance(data, Mapping):
        raise SchemaViolation("plan: top level must be a JSON object")
    raw_tasks = data.get("tasks")
    if raw_tasks is None:
        raise SchemaViolation("plan: 'tasks' is required")
    if not isinstance(raw_tasks, list):
        raise SchemaViolation("plan: 'tasks' must be an array")

    plan_query = data.get("query") if isinstance(data.get("query"), str) else None

    # First pass: assign ids so conditions and dependency checks can resolve.
    ids: list[str] = []
    for index, raw in enumerate(raw_tasks):
        where = f"tasks[{index}]"
        if not isinstance(raw, Mapping):
            raise SchemaViolation(f"{where}: task must be an object")
        task_id = raw.get("task_id", raw.get("id"))
        if task_id is None:
            task_id = f"t{index + 1}"
        if not isinstance(task_id, str) or not task_id:
            raise SchemaViolation(f"{where}: task_id must be a non-empty string")
        if task_id in ids:
            raise SchemaViolation(f"{where}: duplicate task_id {task_id!r}")
        ids.append(task_id)

    tasks: list[TaskSpec] = []
    for index, raw in enumerate(raw_tasks):
        where = f"tasks[{index}]"
        task_id = ids[index]

        target = raw.get("target")
        if not isinstance(target, str) or not canonicalize_text(target):
            raise SchemaViolation(f"{where}: target must be a non-empty string")

        modality = raw.get("modality")
        if modality is not None and not isinstance(modality, str):
            raise SchemaViolation(f"{where}: modality must be a string or null")
        if isinstance(modality, str) and not canonicalize_text(modality):
            modality = None

        depends_raw = raw.get("depends_on", [])
        if not isinstance(depends_raw, list) or not all(isinstance(d, str) for d in depends_raw):
            raise SchemaViolation(f"{where}: depends_on must be an array of task ids")
        for dep in depends_raw:
            if dep not in ids:
                raise DanglingDependency(f"{where}: depends on undeclared task {dep!r}")

        condition = None
        if raw.get("condition") is not None:
            previous = ids[index - 1] if index > 0 else None
            condition = _parse_condition(raw["condition"], where, previous)
            if condition.source_task not in ids:
                raise DanglingDependency(
                    f"{where}: condition references undeclared task {condition.source_task!r}"
                )

        depends_on = list(dict.fromkeys(depends_raw))
        if condition is not None and condition.source_task not in depends_on:
            depends_on.append(condition.source_task)

        tasks.append(
            TaskSpec(
                task_id=task_id,
                intent=_parse_intent(raw.get("intent"), where),
                raw_target=target,
                raw_modality=modality,
                depends_on=tuple(depends_on),
                condition=condition,
            )
        )
    return Plan(query=plan_query if plan_query is not None else query, tasks=tuple(tasks))


def _extract_first_json_object(raw: str) -> Mapping[str, Any]:
    decoder = json.JSONDecoder()
    start = raw.find("{")
    while start != -1:
        try:
            value, _ = decoder.raw_decode(raw, start)
        except json.JSONDecodeError:
            start = raw.find("{", start + 1)
            continue
        if isinstance(value, Mapping):
            return value
        start = raw.find("{", start + 1)
    raise NoJsonFound("no JSON object found in frontend output")


def parse_plan(raw: str, query: str = "") -> Plan:
    """Extract and validate the first JSON object in raw frontend output."""
    return plan_from_dict(_extract_first_json_object(raw), query=query)
