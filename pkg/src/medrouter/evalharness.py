"""Plan-quality evaluation against a gold corpus.

Each gold record pins the expected decomposition of one request: per-task
intent, canonical target, selected weight id (null when no weight should
clear the routing threshold), dependency edges, and condition predicates.
Gold task ids are positional (``t1`` .. ``tn``), matching the frontend's
defaults, so comparison is by position.

Scoring dimensions and their denominators:

* intention / target / weight / overall count per task;
* condition counts per declared condition predicate;
* dependency counts per declared dependency edge.

A task's overall cell requires every per-task dimension to be correct, the
exact dependency edge set, the predicted task count to match, and (when the
record declares an expected answer class) the executed answer to agree.
Records are always executed, on a uniform white image by default, so answer
checking exercises the full pipeline rather than just plan shape.
"""
from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

from PIL import Image

from .backends import ClassificationOutput, ImageRef, InferenceBackend, StubBackend
from .engine import ExecutionReport, TaskStatus, execute
from .errors import CorpusError, MedRouterError
from .lexicon import SynonymLexicon
from .offline import offline_parse
from .plan import ConditionKind, ConditionPredicate, Plan
from .registry import Intent, Registry
from .resolve import ResolvedPlan, resolve_plan
from .routing import RoutingParams
from .text import canonicalize_text

__all__ = [
    "GoldTask",
    "GoldRecord",
    "CorrectnessFlags",
    "DimensionTally",
    "RecordScore",
    "EvalRow",
    "EvalReport",
    "load_corpus",
    "default_corpus",
    "score_record",
    "run_eval",
    "SIMPLE",
    "COMPLEX",
]

SIMPLE = "simple"
COMPLEX = "complex"
_KINDS = (SIMPLE, COMPLEX)


@dataclass(frozen=True)
class GoldTask:
    intent: Intent
    target: str
    weight_id: str | None
    depends_on: tuple[str, ...] = ()
    condition: ConditionPredicate | None = None


@dataclass(frozen=True)
class GoldRecord:
    record_id: str
    kind: str
    query: str
    tasks: tuple[GoldTask, ...]
    expected_answer_class: str | None = None


@dataclass(frozen=True)
class CorrectnessFlags:
    """Per-record booleans; None marks a dimension the record never declares."""

    intention: bool
    target: bool
    weight: bool
    condition: bool | None
    dependency: bool | None
    answer: bool | None
    overall: bool


@dataclass(frozen=True)
class DimensionTally:
    correct: int = 0
    total: int = 0

    def __add__(self, other: "DimensionTally") -> "DimensionTally":
        return DimensionTally(self.correct + other.correct, self.total + other.total)

    @property
    def percent(self) -> float | None:
        if self.total == 0:
            return None
        return 100.0 * self.correct / self.total

    def cell(self) -> str:
        if self.total == 0:
            return "Null"
        return f"{self.correct}/{self.total} ({self.percent:.2f}%)"

    def to_json_dict(self) -> dict:
        return {"correct": self.correct, "total": self.total, "percent": self.percent}


@dataclass(frozen=True)
class RecordScore:
    record: GoldRecord
    flags: CorrectnessFlags
    intention: DimensionTally
    target: DimensionTally
    weight: DimensionTally
    condition: DimensionTally
    dependency: DimensionTally
    overall: DimensionTally
    duration_s: float
    error: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "id": self.record.record_id,
            "kind": self.record.kind,
            "flags": {
                "intention": self.flags.intention,
                "target": self.flags.target,
                "weight": self.flags.weight,
                "condition": self.flags.condition,
                "dependency": self.flags.dependency,
                "answer": self.flags.answer,
                "overall": self.flags.overall,
            },
            "tallies": {
                "intention": self.intention.to_json_dict(),
                "target": self.target.to_json_dict(),
                "weight": self.weight.to_json_dict(),
                "condition": self.condition.to_json_dict(),
                "dependency": self.dependency.to_json_dict(),
                "overall": self.overall.to_json_dict(),
            },
            "duration_s": self.duration_s,
            "error": self.error,
        }


def _parse_condition(entry: object, task_count: int, where: str) -> ConditionPredicate | None:
    if entry is None:
        return None
    if not isinstance(entry, dict):
        raise CorpusError(f"{where}: condition must be an object or null")
    try:
        kind = ConditionKind(entry.get("kind"))
    except ValueError:
        raise CorpusError(f"{where}: unknown condition kind {entry.get('kind')!r}") from None
    source = entry.get("source_task")
    if not _valid_task_ref(source, task_count):
        raise CorpusError(f"{where}: condition source_task {source!r} is not a task id")
    label = entry.get("label")
    if kind is ConditionKind.CLASS_EQUALS:
        if not isinstance(label, str) or not label:
            raise CorpusError(f"{where}: class_equals requires a label")
    elif label is not None:
        raise CorpusError(f"{where}: label only applies to class_equals")
    return ConditionPredicate(source_task=source, kind=kind, label=label)


def _valid_task_ref(value: object, task_count: int) -> bool:
    if not isinstance(value, str) or not value.startswith("t"):
        return False
    try:
        index = int(value[1:])
    except ValueError:
        return False
    return 1 <= index <= task_count


def _parse_gold_task(entry: object, task_count: int, where: str) -> GoldTask:
    if not isinstance(entry, dict):
        raise CorpusError(f"{where}: task must be an object")
    try:
        intent = Intent(entry.get("intent"))
    except ValueError:
        raise CorpusError(f"{where}: unknown intent {entry.get('intent')!r}") from None
    target = entry.get("target")
    if not isinstance(target, str) or not target.strip():
        raise CorpusError(f"{where}: target must be a non-empty string")
    weight_id = entry.get("weight_id")
    if weight_id is not None and not isinstance(weight_id, str):
        raise CorpusError(f"{where}: weight_id must be a string or null")
    depends_on = entry.get("depends_on", [])
    if not isinstance(depends_on, list):
        raise CorpusError(f"{where}: depends_on must be a list")
    for dep in depends_on:
        if not _valid_task_ref(dep, task_count):
            raise CorpusError(f"{where}: dependency {dep!r} is not a task id")
    condition = _parse_condition(entry.get("condition"), task_count, where)
    return GoldTask(
        intent=intent,
        target=target,
        weight_id=weight_id,
        depends_on=tuple(depends_on),
        condition=condition,
    )


def load_corpus(path: Path | str) -> tuple[GoldRecord, ...]:
    """Read a JSONL corpus, validating every record up front."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc}") from exc
    return parse_corpus(text, origin=str(path))


def parse_corpus(text: str, *, origin: str = "<corpus>") -> tuple[GoldRecord, ...]:
    records: list[GoldRecord] = []
    seen_ids: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        where = f"{origin}:{lineno}"
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{where}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise CorpusError(f"{where}: record must be an object")
        record_id = raw.get("id")
        if not isinstance(record_id, str) or not record_id:
            raise CorpusError(f"{where}: id must be a non-empty string")
        if record_id in seen_ids:
            raise CorpusError(f"{where}: duplicate record id {record_id!r}")
        seen_ids.add(record_id)
        kind = raw.get("kind")
        if kind not in _KINDS:
            raise CorpusError(f"{where}: kind must be one of {_KINDS}, got {kind!r}")
        query = raw.get("query")
        if not isinstance(query, str) or not query.strip():
            raise CorpusError(f"{where}: query must be a non-empty string")
        tasks_raw = raw.get("tasks")
        if not isinstance(tasks_raw, list) or not tasks_raw:
            raise CorpusError(f"{where}: tasks must be a non-empty list")
        tasks = tuple(
            _parse_gold_task(entry, len(tasks_raw), f"{where} task {i + 1}")
            for i, entry in enumerate(tasks_raw)
        )
        expected = raw.get("expected_answer_class")
        if expected is not None and not isinstance(expected, str):
            raise CorpusError(f"{where}: expected_answer_class must be a string or null")
        records.append(
            GoldRecord(
                record_id=record_id,
                kind=kind,
                query=query,
                tasks=tasks,
                expected_answer_class=expected,
            )
        )
    if not records:
        raise CorpusError(f"{origin}: corpus is empty")
    return tuple(records)


def default_corpus() -> tuple[GoldRecord, ...]:
    text = resources.files("medrouter.data").joinpath("gold_corpus.jsonl").read_text("utf-8")
    return parse_corpus(text, origin="gold_corpus.jsonl")


def _condition_matches(gold: ConditionPredicate, pred: ConditionPredicate | None) -> bool:
    if pred is None:
        return False
    if gold.kind is not pred.kind or gold.source_task != pred.source_task:
        return False
    if gold.kind is ConditionKind.CLASS_EQUALS:
        return canonicalize_text(gold.label or "") == canonicalize_text(pred.label or "")
    return True


def _answer_flag(record: GoldRecord, report: ExecutionReport | None) -> bool | None:
    """Check the first completed classification against the expected class."""
    if record.expected_answer_class is None:
        return None
    if report is None:
        return False
    for result in report.results:
        if result.status is TaskStatus.DONE and isinstance(result.output, ClassificationOutput):
            return canonicalize_text(result.output.predicted_label) == canonicalize_text(
                record.expected_answer_class
            )
    return False


def score_record(
    record: GoldRecord,
    resolved: ResolvedPlan | None,
    report: ExecutionReport | None,
    *,
    duration_s: float = 0.0,
    error: str | None = None,
) -> RecordScore:
    predicted = list(resolved.tasks) if resolved is not None else []
    n = len(record.tasks)
    count_match = len(predicted) == n

    intent_hits = target_hits = weight_hits = overall_hits = 0
    condition_hits = condition_total = 0
    dependency_hits = dependency_total = 0
    dependency_exact = True
    answer_ok = _answer_flag(record, report)

    for i, gold in enumerate(record.tasks):
        pred = predicted[i] if i < len(predicted) else None

        intent_ok = pred is not None and pred.spec.intent is gold.intent
        target_ok = pred is not None and canonicalize_text(pred.effective_target) == canonicalize_text(gold.target)
        pred_weight = pred.weight.weight_id if pred is not None and pred.weight else None
        weight_ok = pred is not None and pred_weight == gold.weight_id

        condition_ok = True
        if gold.condition is not None:
            condition_total += 1
            condition_ok = pred is not None and _condition_matches(gold.condition, pred.spec.condition)
            condition_hits += int(condition_ok)

        for dep in gold.depends_on:
            dependency_total += 1
            dependency_hits += int(pred is not None and dep in pred.spec.depends_on)
        edge_ok = pred is not None and set(pred.spec.depends_on) == set(gold.depends_on)
        dependency_exact = dependency_exact and edge_ok

        task_ok = (
            intent_ok
            and target_ok
            and weight_ok
            and condition_ok
            and edge_ok
            and count_match
            and answer_ok is not False
        )
        intent_hits += int(intent_ok)
        target_hits += int(target_ok)
        weight_hits += int(weight_ok)
        overall_hits += int(task_ok)

    flags = CorrectnessFlags(
        intention=count_match and intent_hits == n,
        target=count_match and target_hits == n,
        weight=count_match and weight_hits == n,
        condition=None if condition_total == 0 else (count_match and condition_hits == condition_total),
        dependency=None if dependency_total == 0 else (count_match and dependency_exact),
        answer=answer_ok,
        overall=overall_hits == n,
    )
    return RecordScore(
        record=record,
        flags=flags,
        intention=DimensionTally(intent_hits, n),
        target=DimensionTally(target_hits, n),
        weight=DimensionTally(weight_hits, n),
        condition=DimensionTally(condition_hits, condition_total),
        dependency=DimensionTally(dependency_hits, dependency_total),
        overall=DimensionTally(overall_hits, n),
        duration_s=duration_s,
        error=error,
    )


@dataclass(frozen=True)
class EvalRow:
    name: str
    record_count: int
    intention: DimensionTally
    target: DimensionTally
    weight: DimensionTally
    condition: DimensionTally
    dependency: DimensionTally
    overall: DimensionTally
    mean_duration_s: float

    def to_json_dict(self) -> dict:
        return {
            "class": self.name,
            "records": self.record_count,
            "intention": self.intention.to_json_dict(),
            "target": self.target.to_json_dict(),
            "weight": self.weight.to_json_dict(),
            "condition": self.condition.to_json_dict(),
            "dependency": self.dependency.to_json_dict(),
            "overall": self.overall.to_json_dict(),
            "mean_duration_s": self.mean_duration_s,
        }


def _aggregate(name: str, scores: Sequence[RecordScore]) -> EvalRow:
    def total(pick: Callable[[RecordScore], DimensionTally]) -> DimensionTally:
        tally = DimensionTally()
        for score in scores:
            tally = tally + pick(score)
        return tally

    durations = [score.duration_s for score in scores]
    return EvalRow(
        name=name,
        record_count=len(scores),
        intention=total(lambda s: s.intention),
        target=total(lambda s: s.target),
        weight=total(lambda s: s.weight),
        condition=total(lambda s: s.condition),
        dependency=total(lambda s: s.dependency),
        overall=total(lambda s: s.overall),
        mean_duration_s=statistics.fmean(durations) if durations else 0.0,
    )


@dataclass(frozen=True)
class EvalReport:
    scores: tuple[RecordScore, ...]

    @property
    def rows(self) -> tuple[EvalRow, EvalRow, EvalRow]:
        simple = [s for s in self.scores if s.record.kind == SIMPLE]
        complex_ = [s for s in self.scores if s.record.kind == COMPLEX]
        return (
            _aggregate("Simple", simple),
            _aggregate("Complex", complex_),
            _aggregate("Overall", list(self.scores)),
        )

    def to_json_dict(self) -> dict:
        return {
            "rows": [row.to_json_dict() for row in self.rows],
            "records": [score.to_json_dict() for score in self.scores],
        }

    def table_text(self) -> str:
        headers = (
            "Class",
            "Intention",
            "Target",
            "Weight",
            "Condition",
            "Dependency",
            "Overall",
            "Avg Time (s)",
        )
        lines = [headers]
        for row in self.rows:
            lines.append(
                (
                    row.name,
                    row.intention.cell(),
                    row.target.cell(),
                    row.weight.cell(),
                    row.condition.cell(),
                    row.dependency.cell(),
                    row.overall.cell(),
                    f"{row.mean_duration_s:.3f}",
                )
            )
        widths = [max(len(line[col]) for line in lines) for col in range(len(headers))]
        rendered = []
        for index, line in enumerate(lines):
            rendered.append("  ".join(cell.ljust(widths[col]) for col, cell in enumerate(line)).rstrip())
            if index == 0:
                rendered.append("  ".join("-" * widths[col] for col in range(len(headers))))
        return "\n".join(rendered)


def _white_image(directory: Path) -> ImageRef:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "eval_input.png"
    if not path.exists():
        Image.new("L", (256, 256), color=255).save(path)
    return ImageRef.open(path)


def run_eval(
    records: Sequence[GoldRecord],
    registry: Registry,
    lexicon: SynonymLexicon,
    *,
    backend: InferenceBackend | None = None,
    frontend: Callable[[str], Plan] | None = None,
    params: RoutingParams | None = None,
    output_dir: Path | str = "outputs",
    image: ImageRef | None = None,
) -> EvalReport:
    """Plan, resolve, and execute every record, then score it.

    The default frontend is the offline keyword parser; pass ``frontend`` to
    evaluate an LLM-backed one.  Per-record failures of any stage never abort
    the sweep; they score zero on declared dimensions and keep the error text.
    """
    output_dir = Path(output_dir)
    if backend is None:
        backend = StubBackend(output_dir=output_dir / "masks")
    if image is None:
        image = _white_image(output_dir)
    if frontend is None:
        vocab = registry.vocab

        def frontend(query: str) -> Plan:
            return offline_parse(query, vocab, lexicon)

    scores = []
    for record in records:
        started = time.perf_counter()
        resolved: ResolvedPlan | None = None
        report: ExecutionReport | None = None
        error: str | None = None
        try:
            plan = frontend(record.query)
            resolved = resolve_plan(plan, registry, lexicon, params=params)
            report = execute(resolved, backend, image)
        except MedRouterError as exc:
            error = str(exc)
        duration = time.perf_counter() - started
        scores.append(score_record(record, resolved, report, duration_s=duration, error=error))
    return EvalReport(scores=tuple(scores))
