"""Prompt assembly for the language-model plan frontend."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .errors import MissingExampleAsset, PlanError
from .plan import Plan, plan_from_dict
from .registry import ReferenceVocab

__all__ = ["FewShotExample", "load_few_shot_examples", "build_llm_prompt", "EXAMPLE_COUNT"]

# The bundled asset must hold exactly this many worked examples.
EXAMPLE_COUNT = 10

_ASSET_NAME = "few_shot_examples.json"

_TASK_DESCRIPTION = """\
You convert a medical imaging request into a JSON execution plan.

Reason through every component of the plan explicitly before answering:
1. intent: for each task, decide whether the user wants "classification"
   (a yes/no or which-class question) or "segmentation" (outline a region).
2. target: the anatomical structure or disease the task is about, quoted
   from the request.
3. modality: the imaging modality if the request names one, otherwise null.
4. depends_on: ids of earlier tasks this task needs, in the form ["t1"].
5. condition: when the request gates a task on an earlier result, attach
   {"source_task": <id>, "kind": <kind>} where kind is "outcome_positive",
   "outcome_negative", or "class_equals" (class_equals also takes "label").

Answer with a single JSON object of the form
{"tasks": [{"task_id": "t1", "intent": ..., "target": ..., "modality": ...,
"depends_on": [...], "condition": ...}]} and nothing else."""


@dataclass(frozen=True)
class FewShotExample:
    query: str
    plan: dict


def load_few_shot_examples() -> tuple[FewShotExample, ...]:
    """Load and validate the bundled few-shot examples.

    Raises :class:`MissingExampleAsset` when the asset is absent, is not a
    list of exactly ``EXAMPLE_COUNT`` entries, or any entry fails plan
    validation.
    """
    asset = resources.files("medrouter").joinpath("data").joinpath(_ASSET_NAME)
    try:
        data = json.loads(asset.read_text(encoding="utf-8"))
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        raise MissingExampleAsset(f"few-shot example asset unreadable: {exc}") from exc
    if not isinstance(data, list) or len(data) != EXAMPLE_COUNT:
        raise MissingExampleAsset(
            f"few-shot example asset must hold exactly {EXAMPLE_COUNT} examples"
        )
    examples = []
    for index, entry in enumerate(data):
        if not isinstance(entry, dict) or not isinstance(entry.get("query"), str):
            raise MissingExampleAsset(f"few-shot example {index} is malformed")
        plan = entry.get("plan")
        try:
            plan_from_dict(plan, query=entry["query"])
        except PlanError as exc:
            raise MissingExampleAsset(f"few-shot example {index} has an invalid plan: {exc}") from exc
        examples.append(FewShotExample(query=entry["query"], plan=plan))
    return tuple(examples)


def build_llm_prompt(query: str, vocab: ReferenceVocab) -> str:
    """Assemble the deterministic plan prompt for ``query``.

    The prompt embeds the task description, the reference vocabulary, the ten
    bundled worked examples, and the user query exactly once, in that order.
    """
    examples = load_few_shot_examples()
    blocks = [_TASK_DESCRIPTION]
    blocks.append("Known target terms: " + ", ".join(vocab.targets))
    blocks.append("Known modality terms: " + ", ".join(vocab.modalities))
    for example in examples:
        rendered = json.dumps(example.plan, sort_keys=True)
        blocks.append(f"Request: {example.query}\nPlan: {rendered}")
    blocks.append(f"Request: {query}\nPlan:")
    return "\n\n".join(blocks)


def _plan_from_example(example: FewShotExample) -> Plan:
    return plan_from_dict(example.plan, query=example.query)
