"""
From a sentence to an executed plan
===================================

A conditional request becomes a task graph: classify first, and only
segment when the classification comes back positive.  The stub backend
makes the whole path runnable without any model server.
"""

import tempfile
from pathlib import Path

from PIL import Image

from medrouter import (
    ImageRef,
    StubBackend,
    StubConfig,
    demo_registry,
    execute,
    offline_parse,
    resolve_plan,
)

QUERY = "Check this chest x-ray for pneumonia. If confirmed, segment the lungs."

work = Path(tempfile.mkdtemp(prefix="plan_demo_"))
registry, lexicon = demo_registry(work / "registry")

# The offline frontend parses against the registry vocabulary, so the
# plan only ever names targets that some weight can serve.
plan = offline_parse(QUERY, registry.vocab, lexicon)
print(f"query: {QUERY}")
for spec in plan.tasks:
    condition = spec.condition.kind.value if spec.condition else "-"
    print(
        f"  {spec.task_id}: {spec.intent.value}({spec.raw_target})"
        f" depends_on={list(spec.depends_on)} condition={condition}"
    )

# Resolution normalizes terms and routes each task to a weight.
resolved = resolve_plan(plan, registry, lexicon)
print("\nrouting")
for task in resolved.tasks:
    print(f"  {task.task_id} -> {task.weight.weight_id if task.weight else task.skip_reason}")

# Any PNG or PGM works; a synthetic image keeps the demo hermetic.
image_path = work / "scan.png"
Image.new("L", (128, 128), 170).save(image_path)
image = ImageRef.open(image_path)

# forced_outcome pins the stub verdict so both branches are showable.
for outcome in ("pneumonia", "negative"):
    backend = StubBackend(StubConfig(forced_outcome=outcome), output_dir=work / outcome)
    report = execute(resolved, backend, image)
    print(f"\nstub forced to {outcome!r}:")
    for line in report.answer.splitlines():
        print(f"  {line}")
