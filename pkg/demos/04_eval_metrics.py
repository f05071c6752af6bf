"""
Scoring plans against a gold corpus
===================================

The bundled corpus pairs requests with the plan a correct system should
produce.  run_eval parses and resolves every record, compares fields,
and aggregates per request class.
"""

import tempfile
from pathlib import Path

from medrouter import default_corpus, demo_registry, run_eval

work = Path(tempfile.mkdtemp(prefix="eval_demo_"))
registry, lexicon = demo_registry(work / "registry")

corpus = default_corpus()
print(f"{len(corpus)} gold records, e.g.:")
sample = corpus[0]
print(f"  query: {sample.query}")
print(f"  expected weights: {[t.weight_id for t in sample.tasks]}\n")

report = run_eval(corpus, registry, lexicon, output_dir=work / "runs")

# Field accuracies per class of request; Null cells mean the corpus has
# no record exercising that column for the row.
print(report.table_text())

# Per-record detail is available for drilling into misses.
misses = [s for s in report.scores if not s.flags.overall]
print(f"\nrecords fully correct: {len(report.scores) - len(misses)}/{len(report.scores)}")
