"""
Touring a weight registry
=========================

Weights are plain files whose names encode what they do.  Scanning a
directory of them yields structured records plus the vocabulary that
later stages normalize against.
"""

import tempfile
from pathlib import Path

from medrouter import demo_registry

# Materialize the bundled demo registry into a scratch directory and
# scan it.  scan_registry would work on any directory of weight files;
# the demo helper just ships a known-good set.
root = Path(tempfile.mkdtemp(prefix="registry_tour_"))
registry, lexicon = demo_registry(root)

print(f"scanned {len(registry)} weights from {root}\n")

# Each record carries the parsed intent, the normalized targets, the
# modality, and the class labels derived from the name.
header = f"{'weight id':<34} {'intent':<14} {'targets':<22} {'modality':<14} labels"
print(header)
print("-" * len(header))
for record in registry:
    targets = ", ".join(record.norm_targets)
    labels = ", ".join(record.class_labels)
    print(
        f"{record.weight_id:<34} {record.intent.value:<14} "
        f"{targets:<22} {record.norm_modality:<14} {labels}"
    )

# The scan also collects a reference vocabulary.  Query terms that are
# not in it get flagged during normalization instead of silently routed.
print("\nreference vocabulary")
print("  targets:   ", ", ".join(sorted(registry.vocab.targets)))
print("  modalities:", ", ".join(sorted(registry.vocab.modalities)))

# The lexicon maps clinical synonyms onto that vocabulary.
for term in ("tuberculosis", "chest radiograph", "colonoscopy"):
    print(f"  lexicon: {term!r} -> {lexicon.get(term)!r}")
