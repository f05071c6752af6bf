"""Shared test utilities.

The trigram arithmetic here is written from scratch (plain Counters) so the
routing and similarity tests check the implementation against an independent
computation rather than against itself.
"""
from __future__ import annotations

import math
from collections import Counter
from pathlib import Path

from PIL import Image

from medrouter.lexicon import SynonymLexicon
from medrouter.registry import Registry, WeightRecord, build_record, reference_vocab

TABLE1_STEMS = (
    "Seg_Lung_Chest X-ray",
    "Segmentation_Lung_CXR",
    "Cls_TB_Chest X-ray",
    "Classification_Tuberculosis_CXR",
    "Cls_Covid-Pneumonia_CXR",
)


def reference_trigrams(term: str) -> Counter:
    padded = f"^{term}$"
    return Counter(padded[i : i + 3] for i in range(len(padded) - 2))


def reference_cosine(a: str, b: str) -> float:
    """Independent trigram cosine over already-canonical terms."""
    u = reference_trigrams(a)
    v = reference_trigrams(b)
    dot = sum(count * v.get(gram, 0) for gram, count in u.items())
    if dot == 0:
        return 0.0
    norm_u = sum(c * c for c in u.values())
    norm_v = sum(c * c for c in v.values())
    return dot / math.sqrt(norm_u * norm_v)


def reference_score(
    intent_match: int,
    sim_target: float,
    sim_modality: float | None,
    alpha: float,
    beta: float,
) -> float:
    score = intent_match + alpha * sim_target
    if sim_modality is not None:
        score += beta * sim_modality
    return score


def registry_from_stems(
    stems: list[str] | tuple[str, ...],
    lexicon: SynonymLexicon | None = None,
    sidecars: dict[str, dict] | None = None,
) -> Registry:
    """Build an in-memory registry without touching the filesystem."""
    lexicon = lexicon if lexicon is not None else SynonymLexicon()
    records: list[WeightRecord] = []
    for stem in stems:
        sidecar = (sidecars or {}).get(stem)
        records.append(build_record(stem, Path(f"/weights/{stem}.pt"), lexicon, sidecar))
    ordered = tuple(sorted(records, key=lambda r: r.weight_id))
    return Registry(
        root=Path("/weights"),
        records=ordered,
        warnings=(),
        vocab=reference_vocab(ordered),
    )


def write_weights(root: Path, stems: list[str] | tuple[str, ...]) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    for stem in stems:
        (root / f"{stem}.pt").touch()
    return root


def make_image(path: Path, pixels, mode: str = "L", fmt: str = "PNG") -> Path:
    """Write a small test image; ``pixels`` is a constant or a row-major grid."""
    if isinstance(pixels, int) or isinstance(pixels, tuple):
        img = Image.new(mode, (8, 8), color=pixels)
    else:
        height = len(pixels)
        width = len(pixels[0])
        img = Image.new(mode, (width, height))
        img.putdata([value for row in pixels for value in row])
    img.save(path, format=fmt)
    return path


def checkerboard(size: int = 8) -> list[list[int]]:
    return [[255 if (x + y) % 2 == 0 else 0 for x in range(size)] for y in range(size)]
