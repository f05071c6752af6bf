"""Weight registry: filename convention parsing and directory scanning.

Weight files encode their task as ``Intent_Target_Modality`` stems with
exactly three underscore-separated segments.  Classification targets may list
several classes joined by hyphens; segmentation names carry a single target
token (hyphens there are part of the token).  An optional ``<stem>.labels.json``
sidecar supplies explicit class labels and wins over filename derivation.

A scanned registry is immutable: records, warnings, and vocabulary are fixed
tuples, and repeated scans of the same directory contents produce an
identical listing.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator, Mapping

from .errors import (
    DuplicateWeightId,
    EmptySegment,
    MalformedName,
    NamingError,
    SidecarGap,
    SidecarMismatch,
    UnknownIntent,
)
from .jsonio import canonical_json
from .lexicon import SynonymLexicon
from .text import canonicalize_text

__all__ = [
    "Intent",
    "ParsedName",
    "WeightRecord",
    "ReferenceVocab",
    "Registry",
    "DEFAULT_WEIGHT_EXTENSIONS",
    "NEGATIVE_LABEL",
    "parse_weight_name",
    "format_weight_name",
    "derive_class_labels",
    "reference_vocab",
    "scan_registry",
    "load_sidecar",
]

_CLS_TOKENS = frozenset({"cls", "class", "classification"})
_SEG_TOKENS = frozenset({"seg", "segment", "segmentation"})

DEFAULT_WEIGHT_EXTENSIONS = frozenset(
    {".pt", ".pth", ".ckpt", ".onnx", ".h5", ".keras", ".safetensors", ".pb"}
)

# Reserved first label of binary classifiers derived without a sidecar.
NEGATIVE_LABEL = "negative"

_SIDECAR_SUFFIX = ".labels.json"


class Intent(str, Enum):
    CLASSIFICATION = "classification"
    SEGMENTATION = "segmentation"


@dataclass(frozen=True)
class ParsedName:
    """Decomposition of a weight file stem."""

    intent: Intent
    raw_targets: tuple[str, ...]
    raw_modality: str


@dataclass(frozen=True)
class WeightRecord:
    """One scanned weight with normalized terms and derived class labels."""

    weight_id: str
    parsed: ParsedName
    norm_targets: tuple[str, ...]
    joined_target: str
    norm_modality: str
    path: Path
    class_labels: tuple[str, ...]

    @property
    def class_count(self) -> int:
        return len(self.class_labels)

    @property
    def intent(self) -> Intent:
        return self.parsed.intent


@dataclass(frozen=True)
class ReferenceVocab:
    """Canonical target and modality tokens drawn from a registry.

    Stored as sorted tuples so iteration order is deterministic.
    """

    targets: tuple[str, ...]
    modalities: tuple[str, ...]


def parse_weight_name(stem: str) -> ParsedName:
    """Parse a weight file stem into intent, targets, and modality.

    Raises :class:`MalformedName`, :class:`UnknownIntent`, or
    :class:`EmptySegment` for names outside the convention.
    """
    segments = stem.split("_")
    if len(segments) != 3:
        raise MalformedName(
            f"{stem!r}: expected 3 underscore-separated segments, found {len(segments)}"
        )
    intent_seg, target_seg, modality_seg = segments

    intent_token = canonicalize_text(intent_seg)
    if not intent_token:
        raise EmptySegment(f"{stem!r}: empty intent segment")
    if intent_token in _CLS_TOKENS:
        intent = Intent.CLASSIFICATION
    elif intent_token in _SEG_TOKENS:
        intent = Intent.SEGMENTATION
    else:
        raise UnknownIntent(f"{stem!r}: unrecognized intent token {intent_token!r}")

    if intent is Intent.SEGMENTATION:
        # A segmentation name carries one target; hyphens belong to the token.
        targets = (canonicalize_text(target_seg),)
    else:
        targets = tuple(canonicalize_text(part) for part in target_seg.split("-"))
    if not targets or any(not t for t in targets):
        raise EmptySegment(f"{stem!r}: empty target token")

    modality = canonicalize_text(modality_seg)
    if not modality:
        raise EmptySegment(f"{stem!r}: empty modality segment")

    return ParsedName(intent=intent, raw_targets=targets, raw_modality=modality)


def format_weight_name(parsed: ParsedName) -> str:
    """Render a parsed name back to a stem.

    Inverse of :func:`parse_weight_name` whenever the parsed fields are
    already canonical.
    """
    intent = "Segmentation" if parsed.intent is Intent.SEGMENTATION else "Classification"
    return f"{intent}_{'-'.join(parsed.raw_targets)}_{parsed.raw_modality}"


def load_sidecar(path: Path) -> Mapping[str, str] | None:
    """Read a ``<stem>.labels.json`` sidecar if present."""
    sidecar_path = path.parent / (path.stem + _SIDECAR_SUFFIX)
    if not sidecar_path.exists():
        return None
    try:
        data = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SidecarMismatch(f"{sidecar_path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise SidecarMismatch(f"{sidecar_path}: sidecar must be a JSON object")
    return data


def derive_class_labels(parsed: ParsedName, sidecar: Mapping[str, str] | None = None) -> tuple[str, ...]:
    """Derive the ordered class labels for a weight.

    A sidecar wins when present.  Otherwise segmentation defaults to
    ``(background, target)``, a single-target classification to
    ``(negative, target)``, and a multi-target classification to the filename
    targets in order with no implicit negative class.
    """
    if sidecar is not None:
        labels = _labels_from_sidecar(parsed, sidecar)
    elif parsed.intent is Intent.SEGMENTATION:
        labels = ("background", parsed.raw_targets[0])
    elif len(parsed.raw_targets) == 1:
        labels = (NEGATIVE_LABEL, parsed.raw_targets[0])
    else:
        labels = parsed.raw_targets
    return labels


def _labels_from_sidecar(parsed: ParsedName, sidecar: Mapping[str, str]) -> tuple[str, ...]:
    indices: dict[int, str] = {}
    for key, value in sidecar.items():
        try:
            index = int(key)
        except (TypeError, ValueError):
            raise SidecarGap(f"sidecar index {key!r} is not an integer") from None
        if not isinstance(value, str):
            raise SidecarMismatch(f"sidecar label for index {key} is not a string")
        label = canonicalize_text(value)
        if not label:
            raise SidecarMismatch(f"sidecar label for index {key} is empty")
        indices[index] = label
    if sorted(indices) != list(range(len(indices))):
        raise SidecarGap(f"sidecar indices {sorted(indices)} are not contiguous from 0")
    labels = tuple(indices[i] for i in range(len(indices)))

    if len(labels) < 2:
        raise SidecarMismatch(f"sidecar declares {len(labels)} classes; at least 2 required")
    if parsed.intent is Intent.SEGMENTATION and len(labels) != 2:
        raise SidecarMismatch(
            f"segmentation sidecar declares {len(labels)} classes; exactly 2 required"
        )
    if parsed.intent is Intent.CLASSIFICATION and len(labels) < len(parsed.raw_targets):
        raise SidecarMismatch(
            f"sidecar declares {len(labels)} classes but the filename lists "
            f"{len(parsed.raw_targets)} targets"
        )
    return labels


@dataclass(frozen=True)
class Registry:
    """Immutable scan result: sorted records plus vocabulary and warnings."""

    root: Path
    records: tuple[WeightRecord, ...]
    warnings: tuple[str, ...]
    vocab: ReferenceVocab

    def __iter__(self) -> Iterator[WeightRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def get(self, weight_id: str) -> WeightRecord | None:
        for record in self.records:
            if record.weight_id == weight_id:
                return record
        return None

    def listing(self) -> list[dict]:
        """Projection of every record, sorted by weight id."""
        rows = []
        for record in self.records:
            try:
                path = record.path.relative_to(self.root).as_posix()
            except ValueError:
                path = record.path.as_posix()
            rows.append(
                {
                    "weight_id": record.weight_id,
                    "intent": record.intent.value,
                    "targets": list(record.norm_targets),
                    "modality": record.norm_modality,
                    "class_labels": list(record.class_labels),
                    "path": path,
                }
            )
        return rows

    def listing_json(self) -> str:
        return canonical_json(self.listing())


def reference_vocab(records: tuple[WeightRecord, ...] | list[WeightRecord]) -> ReferenceVocab:
    """Collect the canonical target and modality tokens of ``records``."""
    targets = {token for record in records for token in record.norm_targets}
    modalities = {record.norm_modality for record in records}
    return ReferenceVocab(targets=tuple(sorted(targets)), modalities=tuple(sorted(modalities)))


def _normalize_token(token: str, lexicon: SynonymLexicon) -> str:
    # Scan-time normalization is canonicalize + lexicon: the registry itself
    # defines the vocabulary, so the embedding stage has nothing to match yet.
    return lexicon.get(token) or token


def build_record(stem: str, path: Path, lexicon: SynonymLexicon, sidecar: Mapping[str, str] | None = None) -> WeightRecord:
    """Construct a :class:`WeightRecord` for one weight file."""
    parsed = parse_weight_name(stem)
    norm_targets = tuple(_normalize_token(t, lexicon) for t in parsed.raw_targets)
    norm_modality = _normalize_token(parsed.raw_modality, lexicon)
    normalized = ParsedName(parsed.intent, norm_targets, norm_modality)
    labels = derive_class_labels(normalized, sidecar)
    return WeightRecord(
        weight_id=stem,
        parsed=parsed,
        norm_targets=norm_targets,
        joined_target="-".join(norm_targets),
        norm_modality=norm_modality,
        path=path,
        class_labels=labels,
    )


def scan_registry(
    root: Path | str,
    lexicon: SynonymLexicon,
    *,
    extensions: frozenset[str] = DEFAULT_WEIGHT_EXTENSIONS,
) -> Registry:
    """Scan a directory tree of weight files into a registry.

    Files whose stems fail to parse are reported as warnings and skipped;
    two files sharing a stem raise :class:`DuplicateWeightId`.  Sidecar
    problems are treated as authoring errors and raised.
    """
    root = Path(root)
    records: dict[str, WeightRecord] = {}
    warnings: list[str] = []
    for path in sorted(root.rglob("*")):
        if not path.is_file() or path.suffix.lower() not in extensions:
            continue
        stem = path.stem
        if stem in records:
            raise DuplicateWeightId(
                f"weight id {stem!r} appears at both {records[stem].path} and {path}"
            )
        try:
            records[stem] = build_record(stem, path, lexicon, load_sidecar(path))
        except NamingError as exc:
            warnings.append(f"{path.relative_to(root).as_posix()}: {exc}")
    ordered = tuple(sorted(records.values(), key=lambda r: r.weight_id))
    return Registry(
        root=root,
        records=ordered,
        warnings=tuple(warnings),
        vocab=reference_vocab(ordered),
    )
