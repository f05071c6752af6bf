"""Inference backends: deterministic stub and remote wire client.

The stub derives outcomes from pixel statistics so end-to-end behaviour is
reproducible without trained weights: classification reads the mean intensity
of the Rec. 601 luma image, segmentation thresholds per pixel.  The remote
backend speaks the documented ``/infer`` wire protocol and validates every
response against it.  Either backend can serve the engine; swapping them
changes no plan-level behaviour.

Accepted image formats are PNG and PGM, which keeps decoding dependency-light.
"""
from __future__ import annotations

import base64
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import httpx
import numpy as np
from PIL import Image

from .errors import (
    DecodeFailure,
    IntentMismatch,
    ProtocolViolation,
    Timeout,
    TransportFailure,
)
from .registry import Intent, WeightRecord

__all__ = [
    "ImageRef",
    "ClassificationOutput",
    "SegmentationOutput",
    "StubConfig",
    "InferenceBackend",
    "StubBackend",
    "RemoteBackend",
    "stub_classify",
    "stub_segment",
    "MODE_CLASSIFY",
    "MODE_SEGMENT",
    "PROBABILITY_SUM_TOLERANCE",
]

# PIL reports PGM under the PPM family.
_PIL_FORMATS = {"PNG": "PNG", "PPM": "PGM"}

MODE_CLASSIFY = 0
MODE_SEGMENT = 1

# Wire-level tolerance on the probability sum.
PROBABILITY_SUM_TOLERANCE = 1e-4


@dataclass(frozen=True)
class ImageRef:
    """A decodable PNG or PGM image on disk."""

    path: Path
    width: int
    height: int
    format: str

    @classmethod
    def open(cls, path: Path | str) -> "ImageRef":
        path = Path(path)
        try:
            with Image.open(path) as img:
                fmt = _PIL_FORMATS.get(img.format or "")
                if fmt is None:
                    raise DecodeFailure(f"{path}: unsupported format {img.format!r} (PNG or PGM required)")
                return cls(path=path, width=img.width, height=img.height, format=fmt)
        except DecodeFailure:
            raise
        except (OSError, ValueError) as exc:
            raise DecodeFailure(f"{path}: cannot decode image ({exc})") from exc


@dataclass(frozen=True)
class ClassificationOutput:
    probabilities: tuple[float, ...]
    predicted_label: str

    def to_json_dict(self) -> dict:
        return {
            "kind": "classification",
            "probabilities": list(self.probabilities),
            "predicted_label": self.predicted_label,
        }


@dataclass(frozen=True)
class SegmentationOutput:
    mask_ref: Path
    foreground_fraction: float

    def to_json_dict(self) -> dict:
        return {
            "kind": "segmentation",
            "mask_path": self.mask_ref.as_posix(),
            "mask_file": self.mask_ref.name,
            "foreground_fraction": self.foreground_fraction,
        }


@dataclass(frozen=True)
class StubConfig:
    """Stub behaviour knobs.

    ``forced_outcome`` pins classification to one label with probability 1.
    ``threshold`` is the normalized intensity above which a pixel counts as
    foreground.
    """

    forced_outcome: str | None = None
    threshold: float = 0.5
    positive_rule: str = "mean_intensity"

    def __post_init__(self) -> None:
        if self.positive_rule != "mean_intensity":
            raise ValueError(f"unsupported positive_rule {self.positive_rule!r}")


class InferenceBackend(Protocol):
    def classify(self, image: ImageRef, weight: WeightRecord) -> ClassificationOutput: ...

    def segment(self, image: ImageRef, weight: WeightRecord, *, task_id: str) -> SegmentationOutput: ...


def _luma(image: ImageRef) -> np.ndarray:
    """Normalized luma plane in [0, 1]; color images use Rec. 601 weights."""
    try:
        with Image.open(image.path) as img:
            plane = img.convert("L")
            return np.asarray(plane, dtype=np.float64) / 255.0
    except (OSError, ValueError) as exc:
        raise DecodeFailure(f"{image.path}: cannot decode image ({exc})") from exc


def _require_intent(weight: WeightRecord, intent: Intent) -> None:
    if weight.intent is not intent:
        raise IntentMismatch(
            f"weight {weight.weight_id!r} is a {weight.intent.value} weight; {intent.value} requested"
        )


def stub_classify(image: ImageRef, weight: WeightRecord, cfg: StubConfig | None = None) -> ClassificationOutput:
    """Classify from mean intensity.

    Binary weights read p(positive) = mean; multi-class weights select the
    class whose intensity band [k/n, (k+1)/n) contains the mean, giving it
    probability 1 - |mean - band center| and spreading the remainder evenly.
    Argmax ties resolve to the lowest index.
    """
    cfg = cfg or StubConfig()
    _require_intent(weight, Intent.CLASSIFICATION)
    labels = weight.class_labels

    if cfg.forced_outcome is not None:
        if cfg.forced_outcome not in labels:
            raise ValueError(
                f"forced outcome {cfg.forced_outcome!r} is not a label of {weight.weight_id!r}"
            )
        probabilities = tuple(1.0 if label == cfg.forced_outcome else 0.0 for label in labels)
        return ClassificationOutput(probabilities=probabilities, predicted_label=cfg.forced_outcome)

    mean = float(_luma(image).mean())
    n = len(labels)
    if n == 2:
        probabilities = (1.0 - mean, mean)
    else:
        band = min(int(mean * n), n - 1)
        center = (band + 0.5) / n
        selected = 1.0 - abs(mean - center)
        rest = (1.0 - selected) / (n - 1)
        probabilities = tuple(selected if k == band else rest for k in range(n))

    predicted = labels[max(range(n), key=lambda k: (probabilities[k], -k))]
    return ClassificationOutput(probabilities=probabilities, predicted_label=predicted)


def stub_segment(
    image: ImageRef,
    weight: WeightRecord,
    cfg: StubConfig | None = None,
    *,
    output_dir: Path,
    mask_stem: str,
) -> SegmentationOutput:
    """Threshold the luma plane into a binary mask at the image's resolution."""
    cfg = cfg or StubConfig()
    _require_intent(weight, Intent.SEGMENTATION)
    plane = _luma(image)
    mask = plane > cfg.threshold
    fraction = float(mask.sum()) / mask.size

    output_dir.mkdir(parents=True, exist_ok=True)
    mask_path = output_dir / f"{mask_stem}_mask.png"
    Image.fromarray((mask * np.uint8(255)).astype(np.uint8), mode="L").save(mask_path)
    return SegmentationOutput(mask_ref=mask_path, foreground_fraction=fraction)


class StubBackend:
    """Engine-facing wrapper over the stub rules."""

    def __init__(self, config: StubConfig | None = None, output_dir: Path | str = "outputs"):
        self.config = config or StubConfig()
        self.output_dir = Path(output_dir)

    def classify(self, image: ImageRef, weight: WeightRecord) -> ClassificationOutput:
        return stub_classify(image, weight, self.config)

    def segment(self, image: ImageRef, weight: WeightRecord, *, task_id: str) -> SegmentationOutput:
        return stub_segment(
            image,
            weight,
            self.config,
            output_dir=self.output_dir,
            mask_stem=f"{task_id}_{weight.weight_id}",
        )


class RemoteBackend:
    """Client side of the documented ``/infer`` wire protocol."""

    def __init__(self, endpoint: str, *, timeout: float = 30.0, output_dir: Path | str = "outputs"):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.output_dir = Path(output_dir)

    def _post_infer(self, image: ImageRef, weight: WeightRecord, mode: int) -> dict:
        payload = {
            "weight_id": weight.weight_id,
            "mode": mode,
            "class_count": weight.class_count,
            "image": base64.b64encode(image.path.read_bytes()).decode("ascii"),
        }
        try:
            response = httpx.post(f"{self.endpoint}/infer", json=payload, timeout=self.timeout)
        except httpx.TimeoutException as exc:
            raise Timeout(f"inference call timed out after {self.timeout}s") from exc
        except httpx.TransportError as exc:
            raise TransportFailure(f"inference endpoint unreachable: {exc}") from exc
        if 400 <= response.status_code < 500:
            raise ProtocolViolation(
                f"server rejected request ({response.status_code}): {response.text[:200]}"
            )
        if response.status_code != 200:
            raise TransportFailure(f"inference endpoint returned {response.status_code}")
        try:
            body = response.json()
        except ValueError as exc:
            raise ProtocolViolation(f"non-JSON inference response: {exc}") from exc
        if not isinstance(body, dict):
            raise ProtocolViolation("inference response must be a JSON object")
        return body

    def classify(self, image: ImageRef, weight: WeightRecord) -> ClassificationOutput:
        _require_intent(weight, Intent.CLASSIFICATION)
        body = self._post_infer(image, weight, MODE_CLASSIFY)
        probabilities = body.get("probabilities")
        if not isinstance(probabilities, list) or len(probabilities) != weight.class_count:
            raise ProtocolViolation(
                f"expected {weight.class_count} probabilities, got {probabilities!r}"
            )
        if not all(isinstance(p, (int, float)) and 0.0 <= p <= 1.0 for p in probabilities):
            raise ProtocolViolation("probabilities must be numbers in [0, 1]")
        if abs(sum(probabilities) - 1.0) > PROBABILITY_SUM_TOLERANCE:
            raise ProtocolViolation(f"probabilities sum to {sum(probabilities)!r}, not 1")
        values = tuple(float(p) for p in probabilities)
        n = len(values)
        predicted = weight.class_labels[max(range(n), key=lambda k: (values[k], -k))]
        return ClassificationOutput(probabilities=values, predicted_label=predicted)

    def segment(self, image: ImageRef, weight: WeightRecord, *, task_id: str) -> SegmentationOutput:
        _require_intent(weight, Intent.SEGMENTATION)
        body = self._post_infer(image, weight, MODE_SEGMENT)
        encoded = body.get("mask_png_base64")
        fraction = body.get("foreground_fraction")
        if not isinstance(encoded, str):
            raise ProtocolViolation("mask_png_base64 missing from segmentation response")
        if not isinstance(fraction, (int, float)) or not 0.0 <= fraction <= 1.0:
            raise ProtocolViolation(f"foreground_fraction {fraction!r} outside [0, 1]")
        try:
            mask_bytes = base64.b64decode(encoded, validate=True)
            with Image.open(io.BytesIO(mask_bytes)) as mask:
                if mask.format != "PNG":
                    raise ProtocolViolation("mask is not a PNG image")
                mask.load()
        except (ValueError, OSError) as exc:
            raise ProtocolViolation(f"mask does not decode as PNG: {exc}") from exc

        self.output_dir.mkdir(parents=True, exist_ok=True)
        mask_path = self.output_dir / f"{task_id}_{weight.weight_id}_mask.png"
        mask_path.write_bytes(mask_bytes)
        return SegmentationOutput(mask_ref=mask_path, foreground_fraction=float(fraction))

    def health(self) -> dict:
        try:
            response = httpx.get(f"{self.endpoint}/health", timeout=self.timeout)
        except httpx.TimeoutException as exc:
            raise Timeout(f"health check timed out after {self.timeout}s") from exc
        except httpx.TransportError as exc:
            raise TransportFailure(f"inference endpoint unreachable: {exc}") from exc
        if response.status_code != 200:
            raise TransportFailure(f"health check returned {response.status_code}")
        body = response.json()
        if not isinstance(body, dict) or body.get("status") != "ok" or not isinstance(body.get("weights"), list):
            raise ProtocolViolation(f"malformed health response: {body!r}")
        return body
