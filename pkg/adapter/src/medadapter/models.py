"""Model materialization and the built-in stub rules.

Loaders are a plug point: a kind string maps to a builder that turns a
manifest entry into a ready model.  Only the deterministic stub ships here;
real serialized formats register their own builder via register_loader
before the manifest is built into an app.
"""
from __future__ import annotations

import base64
import io
from typing import Callable, Protocol

import numpy as np
from PIL import Image

from .errors import ConfigError
from .manifest import MODE_CLASSIFY, HostedModel
from .preprocess import luma_plane

__all__ = [
    "FOREGROUND_THRESHOLD",
    "InferenceModel",
    "StubModel",
    "register_loader",
    "build_model",
]

FOREGROUND_THRESHOLD = 0.5


class InferenceModel(Protocol):
    def run(self, data: bytes) -> dict:
        """Produce the wire response body for one image."""


class StubModel:
    """Mean-intensity stand-in for a trained network.

    Binary classification reads p(positive) straight off the mean luma;
    multi-class picks the intensity band containing the mean, gives that
    class 1 - |mean - band center| and spreads the remainder evenly.
    Segmentation thresholds the luma plane at 0.5.
    """

    def __init__(self, hosted: HostedModel):
        self.hosted = hosted

    def run(self, data: bytes) -> dict:
        plane = luma_plane(data)
        if self.hosted.mode == MODE_CLASSIFY:
            return {"probabilities": self._probabilities(plane)}
        return self._mask_response(plane)

    def _probabilities(self, plane: np.ndarray) -> list[float]:
        mean = float(plane.mean())
        n = self.hosted.class_count
        if n == 2:
            return [1.0 - mean, mean]
        band = min(int(mean * n), n - 1)
        center = (band + 0.5) / n
        selected = 1.0 - abs(mean - center)
        rest = (1.0 - selected) / (n - 1)
        return [selected if k == band else rest for k in range(n)]

    def _mask_response(self, plane: np.ndarray) -> dict:
        mask = plane > FOREGROUND_THRESHOLD
        fraction = float(mask.sum()) / mask.size
        encoded = io.BytesIO()
        Image.fromarray((mask * np.uint8(255)).astype(np.uint8), mode="L").save(
            encoded, format="PNG"
        )
        return {
            "mask_png_base64": base64.b64encode(encoded.getvalue()).decode("ascii"),
            "foreground_fraction": fraction,
        }


_LOADER_BUILDERS: dict[str, Callable[[HostedModel], InferenceModel]] = {
    "stub": StubModel,
}


def register_loader(kind: str, builder: Callable[[HostedModel], InferenceModel]) -> None:
    """Expose a new loader kind to manifests."""
    _LOADER_BUILDERS[kind] = builder


def build_model(hosted: HostedModel) -> InferenceModel:
    builder = _LOADER_BUILDERS.get(hosted.loader.kind)
    if builder is None:
        known = ", ".join(sorted(_LOADER_BUILDERS))
        raise ConfigError(
            f"{hosted.weight_id!r}: unknown loader kind {hosted.loader.kind!r} (known: {known})"
        )
    return builder(hosted)
