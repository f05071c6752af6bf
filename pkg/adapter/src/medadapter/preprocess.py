"""Image preparation for hosted models.

The full pipeline is decode, resize to 256x256, per-channel histogram
equalization, then a normalized float32 tensor.  The stub rules need the
raw luma plane instead (no equalization), so that path is exposed
separately; both share the decode and resize steps.
"""
from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .errors import DecodeFailure

__all__ = [
    "TARGET_SIZE",
    "decode_image",
    "equalize_channel",
    "luma_plane",
    "preprocess_bytes",
]

TARGET_SIZE = 256


def decode_image(data: bytes) -> Image.Image:
    """Decode raw bytes into a fully loaded PIL image."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
        return img
    except (OSError, ValueError) as exc:
        raise DecodeFailure(f"cannot decode image: {exc}") from exc


def _fit(img: Image.Image) -> Image.Image:
    if img.size == (TARGET_SIZE, TARGET_SIZE):
        return img
    return img.resize((TARGET_SIZE, TARGET_SIZE), Image.Resampling.BILINEAR)


def equalize_channel(channel: np.ndarray) -> np.ndarray:
    """Histogram-equalize one uint8 plane.

    Standard cumulative-histogram remap; a constant plane has an empty
    intensity span and is returned unchanged.
    """
    hist = np.bincount(channel.ravel(), minlength=256)
    cdf = hist.cumsum()
    lowest = cdf[np.nonzero(hist)[0][0]]
    span = cdf[-1] - lowest
    if span == 0:
        return channel
    lut = np.round((cdf - lowest) * 255.0 / span).clip(0, 255).astype(np.uint8)
    return lut[channel]


def preprocess_bytes(data: bytes) -> np.ndarray:
    """Turn image bytes into a (256, 256, 3) float32 tensor in [0, 1]."""
    rgb = np.asarray(_fit(decode_image(data).convert("RGB")), dtype=np.uint8)
    equalized = np.stack(
        [equalize_channel(rgb[:, :, c]) for c in range(3)], axis=2
    )
    return equalized.astype(np.float32) / 255.0


def luma_plane(data: bytes) -> np.ndarray:
    """Normalized 256x256 luma plane in [0, 1], without equalization.

    Grayscale conversion happens before the resize so color inputs collapse
    through the same Rec. 601 weighting regardless of their resolution.
    """
    plane = _fit(decode_image(data).convert("L"))
    return np.asarray(plane, dtype=np.float64) / 255.0
