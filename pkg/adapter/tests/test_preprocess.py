"""Decode, resize, and equalization behaviour."""
from __future__ import annotations

import io

import numpy as np
import pytest
from PIL import Image

from medadapter.errors import DecodeFailure
from medadapter.preprocess import (
    TARGET_SIZE,
    decode_image,
    equalize_channel,
    luma_plane,
    preprocess_bytes,
)


def png_bytes(value, size=(256, 256), mode="L") -> bytes:
    buffer = io.BytesIO()
    Image.new(mode, size, color=value).save(buffer, format="PNG")
    return buffer.getvalue()


class TestDecode:
    def test_garbage_bytes_are_rejected(self):
        with pytest.raises(DecodeFailure, match="cannot decode"):
            decode_image(b"not an image at all")

    def test_png_and_pgm_decode(self):
        assert decode_image(png_bytes(80)).size == (256, 256)
        buffer = io.BytesIO()
        Image.new("L", (32, 32), color=80).save(buffer, format="PPM")
        assert decode_image(buffer.getvalue()).size == (32, 32)


class TestPreprocessShape:
    @pytest.mark.parametrize("size", [(512, 512), (31, 17), (8, 8), (256, 256), (300, 40)])
    def test_output_is_always_256_rgb(self, size):
        tensor = preprocess_bytes(png_bytes(90, size=size))
        assert tensor.shape == (TARGET_SIZE, TARGET_SIZE, 3)
        assert tensor.dtype == np.float32

    def test_values_stay_normalized(self):
        ramp = Image.new("L", (64, 64))
        ramp.putdata([(x * 4) % 256 for x in range(64 * 64)])
        buffer = io.BytesIO()
        ramp.save(buffer, format="PNG")
        tensor = preprocess_bytes(buffer.getvalue())
        assert float(tensor.min()) >= 0.0
        assert float(tensor.max()) <= 1.0

    def test_grayscale_input_yields_three_equal_channels(self):
        tensor = preprocess_bytes(png_bytes(90))
        assert np.array_equal(tensor[:, :, 0], tensor[:, :, 1])
        assert np.array_equal(tensor[:, :, 0], tensor[:, :, 2])


class TestEqualization:
    def test_constant_plane_is_unchanged(self):
        plane = np.full((16, 16), 90, dtype=np.uint8)
        assert np.array_equal(equalize_channel(plane), plane)

    def test_constant_image_survives_the_full_pipeline(self):
        tensor = preprocess_bytes(png_bytes(90))
        values = np.unique(tensor)
        assert values.size == 1
        assert values[0] == np.float32(90) / np.float32(255)

    def test_known_small_plane(self):
        # hist: 2 @ 10, 1 @ 20, 1 @ 30; cdf 2, 3, 4; lowest 2, span 2.
        # 10 -> 0; 20 -> round(1 * 255 / 2) = 128; 30 -> 255.
        plane = np.array([[10, 10], [20, 30]], dtype=np.uint8)
        assert equalize_channel(plane).tolist() == [[0, 0], [128, 255]]

    def test_extreme_levels_are_already_equalized(self):
        plane = np.array([[0, 255], [255, 0]], dtype=np.uint8)
        assert np.array_equal(equalize_channel(plane), plane)

    def test_channels_are_equalized_independently(self):
        rgb = np.zeros((16, 16, 3), dtype=np.uint8)
        rgb[:, :, 0] = 90
        rgb[:, :, 1] = np.linspace(50, 180, 16, dtype=np.uint8)[None, :]
        buffer = io.BytesIO()
        Image.fromarray(rgb, mode="RGB").save(buffer, format="PNG")
        tensor = preprocess_bytes(buffer.getvalue())
        assert np.unique(tensor[:, :, 0]).size == 1
        green = tensor[:, :, 1]
        assert float(green.min()) == 0.0
        assert float(green.max()) == 1.0


class TestLumaPlane:
    def test_white_is_all_ones(self):
        plane = luma_plane(png_bytes(255))
        assert plane.shape == (TARGET_SIZE, TARGET_SIZE)
        assert np.unique(plane).tolist() == [1.0]

    def test_color_collapses_with_rec601_weights(self):
        # (200, 40, 90): (200*299 + 40*587 + 90*114 + 500) // 1000 = 94.
        plane = luma_plane(png_bytes((200, 40, 90), mode="RGB"))
        assert np.unique(plane).tolist() == [94 / 255]

    def test_large_inputs_are_resized(self):
        assert luma_plane(png_bytes(10, size=(512, 512))).shape == (TARGET_SIZE, TARGET_SIZE)
