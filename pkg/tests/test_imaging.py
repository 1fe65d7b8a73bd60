from __future__ import annotations

import numpy as np
import pytest

from conftest import random_images
from forgebench.errors import InvalidQuality, MalformedStream, UnsupportedFormat
from forgebench.imaging import (
    CodecParams,
    ImageBuffer,
    decode_image,
    encode_image,
    quantize,
)


def test_single_red_pixel_png_roundtrip():
    img = ImageBuffer.constant(1, 1, (255, 0, 0))
    out = decode_image(encode_image(img, CodecParams("png")))
    assert out.width == 1 and out.height == 1
    assert out.array.tolist() == [[[255, 0, 0]]]


def test_png_roundtrip_identity_on_random_buffers():
    for img in random_images(20, seed=1, max_side=64):
        out = decode_image(encode_image(img, CodecParams("png")))
        assert np.array_equal(out.array, img.array)


def test_jpeg_quality100_constant_gray_max_error_2():
    img = ImageBuffer.constant(2, 2, (128, 128, 128))
    out = decode_image(encode_image(img, CodecParams("jpeg", jpeg_quality=100)))
    assert np.max(np.abs(out.array.astype(int) - 128)) <= 2


def test_jpeg_quality100_constant_colors_max_error_2():
    for rgb in [(0, 0, 0), (255, 255, 255), (37, 123, 209), (200, 10, 10)]:
        img = ImageBuffer.constant(16, 16, rgb)
        out = decode_image(encode_image(img, CodecParams("jpeg", jpeg_quality=100)))
        err = np.max(np.abs(out.array.astype(int) - np.array(rgb)))
        assert err <= 2, (rgb, err)


def test_jpeg_white_q95_stays_bright():
    img = ImageBuffer.constant(8, 8, (255, 255, 255))
    out = decode_image(encode_image(img, CodecParams("jpeg", jpeg_quality=95)))
    assert np.min(out.array) >= 250


def test_encoders_are_deterministic():
    img = random_images(1, seed=2)[0]
    for params in (CodecParams("png"), CodecParams("jpeg", jpeg_quality=60)):
        assert encode_image(img, params) == encode_image(img, params)


def test_grayscale_png_expands_to_rgb():
    from PIL import Image
    import io

    buf = io.BytesIO()
    Image.new("L", (3, 2), 77).save(buf, format="PNG")
    out = decode_image(buf.getvalue())
    assert out.array.shape == (2, 3, 3)
    assert np.all(out.array == 77)


def test_malformed_and_truncated_streams_rejected():
    with pytest.raises(MalformedStream):
        decode_image(b"not an image at all")
    img = random_images(1, seed=3, max_side=32)[0]
    data = encode_image(img, CodecParams("png"))
    with pytest.raises(MalformedStream):
        decode_image(data[: len(data) // 2])


def test_16bit_png_is_unsupported():
    from PIL import Image
    import io

    buf = io.BytesIO()
    Image.new("I;16", (2, 2), 1000).save(buf, format="PNG")
    with pytest.raises(UnsupportedFormat):
        decode_image(buf.getvalue())


def test_invalid_quality_rejected():
    with pytest.raises(InvalidQuality):
        CodecParams("jpeg", jpeg_quality=0)
    with pytest.raises(InvalidQuality):
        CodecParams("jpeg", jpeg_quality=101)
    with pytest.raises(InvalidQuality):
        CodecParams("jpeg")


def test_quantize_rounds_half_away_from_zero_and_clips():
    vals = np.array([-3.0, -0.5, -0.4, 0.0, 0.4, 0.5, 1.5, 2.5, 254.5, 255.4, 999.0])
    out = quantize(vals)
    assert out.tolist() == [0, 0, 0, 0, 0, 1, 2, 3, 255, 255, 255]
