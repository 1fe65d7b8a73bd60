"""8-bit RGB pixel buffers and PNG/JPEG encode-decode.

The working space for the whole toolkit is 8-bit sRGB. Operators compute
in float64 and come back through :func:`quantize` (round half away from
zero, clip to [0, 255]) exactly once at their boundary.

Codec backend is Pillow: PNG is lossless, JPEG is written baseline
sequential with 4:2:0 chroma subsampling and the standard libjpeg
quality-to-quantization-scale mapping. Both encoders are deterministic:
identical pixels and parameters give identical bytes. Decoding accepts
progressive JPEG input; encoding never produces it.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import InvalidQuality, MalformedStream, UnsupportedFormat

# Pillow modes we accept and expand to RGB. Anything else (16-bit, CMYK,
# float) is outside the 8-bit subset this toolkit works in.
_DECODABLE_MODES = {"RGB", "RGBA", "L", "LA", "P", "PA", "1"}


@dataclass(frozen=True)
class ImageBuffer:
    """Owned 8-bit RGB raster; ``array`` has shape (height, width, 3), uint8."""

    array: np.ndarray

    def __post_init__(self) -> None:
        a = self.array
        if a.ndim != 3 or a.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) array, got shape {a.shape}")
        if a.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {a.dtype}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("image dimensions must be positive")
        # operators treat buffers as values: freeze the backing store
        a.setflags(write=False)

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @staticmethod
    def from_array(a: np.ndarray) -> "ImageBuffer":
        return ImageBuffer(np.ascontiguousarray(a, dtype=np.uint8))

    @staticmethod
    def constant(width: int, height: int, rgb: tuple[int, int, int]) -> "ImageBuffer":
        a = np.empty((height, width, 3), dtype=np.uint8)
        a[:] = rgb
        return ImageBuffer(a)

    def float_pixels(self) -> np.ndarray:
        return self.array.astype(np.float64)


@dataclass(frozen=True)
class CodecParams:
    """Target encoding; ``jpeg_quality`` must be present iff ``format == "jpeg"``."""

    format: str  # "png" | "jpeg"
    jpeg_quality: int | None = None
    chroma_subsampling: str = "4:2:0"  # fixed; recorded for transparency

    def __post_init__(self) -> None:
        if self.format not in ("png", "jpeg"):
            raise ValueError(f"unknown codec format: {self.format!r}")
        if self.format == "jpeg":
            if self.jpeg_quality is None:
                raise InvalidQuality("jpeg requires a quality in [1, 100]")
            if not 1 <= int(self.jpeg_quality) <= 100:
                raise InvalidQuality(f"jpeg quality {self.jpeg_quality} outside [1, 100]")
        elif self.jpeg_quality is not None:
            raise ValueError("jpeg_quality is only valid for jpeg")


def quantize(values: np.ndarray) -> np.ndarray:
    """Round half away from zero, clip to [0, 255], return uint8.

    This is the single quantization rule every operator funnels through.
    """
    rounded = np.floor(np.abs(values) + 0.5) * np.sign(values)
    return np.clip(rounded, 0.0, 255.0).astype(np.uint8)


def decode_image(data: bytes) -> ImageBuffer:
    """Decode a PNG or JPEG stream to RGB; gray/paletted inputs are expanded.

    RGBA alpha is discarded. Raises MalformedStream for truncated or
    unrecognizable bytes, UnsupportedFormat for pixel layouts outside the
    8-bit subset.
    """
    try:
        img = Image.open(io.BytesIO(data))
        mode = img.mode
        if mode not in _DECODABLE_MODES:
            raise UnsupportedFormat(f"unsupported pixel mode {mode!r}; 8-bit RGB/gray only")
        img = img.convert("RGB")
        img.load()
    except UnsupportedFormat:
        raise
    except UnidentifiedImageError as e:
        raise MalformedStream(f"not a decodable image stream: {e}") from e
    except OSError as e:
        raise MalformedStream(f"truncated or corrupt image stream: {e}") from e
    return ImageBuffer(np.asarray(img, dtype=np.uint8).reshape(img.height, img.width, 3))


def encode_image(img: ImageBuffer, params: CodecParams) -> bytes:
    """Encode to PNG (lossless) or baseline 4:2:0 JPEG at the given quality."""
    pil = Image.fromarray(img.array, mode="RGB")
    buf = io.BytesIO()
    if params.format == "png":
        pil.save(buf, format="PNG")
    else:
        pil.save(
            buf,
            format="JPEG",
            quality=int(params.jpeg_quality),
            subsampling=2,  # 4:2:0
            progressive=False,
        )
    return buf.getvalue()


def load_image(path: str) -> ImageBuffer:
    with open(path, "rb") as f:
        return decode_image(f.read())


def save_png(img: ImageBuffer, path: str) -> None:
    with open(path, "wb") as f:
        f.write(encode_image(img, CodecParams("png")))
