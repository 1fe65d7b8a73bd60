"""Image degradation operators.

Every operator is a pure function of (input, params, rng seed): it
preserves dimensions, computes in float64 and quantizes once on the way
out. Zero-severity parameterizations (sigma=0, gamma=1, beta=0, alpha=1,
k=1) are bit-exact identities.

Convention notes, pinned for reproducibility:

* Gaussian blur: separable k x k kernel with
  ``sigma_g = 0.3*((k-1)/2 - 1) + 0.8`` (the usual window-size formula),
  reflect-101 borders, weights normalized to sum 1.
* Bicubic resampling: Catmull-Rom kernel (a = -0.5), half-pixel-center
  mapping ``src = (dst + 0.5) * (n_src / n_dst) - 0.5``, replicated edges.
  The down-then-up resize cycle keeps its intermediate in float64; the
  single quantization happens at the end.
* Noise draws consume the stream flattened row-major, channel fastest.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    EvenKernel,
    ImageTooSmall,
    InvalidQuality,
    NegativeParameter,
    NegativeSigma,
    NonPositiveAlpha,
    NonPositiveGamma,
    NonPositiveKernel,
    OutOfRangeBeta,
)
from .imaging import CodecParams, ImageBuffer, decode_image, encode_image, quantize
from .rng import Rng64


def gaussian_noise(img: ImageBuffer, sigma: float, rng: Rng64) -> ImageBuffer:
    """Additive white Gaussian noise, clipped to [0, 255]."""
    if sigma < 0:
        raise NegativeSigma(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return img
    x = img.float_pixels()
    xi = rng.normals(x.size).reshape(x.shape)
    return ImageBuffer(quantize(x + sigma * xi))


def poisson_gaussian_noise(img: ImageBuffer, a: float, b: float, rng: Rng64) -> ImageBuffer:
    """Signal-dependent noise: y + sqrt(a*y + b)*xi in normalized intensity y."""
    if a < 0 or b < 0:
        raise NegativeParameter(f"a and b must be >= 0, got a={a}, b={b}")
    if a == 0 and b == 0:
        return img
    y = img.float_pixels() / 255.0
    xi = rng.normals(y.size).reshape(y.shape)
    return ImageBuffer(quantize(255.0 * (y + np.sqrt(a * y + b) * xi)))


def _reflect101_indices(n: int, pad: int) -> np.ndarray:
    """Indices of length n + 2*pad mapping the padded axis into [0, n)."""
    idx = np.arange(-pad, n + pad)
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * (n - 1)
    idx = np.abs(idx) % period
    return np.where(idx >= n, period - idx, idx)


def gaussian_kernel_1d(k: int) -> np.ndarray:
    """Normalized 1-D Gaussian weights for an odd window of size k."""
    sigma = 0.3 * ((k - 1) / 2 - 1) + 0.8
    offsets = np.arange(k) - (k - 1) / 2
    w = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return w / w.sum()


def _separable_filter(x: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Convolve (h, w, 3) float pixels with a 1-D kernel along both axes."""
    k = len(weights)
    pad = (k - 1) // 2
    for axis in (0, 1):
        n = x.shape[axis]
        idx = _reflect101_indices(n, pad)
        padded = np.take(x, idx, axis=axis)
        out = np.zeros_like(x)
        for j in range(k):
            out += weights[j] * np.take(padded, np.arange(n) + j, axis=axis)
        x = out
    return x


def gaussian_blur(img: ImageBuffer, kernel_size: int) -> ImageBuffer:
    if kernel_size < 1:
        raise NonPositiveKernel(f"kernel size must be >= 1, got {kernel_size}")
    if kernel_size % 2 == 0:
        raise EvenKernel(f"kernel size must be odd, got {kernel_size}")
    if kernel_size == 1:
        return img
    w = gaussian_kernel_1d(kernel_size)
    return ImageBuffer(quantize(_separable_filter(img.float_pixels(), w)))


def average_blur(img: ImageBuffer, kernel_size: int) -> ImageBuffer:
    """Box mean over a k x k window; same borders and parity rules as gaussian."""
    if kernel_size < 1:
        raise NonPositiveKernel(f"kernel size must be >= 1, got {kernel_size}")
    if kernel_size % 2 == 0:
        raise EvenKernel(f"kernel size must be odd, got {kernel_size}")
    if kernel_size == 1:
        return img
    w = np.full(kernel_size, 1.0 / kernel_size)
    return ImageBuffer(quantize(_separable_filter(img.float_pixels(), w)))


def gamma_correct(img: ImageBuffer, gamma: float) -> ImageBuffer:
    if gamma <= 0:
        raise NonPositiveGamma(f"gamma must be > 0, got {gamma}")
    if gamma == 1:
        return img
    y = 255.0 * (img.float_pixels() / 255.0) ** gamma
    return ImageBuffer(quantize(y))


def linear_brightness(img: ImageBuffer, beta: float) -> ImageBuffer:
    """Add a constant offset per channel."""
    if not -255 <= beta <= 255:
        raise OutOfRangeBeta(f"beta must be in [-255, 255], got {beta}")
    if beta == 0:
        return img
    return ImageBuffer(quantize(img.float_pixels() + beta))


def linear_contrast(img: ImageBuffer, alpha: float) -> ImageBuffer:
    """Scale around the mid-gray pivot 128."""
    if alpha <= 0:
        raise NonPositiveAlpha(f"alpha must be > 0, got {alpha}")
    if alpha == 1:
        return img
    return ImageBuffer(quantize((img.float_pixels() - 128.0) * alpha + 128.0))


def brightness_scale(img: ImageBuffer, amount: float) -> ImageBuffer:
    """Multiplicative brightness; amount 1 is the identity."""
    if amount <= 0:
        raise NonPositiveAlpha(f"amount must be > 0, got {amount}")
    if amount == 1:
        return img
    return ImageBuffer(quantize(img.float_pixels() * amount))


# --- bicubic resampling -----------------------------------------------------

def _catmull_rom(s: np.ndarray) -> np.ndarray:
    """Cubic convolution kernel with a = -0.5."""
    s = np.abs(s)
    inner = 1.5 * s**3 - 2.5 * s**2 + 1.0
    outer = -0.5 * s**3 + 2.5 * s**2 - 4.0 * s + 2.0
    return np.where(s <= 1.0, inner, np.where(s < 2.0, outer, 0.0))


def _resample_matrix(n_src: int, n_dst: int) -> np.ndarray:
    """(n_dst, n_src) bicubic interpolation matrix, half-pixel centers."""
    scale = n_src / n_dst
    x = (np.arange(n_dst) + 0.5) * scale - 0.5
    i0 = np.floor(x).astype(int)
    t = x - i0
    mat = np.zeros((n_dst, n_src))
    rows = np.arange(n_dst)
    for tap in (-1, 0, 1, 2):
        weights = _catmull_rom(t - tap)
        cols = np.clip(i0 + tap, 0, n_src - 1)
        np.add.at(mat, (rows, cols), weights)
    return mat


def _bicubic_resize(x: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resize (h, w, 3) float pixels; stays in float64."""
    mh = _resample_matrix(x.shape[0], height)
    mw = _resample_matrix(x.shape[1], width)
    return np.einsum("hs,swc,tw->htc", mh, x, mw, optimize=True)


def resize_cycle(img: ImageBuffer, factor: int) -> ImageBuffer:
    """Downscale by ``factor`` (bicubic) then upscale back to the input size."""
    if factor < 2:
        raise NegativeParameter(f"resize factor must be >= 2, got {factor}")
    w, h = img.width, img.height
    if w < factor or h < factor:
        raise ImageTooSmall(f"{w}x{h} image cannot be downscaled by {factor}")
    down_w = -(-w // factor)
    down_h = -(-h // factor)
    small = _bicubic_resize(img.float_pixels(), down_h, down_w)
    return ImageBuffer(quantize(_bicubic_resize(small, h, w)))


def stretch_cycle(img: ImageBuffer, factor: int) -> ImageBuffer:
    """Aspect-distorting roundtrip: squeeze height by ``factor`` and restore."""
    if factor < 2:
        raise NegativeParameter(f"stretch factor must be >= 2, got {factor}")
    h = img.height
    if h < factor:
        raise ImageTooSmall(f"height {h} cannot be downscaled by {factor}")
    down_h = -(-h // factor)
    small = _bicubic_resize(img.float_pixels(), down_h, img.width)
    return ImageBuffer(quantize(_bicubic_resize(small, h, img.width)))


def jpeg_cycle(img: ImageBuffer, quality: int) -> ImageBuffer:
    """Encode to baseline 4:2:0 JPEG at ``quality`` and decode back."""
    if not 1 <= quality <= 100:
        raise InvalidQuality(f"quality {quality} outside [1, 100]")
    return decode_image(encode_image(img, CodecParams("jpeg", jpeg_quality=quality)))
