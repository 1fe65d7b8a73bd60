"""Frame-sequence degradations and the external transcoder contract.

A clip is an ordered list of equally-sized frames plus a frame rate. The
on-disk interchange format is a directory holding ``frames/%06d.png``
and a ``clip.json`` sidecar with ``frame_rate`` and ``frame_count``;
container demux/mux happens only inside the transcoder plugin.

All per-frame operations commute with frame selection and preserve frame
count, dimensions and rate.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .distortions import brightness_scale, gaussian_noise, linear_contrast, resize_cycle, stretch_cycle
from .errors import FrameCountMismatch, InvalidCrf, PluginBadOutput, PluginNotConfigured
from .imaging import ImageBuffer, load_image, quantize, save_png
from .plugins import DEFAULT_TIMEOUT_S, build_command, run_plugin
from .rng import Rng64

# Sepia transform used for the "vintage" look: rows map to output R, G, B.
_SEPIA = np.array(
    [
        [0.393, 0.769, 0.189],
        [0.349, 0.686, 0.168],
        [0.272, 0.534, 0.131],
    ]
)

_LUMA = np.array([0.299, 0.587, 0.114])

LIGHTEN_DEFAULT = 1.3
DARKEN_DEFAULT = 0.7
CONTRAST_DEFAULT = 1.5


@dataclass(frozen=True)
class VideoClip:
    frames: tuple[ImageBuffer, ...]
    frame_rate: float = 25.0

    def __post_init__(self) -> None:
        if not self.frames:
            raise ValueError("clip must contain at least one frame")
        dims = {(f.width, f.height) for f in self.frames}
        if len(dims) != 1:
            raise ValueError(f"frames disagree on dimensions: {sorted(dims)}")
        if self.frame_rate <= 0:
            raise ValueError(f"frame rate must be positive, got {self.frame_rate}")

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height


def _per_frame(clip: VideoClip, fn) -> VideoClip:
    return VideoClip(tuple(fn(f) for f in clip.frames), clip.frame_rate)


def flip(clip: VideoClip, axis: str) -> VideoClip:
    if axis not in ("horizontal", "vertical"):
        raise ValueError(f"axis must be horizontal or vertical, got {axis!r}")
    flipper = np.fliplr if axis == "horizontal" else np.flipud
    return _per_frame(clip, lambda f: ImageBuffer(np.ascontiguousarray(flipper(f.array))))


def grayscale_frame(img: ImageBuffer) -> ImageBuffer:
    y = quantize(img.float_pixels() @ _LUMA)
    return ImageBuffer(np.repeat(y[:, :, None], 3, axis=2))


def grayscale(clip: VideoClip) -> VideoClip:
    return _per_frame(clip, grayscale_frame)


def vintage_frame(img: ImageBuffer) -> ImageBuffer:
    return ImageBuffer(quantize(img.float_pixels() @ _SEPIA.T))


def vintage(clip: VideoClip) -> VideoClip:
    return _per_frame(clip, vintage_frame)


def brightness_video(clip: VideoClip, direction: str, amount: float | None = None) -> VideoClip:
    if direction not in ("lighten", "darken"):
        raise ValueError(f"direction must be lighten or darken, got {direction!r}")
    if amount is None:
        amount = LIGHTEN_DEFAULT if direction == "lighten" else DARKEN_DEFAULT
    return _per_frame(clip, lambda f: brightness_scale(f, amount))


def contrast_video(clip: VideoClip, alpha: float = CONTRAST_DEFAULT) -> VideoClip:
    return _per_frame(clip, lambda f: linear_contrast(f, alpha))


def temporal_noise(clip: VideoClip, sigma: float, rng: Rng64) -> VideoClip:
    """Fixed-strength Gaussian noise, resampled independently per frame.

    Frame ``t`` draws from the child stream labeled ``frame/<t>``.
    """
    frames = tuple(
        gaussian_noise(frame, sigma, rng.derive(f"frame/{t}"))
        for t, frame in enumerate(clip.frames)
    )
    return VideoClip(frames, clip.frame_rate)


def resolution_reduce(clip: VideoClip, factor: int, mode: str = "keep") -> VideoClip:
    """Resolution roundtrip; ``keep`` preserves aspect, ``stretch`` squeezes height."""
    if mode == "keep":
        return _per_frame(clip, lambda f: resize_cycle(f, factor))
    if mode == "stretch":
        return _per_frame(clip, lambda f: stretch_cycle(f, factor))
    raise ValueError(f"mode must be keep or stretch, got {mode!r}")


# --- frame-directory I/O ------------------------------------------------------

def save_clip(clip: VideoClip, directory: str) -> None:
    frames_dir = os.path.join(directory, "frames")
    os.makedirs(frames_dir, exist_ok=True)
    for t, frame in enumerate(clip.frames):
        save_png(frame, os.path.join(frames_dir, f"{t:06d}.png"))
    meta = {"frame_rate": clip.frame_rate, "frame_count": len(clip.frames)}
    with open(os.path.join(directory, "clip.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f)


def load_clip(directory: str) -> VideoClip:
    meta_path = os.path.join(directory, "clip.json")
    with open(meta_path, encoding="utf-8") as f:
        meta = json.load(f)
    count = int(meta["frame_count"])
    frames_dir = os.path.join(directory, "frames")
    frames = tuple(
        load_image(os.path.join(frames_dir, f"{t:06d}.png")) for t in range(count)
    )
    return VideoClip(frames, float(meta["frame_rate"]))


def frame_paths(directory: str) -> list[str]:
    with open(os.path.join(directory, "clip.json"), encoding="utf-8") as f:
        count = int(json.load(f)["frame_count"])
    return [os.path.join(directory, "frames", f"{t:06d}.png") for t in range(count)]


def transcode(
    clip: VideoClip,
    crf: int,
    template: str | None,
    timeout_s: float = DEFAULT_TIMEOUT_S,
) -> VideoClip:
    """Round-trip a clip through an external transcoder.

    The clip is materialized as a frame directory, the plugin is invoked
    with {in}/{out}/{crf}, and its output directory is read back. Frame
    count must be preserved exactly.
    """
    if not 0 <= crf <= 51:
        raise InvalidCrf(f"crf {crf} outside [0, 51]")
    if not template:
        raise PluginNotConfigured("no transcoder template configured")
    with tempfile.TemporaryDirectory(prefix="forgebench-transcode-") as tmp:
        in_dir = os.path.join(tmp, "in")
        out_dir = os.path.join(tmp, "out")
        os.makedirs(in_dir)
        os.makedirs(out_dir)
        save_clip(clip, in_dir)
        subs = {"in": in_dir, "out": out_dir, "crf": str(crf)}
        run_plugin(build_command(template, subs), timeout_s)
        try:
            result = load_clip(out_dir)
        except FileNotFoundError as e:
            raise PluginBadOutput(f"transcoder produced no readable clip: {e}") from e
    if len(result.frames) != len(clip.frames):
        raise FrameCountMismatch(
            f"transcoder returned {len(result.frames)} frames for {len(clip.frames)}"
        )
    return result
