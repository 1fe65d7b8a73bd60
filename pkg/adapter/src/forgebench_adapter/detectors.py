"""Deterministic toy detectors.

Each one maps raw media bytes to a score in [0, 1] with "higher means
fake" orientation. They exist to exercise the sweep pipeline end to end
with no ML dependency:

* ``constant:X`` scores everything X.
* ``luminance_threshold:C`` scores 1.0 when the mean luma of the decoded
  image is below C, else 0.0 (a crude darkness detector).
* ``checksum`` hashes the input bytes (sha256, first 8 bytes big-endian,
  divided by 2**64) into [0, 1): a detector that is random over content
  but exactly reproducible, so its true AUC is 0.5 by construction.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass

MODES = ("constant", "luminance_threshold", "checksum")


def checksum_score(data: bytes) -> float:
    digest = hashlib.sha256(data).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64


def mean_luma(image_bytes: bytes) -> float:
    import numpy as np
    from PIL import Image

    img = Image.open(io.BytesIO(image_bytes)).convert("RGB")
    a = np.asarray(img, dtype=np.float64)
    return float((a @ np.array([0.299, 0.587, 0.114])).mean())


@dataclass(frozen=True)
class ToyDetector:
    mode: str
    arg: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "constant" and not 0.0 <= self.arg <= 1.0:
            raise ValueError(f"constant score must be in [0, 1], got {self.arg}")

    @staticmethod
    def parse(spec: str) -> "ToyDetector":
        """Parse a CLI spec like ``constant:0.5`` or ``checksum``."""
        mode, _, raw = spec.partition(":")
        return ToyDetector(mode, float(raw) if raw else 0.0)

    @property
    def name(self) -> str:
        return f"toy-{self.mode}"

    def score_bytes(self, data: bytes) -> float:
        if self.mode == "constant":
            return self.arg
        if self.mode == "checksum":
            return checksum_score(data)
        return 1.0 if mean_luma(data) < self.arg else 0.0

    def score_frames(self, frames: list[bytes]) -> float:
        """Clip score: arithmetic mean of the per-frame scores."""
        if not frames:
            raise ValueError("clip request carried no frames")
        scores = [self.score_bytes(f) for f in frames]
        return sum(scores) / len(scores)
