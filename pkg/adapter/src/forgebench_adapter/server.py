"""Protocol loop: newline-delimited JSON over stdin/stdout.

Wire contract (one object per line):

    -> {"type": "hello", "name", "version", "score_orientation": "fake_high",
        "batch_max": N}                                  (on startup)
    <- {"type": "score", "id", "png_b64"}                (inline image)
    <- {"type": "score_path", "id", "path"}              (image on disk)
    <- {"type": "score_clip", "id", "frame_paths": [..]} (frame sequence)
    -> {"type": "score", "id", "score"} | {"type": "error", "id", "message"}
    <- {"type": "bye"}                                   (shutdown)

Scoring failures never kill the session: they come back as error replies
carrying the request id. Construction failures are reported inside the
hello as an ``error`` object, after which the process exits non-zero.
"""

from __future__ import annotations

import base64
import json
import sys
from typing import Callable, TextIO

PROTOCOL_ORIENTATION = "fake_high"
DEFAULT_BATCH_MAX = 8


def _emit(out: TextIO, obj: dict) -> None:
    out.write(json.dumps(obj, separators=(",", ":")) + "\n")
    out.flush()


def _request_bytes(msg: dict) -> bytes:
    kind = msg["type"]
    if kind == "score":
        return base64.b64decode(msg["png_b64"], validate=True)
    if kind == "score_path":
        with open(msg["path"], "rb") as f:
            return f.read()
    raise ValueError(f"no image payload in request type {kind!r}")


def serve(
    score_bytes: Callable[[bytes], float],
    score_frames: Callable[[list[bytes]], float],
    *,
    name: str,
    version: str,
    batch_max: int = DEFAULT_BATCH_MAX,
    stdin: TextIO | None = None,
    stdout: TextIO | None = None,
) -> int:
    """Answer requests until ``bye`` or end of input. Returns an exit code."""
    inp = stdin if stdin is not None else sys.stdin
    out = stdout if stdout is not None else sys.stdout
    _emit(
        out,
        {
            "type": "hello",
            "name": name,
            "version": version,
            "score_orientation": PROTOCOL_ORIENTATION,
            "batch_max": batch_max,
        },
    )
    for line in inp:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as e:
            _emit(out, {"type": "error", "id": None, "message": f"request is not JSON: {e}"})
            continue
        kind = msg.get("type")
        if kind == "bye":
            return 0
        request_id = msg.get("id")
        try:
            if kind == "score_clip":
                frames = []
                for path in msg["frame_paths"]:
                    with open(path, "rb") as f:
                        frames.append(f.read())
                score = score_frames(frames)
            elif kind in ("score", "score_path"):
                score = score_bytes(_request_bytes(msg))
            else:
                raise ValueError(f"unknown request type {kind!r}")
            score = float(score)
            if not 0.0 <= score <= 1.0:
                raise ValueError(f"scorer produced {score}, outside [0, 1]")
            _emit(out, {"type": "score", "id": request_id, "score": score})
        except Exception as e:  # malformed input must never end the session
            _emit(out, {"type": "error", "id": request_id, "message": f"{type(e).__name__}: {e}"})
    return 0


def serve_model(
    make_scorer: Callable[[], Callable[[bytes], float]],
    *,
    name: str,
    version: str = "0",
    batch_max: int = DEFAULT_BATCH_MAX,
    stdin: TextIO | None = None,
    stdout: TextIO | None = None,
) -> int:
    """Wrapper template for real detectors.

    ``make_scorer`` loads the model and returns a callable mapping image
    bytes to a fake-high score in [0, 1]; plug preprocessing (face crop,
    resize, normalization) inside that callable. If loading fails, the
    failure is reported as an ``error`` object inside the hello message
    and the process exits with code 3 so the harness sees a clean
    handshake failure instead of a hang.

    Clip requests are answered with the mean over the frame scores;
    override by calling :func:`serve` directly with a clip scorer.
    """
    out = stdout if stdout is not None else sys.stdout
    try:
        scorer = make_scorer()
    except Exception as e:
        _emit(
            out,
            {
                "type": "hello",
                "name": name,
                "version": version,
                "score_orientation": PROTOCOL_ORIENTATION,
                "batch_max": batch_max,
                "error": {"message": f"{type(e).__name__}: {e}"},
            },
        )
        return 3

    def frames_mean(frames: list[bytes]) -> float:
        scores = [scorer(f) for f in frames]
        return sum(scores) / len(scores)

    return serve(
        scorer,
        frames_mean,
        name=name,
        version=version,
        batch_max=batch_max,
        stdin=stdin,
        stdout=out,
    )
