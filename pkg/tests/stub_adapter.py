#!/usr/bin/env python3
"""Toy detector speaking the sweep adapter protocol on stdio.

Modes:
    constant:X    every sample scores X
    luminance:C   1.0 when mean luma < C, else 0.0
    checksum      first 8 bytes of sha256(input bytes) mapped to [0, 1)

Test-only switches: --crash-after N exits abruptly after N replies,
--hang never answers requests, --batch-max controls the hello field.
"""

from __future__ import annotations

import argparse
import base64
import hashlib
import io
import json
import sys


def luma_mean(png_bytes: bytes) -> float:
    import numpy as np
    from PIL import Image

    img = Image.open(io.BytesIO(png_bytes)).convert("RGB")
    a = np.asarray(img, dtype=np.float64)
    return float((a @ np.array([0.299, 0.587, 0.114])).mean())


def checksum_score(data: bytes) -> float:
    digest = hashlib.sha256(data).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64


def score_bytes(mode: str, arg: float, data: bytes) -> float:
    if mode == "constant":
        return arg
    if mode == "luminance":
        return 1.0 if luma_mean(data) < arg else 0.0
    if mode == "checksum":
        return checksum_score(data)
    raise ValueError(mode)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--mode", required=True)
    parser.add_argument("--batch-max", type=int, default=8)
    parser.add_argument("--crash-after", type=int, default=-1)
    parser.add_argument("--hang", action="store_true")
    parser.add_argument("--pid-log", default=None)
    args = parser.parse_args()

    mode, _, raw_arg = args.mode.partition(":")
    arg = float(raw_arg) if raw_arg else 0.0

    if args.pid_log:
        import os

        with open(args.pid_log, "a") as f:
            f.write(f"{os.getpid()}\n")

    out = sys.stdout
    out.write(
        json.dumps(
            {
                "type": "hello",
                "name": f"stub-{mode}",
                "version": "1",
                "score_orientation": "fake_high",
                "batch_max": args.batch_max,
            }
        )
        + "\n"
    )
    out.flush()

    replies = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            out.write(json.dumps({"type": "error", "id": None, "message": "bad json"}) + "\n")
            out.flush()
            continue
        kind = msg.get("type")
        if kind == "bye":
            return 0
        if args.hang:
            continue
        if args.crash_after >= 0 and replies >= args.crash_after:
            os_exit = getattr(__import__("os"), "_exit")
            os_exit(13)
        try:
            if kind == "score":
                data = base64.b64decode(msg["png_b64"])
                score = score_bytes(mode, arg, data)
            elif kind == "score_path":
                with open(msg["path"], "rb") as f:
                    score = score_bytes(mode, arg, f.read())
            elif kind == "score_clip":
                scores = []
                for p in msg["frame_paths"]:
                    with open(p, "rb") as f:
                        scores.append(score_bytes(mode, arg, f.read()))
                score = sum(scores) / len(scores)
            else:
                raise ValueError(f"unknown request type {kind!r}")
            out.write(json.dumps({"type": "score", "id": msg.get("id"), "score": score}) + "\n")
        except Exception as e:  # never crash on malformed input
            out.write(
                json.dumps({"type": "error", "id": msg.get("id"), "message": str(e)}) + "\n"
            )
        out.flush()
        replies += 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
