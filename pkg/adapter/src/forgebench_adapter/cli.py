"""Entry point: ``forgebench-adapter --mode constant:0.5``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .detectors import MODES, ToyDetector
from .server import DEFAULT_BATCH_MAX, serve


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="forgebench-adapter",
        description="Toy detector adapters speaking the forgebench sweep protocol.",
    )
    parser.add_argument(
        "--mode",
        required=True,
        help=f"detector mode, one of {', '.join(MODES)} (e.g. constant:0.5)",
    )
    parser.add_argument("--batch-max", type=int, default=DEFAULT_BATCH_MAX)
    args = parser.parse_args(argv)
    try:
        detector = ToyDetector.parse(args.mode)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return serve(
        detector.score_bytes,
        detector.score_frames,
        name=detector.name,
        version=__version__,
        batch_max=args.batch_max,
    )


if __name__ == "__main__":
    sys.exit(main())
