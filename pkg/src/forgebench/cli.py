"""Command-line entry point: sweep, augment, report."""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .errors import ForgebenchError
from .manifest import load_manifest
from .metrics import UNRELIABLE_FAILURE_RATE, emit_report, percent_str
from .operations import load_grid
from .records_io import report_from_file, report_from_sweep, write_records
from .sdaug import STAGES, SdaugConfig, augment_dataset
from .sweep import RunConfig, run_sweep

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forgebench",
        description="Degradation sweeps, AUC reports and stochastic augmentation "
        "for media-forensics detectors.",
    )
    parser.add_argument("--version", action="version", version=f"forgebench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a severity sweep against a detector adapter")
    sweep.add_argument("--manifest", required=True, help="JSONL test-set manifest")
    sweep.add_argument(
        "--grid",
        required=True,
        help="grid JSON path, or built-in: grid_image_table2 | grid_video_table3",
    )
    sweep.add_argument("--adapter", required=True, help="adapter command line")
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--out", required=True, help="records JSONL output path")
    sweep.add_argument("--report", default=None, help="report JSON path (default <out>.report.json)")
    sweep.add_argument("--cache", default=None, help="directory for the distorted-PNG cache")
    sweep.add_argument("--clip-mode", choices=("mean_frames", "adapter_clip"), default="mean_frames")
    sweep.add_argument("--timeout", type=float, default=60.0, help="per-sample seconds")

    augment = sub.add_parser("augment", help="materialize a stochastically degraded dataset")
    augment.add_argument("--manifest", required=True)
    augment.add_argument("--out-dir", required=True)
    augment.add_argument("--seed", type=int, default=0)
    augment.add_argument("--workers", type=int, default=1)
    augment.add_argument("--p-enhance", type=float, default=0.5)
    augment.add_argument("--p-blur", type=float, default=0.5)
    augment.add_argument("--p-noise", type=float, default=0.3)
    augment.add_argument("--p-jpeg", type=float, default=0.7)

    report = sub.add_parser("report", help="recompute a report from a records file")
    report.add_argument("--records", required=True)
    report.add_argument("--format", choices=("json", "csv", "plotdata"), default="json")
    report.add_argument("--out", default=None, help="output path (default stdout)")
    report.add_argument("--figures", default=None, help="directory for rendered PNG charts")
    return parser


def _cmd_sweep(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    grid = load_grid(args.grid)
    for dropped in grid.dropped:
        print(f"note: dropped unconfigured external entry {dropped}", file=sys.stderr)
    cfg = RunConfig(
        grid=grid,
        adapter_cmd=args.adapter,
        seed=args.seed,
        workers=args.workers,
        cache_dir=args.cache,
        timeout_s=args.timeout,
        clip_mode=args.clip_mode,
    )
    result = run_sweep(manifest, cfg)
    write_records(result, args.out)
    report = report_from_sweep(result)
    report_path = args.report or (args.out + ".report.json")
    with open(report_path, "wb") as f:
        f.write(emit_report(report, "json"))
    print(f"records: {args.out}")
    print(f"report:  {report_path}")
    if report.overall_average is not None:
        print(f"overall AUC over distorted cells: {percent_str(report.overall_average)}%")

    expected = len(manifest)
    over_threshold = False
    per_entry_failures: dict[tuple[str, str], int] = {}
    for fr in result.failures:
        key = (fr.op_category, fr.severity_label)
        per_entry_failures[key] = per_entry_failures.get(key, 0) + 1
    for key, count in sorted(per_entry_failures.items()):
        rate = count / expected if expected else 0.0
        print(f"failures in {key[0]}/{key[1]}: {count} ({rate:.0%})", file=sys.stderr)
        if rate > UNRELIABLE_FAILURE_RATE:
            over_threshold = True
    return EXIT_PARTIAL if over_threshold else EXIT_OK


def _cmd_augment(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    cfg = SdaugConfig(
        p_enhance=args.p_enhance,
        p_blur=args.p_blur,
        p_noise=args.p_noise,
        p_jpeg=args.p_jpeg,
    )
    report = augment_dataset(manifest, cfg, args.seed, args.out_dir, workers=args.workers)
    total = max(report.n_items, 1)
    print(f"augmented {report.n_items} items into {args.out_dir}")
    for stage in STAGES:
        count = report.stage_counts[stage]
        print(f"  {stage:8s} fired {count:6d} times ({count / total:.1%})")
    for item_id, message in report.failures:
        print(f"failed: {item_id}: {message}", file=sys.stderr)
    return EXIT_OK if not report.failures else EXIT_PARTIAL


def _cmd_report(args: argparse.Namespace) -> int:
    report = report_from_file(args.records)
    payload = emit_report(report, args.format)
    if args.out:
        with open(args.out, "wb") as f:
            f.write(payload)
        print(f"report: {args.out}")
    else:
        sys.stdout.write(payload.decode("utf-8"))
    if args.figures:
        from .figures import render_figures

        for path in render_figures(report, args.figures):
            print(f"figure: {path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; map to the fatal code
        return EXIT_FATAL if e.code not in (0, None) else EXIT_OK
    handlers = {"sweep": _cmd_sweep, "augment": _cmd_augment, "report": _cmd_report}
    try:
        return handlers[args.command](args)
    except ForgebenchError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FATAL
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
