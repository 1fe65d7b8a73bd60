"""ROC-AUC scoring, cell grouping and report assembly.

AUC uses the rank formulation of the pair-counting statistic: with
average ranks over the pooled scores,

    AUC = (R_fake - n_fake*(n_fake+1)/2) / (n_fake * n_real)

which equals (#{fake > real} + 0.5 * #{fake = real}) / (n_fake * n_real)
exactly, ties included; average ranks are integer halves, so the float
arithmetic is exact for any realistic sample count.

A report carries one AUC cell per (category, severity), per-category
averages and the overall average over all distorted cells. The exact
cell set behind a single "overall" number is convention-dependent, so
every convention is emitted side by side: distorted cells only,
distorted plus unaltered, and the mean of the category averages.
Percentages render half-up to two decimals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import EmptyClass, UnknownFormat

UNALTERED = "unaltered"


def auc(scores_real: list[float], scores_fake: list[float]) -> float:
    """Probability a random fake outscores a random real (ties count half)."""
    n_real, n_fake = len(scores_real), len(scores_fake)
    if n_real == 0 or n_fake == 0:
        raise EmptyClass(f"need both classes, got {n_real} real / {n_fake} fake")
    pooled = np.concatenate([np.asarray(scores_real, float), np.asarray(scores_fake, float)])
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(len(pooled))
    sorted_scores = pooled[order]
    # average rank per tie group; ranks are 1-based
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    r_fake = float(ranks[n_real:].sum())
    return (r_fake - n_fake * (n_fake + 1) / 2.0) / (n_fake * n_real)


def percent_str(value: float) -> str:
    """Render a [0,1] fraction as a percent with two half-up decimals."""
    return str(Decimal(repr(value * 100.0)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class AucCell:
    op_category: str
    severity_label: str
    auc: float | None
    n_real: int
    n_fake: int
    n_failed: int = 0
    reliable: bool = True

    def to_json_dict(self) -> dict:
        return {
            "category": self.op_category,
            "severity": self.severity_label,
            "auc": self.auc,
            "auc_pct": percent_str(self.auc) if self.auc is not None else None,
            "n_real": self.n_real,
            "n_fake": self.n_fake,
            "n_failed": self.n_failed,
            "reliable": self.reliable,
        }


# failure rate above which a cell's AUC is flagged unreliable
UNRELIABLE_FAILURE_RATE = 0.05


def group_cells(records, failures=()) -> list[AucCell]:
    """One cell per (category, severity); sorted for order invariance.

    ``records`` is any iterable with item_id/op_category/severity_label/
    score/label attributes; ``failures`` need op_category/severity_label.
    Cells missing a class get ``auc=None`` and ``reliable=False``.
    """
    buckets: dict[tuple[str, str], dict[str, list[float]]] = {}
    for r in records:
        key = (r.op_category, r.severity_label)
        buckets.setdefault(key, {"real": [], "fake": []})[r.label].append(r.score)
    failed: dict[tuple[str, str], int] = {}
    for f in failures:
        key = (f.op_category, f.severity_label)
        buckets.setdefault(key, {"real": [], "fake": []})
        failed[key] = failed.get(key, 0) + 1

    cells = []
    for key in sorted(buckets):
        category, severity = key
        reals, fakes = buckets[key]["real"], buckets[key]["fake"]
        n_failed = failed.get(key, 0)
        total = len(reals) + len(fakes) + n_failed
        if reals and fakes:
            value = auc(reals, fakes)
            reliable = (n_failed / total) <= UNRELIABLE_FAILURE_RATE
        else:
            value = None
            reliable = False
        cells.append(
            AucCell(
                op_category=category,
                severity_label=severity,
                auc=value,
                n_real=len(reals),
                n_fake=len(fakes),
                n_failed=n_failed,
                reliable=reliable,
            )
        )
    return cells


@dataclass
class Report:
    cells: list[AucCell]
    category_averages: dict[str, float]
    overall_average: float | None
    overall_average_with_unaltered: float | None
    overall_average_of_category_averages: float | None
    unaltered_auc: float | None
    undefined_cells: list[tuple[str, str]]
    meta: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)  # dicts with reasons

    def to_json_dict(self) -> dict:
        return {
            "schema": "forgebench-report/1",
            "meta": self.meta,
            "unaltered_auc": self.unaltered_auc,
            "unaltered_auc_pct": (
                percent_str(self.unaltered_auc) if self.unaltered_auc is not None else None
            ),
            "cells": [c.to_json_dict() for c in self.cells],
            "category_averages": {
                c: {"auc": v, "auc_pct": percent_str(v)}
                for c, v in sorted(self.category_averages.items())
            },
            "overall": {
                "distorted_cells": self.overall_average,
                "distorted_cells_pct": (
                    percent_str(self.overall_average)
                    if self.overall_average is not None
                    else None
                ),
                "with_unaltered": self.overall_average_with_unaltered,
                "mean_of_category_averages": self.overall_average_of_category_averages,
            },
            "undefined_cells": [
                {"category": c, "severity": s} for c, s in self.undefined_cells
            ],
            "failures": list(self.failures),
        }


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def aggregate(cells: list[AucCell], meta: dict | None = None, failures=()) -> Report:
    """Fold cells into category averages and the overall score.

    Cells are put in (category, severity) order first so the float
    reductions are exactly permutation-invariant.
    """
    cells = sorted(cells, key=lambda c: (c.op_category, c.severity_label))
    unaltered_auc = None
    distorted: list[AucCell] = []
    undefined: list[tuple[str, str]] = []
    for cell in cells:
        if cell.op_category == UNALTERED:
            unaltered_auc = cell.auc
            continue
        if cell.auc is None:
            undefined.append((cell.op_category, cell.severity_label))
        else:
            distorted.append(cell)

    by_category: dict[str, list[float]] = {}
    for cell in distorted:
        by_category.setdefault(cell.op_category, []).append(cell.auc)
    category_averages = {c: _mean(v) for c, v in by_category.items()}

    defined_aucs = [c.auc for c in distorted]
    overall = _mean(defined_aucs)
    with_unaltered = _mean(
        defined_aucs + ([unaltered_auc] if unaltered_auc is not None else [])
    )
    of_averages = _mean(list(category_averages.values()))

    return Report(
        cells=list(cells),
        category_averages=category_averages,
        overall_average=overall,
        overall_average_with_unaltered=with_unaltered,
        overall_average_of_category_averages=of_averages,
        unaltered_auc=unaltered_auc,
        undefined_cells=undefined,
        meta=dict(meta or {}),
        failures=list(failures),
    )


# --- emission ------------------------------------------------------------------

_NUM_RUN = re.compile(r"(\d+(?:\.\d+)?)")


def natural_key(label: str):
    """Sort key treating digit runs numerically: sigma5 < sigma10."""
    parts = _NUM_RUN.split(label)
    return tuple(float(p) if i % 2 else p for i, p in enumerate(parts))


def plot_series(report: Report) -> list[dict]:
    series: dict[str, list[AucCell]] = {}
    for cell in report.cells:
        if cell.op_category == UNALTERED or cell.auc is None:
            continue
        series.setdefault(cell.op_category, []).append(cell)
    out = []
    for category in sorted(series):
        cells = sorted(series[category], key=lambda c: natural_key(c.severity_label))
        out.append(
            {
                "category": category,
                "points": [{"severity": c.severity_label, "auc": c.auc} for c in cells],
            }
        )
    return out


def emit_report(report: Report, fmt: str) -> bytes:
    import json

    if fmt == "json":
        return (json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n").encode()
    if fmt == "csv":
        lines = ["category,severity,auc,n_real,n_fake,reliable"]
        for c in report.cells:
            pct = percent_str(c.auc) if c.auc is not None else ""
            lines.append(
                f"{c.op_category},{c.severity_label},{pct},{c.n_real},{c.n_fake},"
                f"{'true' if c.reliable else 'false'}"
            )
        return ("\n".join(lines) + "\n").encode()
    if fmt == "plotdata":
        doc = {
            "schema": "forgebench-plotdata/1",
            "unaltered_auc": report.unaltered_auc,
            "series": plot_series(report),
        }
        return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()
    raise UnknownFormat(f"unknown report format: {fmt!r}")
