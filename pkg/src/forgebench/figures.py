"""Figure rendering for the report path.

Writes one AUC-vs-severity line chart per operation category plus a
category-average bar chart, as PNG files next to the delimited output.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import Report, plot_series


def render_figures(report: Report, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    for series in plot_series(report):
        category = series["category"]
        labels = [p["severity"] for p in series["points"]]
        values = [100.0 * p["auc"] for p in series["points"]]
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        ax.plot(range(len(values)), values, marker="o", color="#2a6fb0")
        if report.unaltered_auc is not None:
            ax.axhline(
                100.0 * report.unaltered_auc,
                color="#888888",
                linestyle="--",
                linewidth=1,
                label="unaltered",
            )
            ax.legend(loc="lower left", fontsize=8)
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
        ax.set_ylim(0, 105)
        ax.set_ylabel("AUC (%)")
        ax.set_title(category)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = os.path.join(out_dir, f"auc_{category}.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    if report.category_averages:
        cats = sorted(report.category_averages)
        values = [100.0 * report.category_averages[c] for c in cats]
        fig, ax = plt.subplots(figsize=(max(5.0, 0.7 * len(cats) + 2), 3.4))
        ax.bar(range(len(cats)), values, color="#2a6fb0")
        ax.set_xticks(range(len(cats)))
        ax.set_xticklabels(cats, rotation=30, ha="right", fontsize=8)
        ax.set_ylim(0, 105)
        ax.set_ylabel("category AVG AUC (%)")
        if report.overall_average is not None:
            ax.axhline(
                100.0 * report.overall_average,
                color="#b03030",
                linestyle="--",
                linewidth=1,
                label="overall",
            )
            ax.legend(loc="lower left", fontsize=8)
        ax.grid(True, axis="y", alpha=0.3)
        fig.tight_layout()
        path = os.path.join(out_dir, "category_averages.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    return written
