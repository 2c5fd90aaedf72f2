"""Report rendering: delimited files plus matplotlib figures.

The CLI report paths (bench, bd-rate) write their numbers as CSV/text and a
figure next to them. matplotlib is imported lazily and forced onto the Agg
backend so reports render on headless machines.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .metrics import RatioReport, RdCurve

__all__ = ["write_bench_report", "save_ratio_figure", "save_rd_figure"]

_PNG_METADATA = {"Software": "rankcodec"}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def save_ratio_figure(report: RatioReport, path: str | os.PathLike) -> None:
    """Bar chart of total bits per pipeline, annotated with ratios."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    xs = np.arange(len(report.pipelines))
    bars = ax.bar(xs, report.totals, color="#4878a8")
    ax.set_xticks(xs)
    ax.set_xticklabels(report.pipelines)
    ax.set_ylabel("total bits")
    ax.set_title("Corpus bit totals by pipeline")
    for bar, ratio in zip(bars, report.ratios):
        ax.annotate(
            f"{ratio:.1f}%",
            (bar.get_x() + bar.get_width() / 2, bar.get_height()),
            ha="center",
            va="bottom",
            fontsize=8,
        )
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def save_rd_figure(
    anchor: RdCurve,
    test: RdCurve,
    path: str | os.PathLike,
    bd_rate_pct: float | None = None,
) -> None:
    """Both R-D point sets with their fitted cubics over the shared interval."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    lo = max(min(anchor.qualities), min(test.qualities))
    hi = min(max(anchor.qualities), max(test.qualities))
    qs = np.linspace(lo, hi, 200)
    for curve, label, color in ((anchor, "anchor", "#b04030"), (test, "test", "#4878a8")):
        ax.plot(curve.rates, curve.qualities, "o", color=color, label=label)
        poly = np.polyfit(curve.qualities, np.log10(curve.rates), 3)
        ax.plot(10.0 ** np.polyval(poly, qs), qs, "-", color=color, alpha=0.7)
    ax.set_xscale("log")
    ax.set_xlabel("rate (bpp)")
    ax.set_ylabel(anchor.metric_name)
    title = "Rate-distortion curves"
    if bd_rate_pct is not None:
        title += f" (BD-rate {bd_rate_pct:+.2f}%)"
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def write_bench_report(report: RatioReport, out_dir: str | os.PathLike) -> list[Path]:
    """Write report.csv, report_per_document.csv, report.txt and report.png
    into ``out_dir``; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [
        out / "report.csv",
        out / "report_per_document.csv",
        out / "report.txt",
        out / "report.png",
    ]
    paths[0].write_text(report.to_csv())
    paths[1].write_text(report.document_csv())
    paths[2].write_text(report.to_text())
    save_ratio_figure(report, paths[3])
    return paths
