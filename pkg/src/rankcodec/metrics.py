"""Quantitative bookkeeping: compression ratios, Bjontegaard delta rate
between rate-distortion curves, and weighted loss aggregation.

Everything here is plain arithmetic over numbers handed in by the caller;
no metric is ever computed from pixels or embeddings in this module.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateCurve, EmptyInput, InvalidReading, NoOverlap

__all__ = [
    "RdCurve",
    "LossWeights",
    "MetricReadings",
    "RatioReport",
    "compression_ratio",
    "bd_rate",
    "aggregate_loss",
    "ratio_report",
    "read_rd_curve",
]


@dataclass(frozen=True)
class RdCurve:
    """Operating points of one codec: (bits-per-pixel, quality) pairs.

    Points are sorted by rate on construction; rates must be strictly
    positive and strictly increasing after sorting.
    """

    rates: tuple[float, ...]
    qualities: tuple[float, ...]
    metric_name: str = "quality"
    lower_is_better: bool = False

    def __post_init__(self) -> None:
        if len(self.rates) != len(self.qualities):
            raise ValueError("rates and qualities differ in length")
        if len(self.rates) < 2:
            raise ValueError("a curve needs at least two points")
        order = sorted(range(len(self.rates)), key=lambda i: self.rates[i])
        rates = tuple(float(self.rates[i]) for i in order)
        qualities = tuple(float(self.qualities[i]) for i in order)
        if rates[0] <= 0.0:
            raise ValueError("rates must be strictly positive")
        for a, b in zip(rates, rates[1:]):
            if b <= a:
                raise ValueError("rates must be strictly increasing")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "qualities", qualities)

    def scaled(self, factor: float) -> "RdCurve":
        """Same qualities with every rate multiplied by ``factor``."""
        return RdCurve(
            tuple(r * factor for r in self.rates),
            self.qualities,
            self.metric_name,
            self.lower_is_better,
        )


@dataclass(frozen=True)
class LossWeights:
    """Rate-distortion trade-off lambda and the four distortion weights."""

    lam: float
    kappas: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if len(self.kappas) != 4:
            raise ValueError("exactly four kappa weights expected")
        if any(k < 0 for k in self.kappas):
            raise ValueError("kappa weights must be non-negative")
        if not any(k > 0 for k in self.kappas):
            raise ValueError("at least one kappa must be positive")


@dataclass(frozen=True)
class MetricReadings:
    """Raw metric values for one operating point plus normalization maxima.

    ``rate`` is the average bitrate term; the four distortion readings are
    divided by their maxima (mean squared error by 255 by default, the
    others already living in [0, 1]).
    """

    rate: float
    mse: float
    lpips: float
    clipiqa: float
    clipi2t: float
    maxima: tuple[float, float, float, float] = (255.0, 1.0, 1.0, 1.0)

    def normalized(self) -> tuple[float, float, float, float]:
        raw = (self.rate, self.mse, self.lpips, self.clipiqa, self.clipi2t)
        if not all(math.isfinite(v) for v in raw + self.maxima):
            raise InvalidReading("metric readings must be finite")
        if any(m <= 0 for m in self.maxima):
            raise InvalidReading("normalization maxima must be positive")
        values = tuple(
            v / m
            for v, m in zip((self.mse, self.lpips, self.clipiqa, self.clipi2t), self.maxima)
        )
        for v in values:
            if not 0.0 <= v <= 1.0:
                raise InvalidReading(f"normalized reading {v} outside [0, 1]")
        return values


def compression_ratio(baseline_bits: int, compressed_bits: int) -> float:
    """Percentage of the baseline saved: 100 * (1 - compressed / baseline)."""
    if baseline_bits == 0:
        raise ZeroDivisionError("baseline of zero bits")
    return 100.0 * (1.0 - compressed_bits / baseline_bits)


def bd_rate(anchor: RdCurve, test: RdCurve) -> float:
    """Average bitrate difference of ``test`` against ``anchor`` at equal
    quality, in percent; negative means the test codec saves bits.

    Cubic least-squares fit of log10(rate) as a function of quality for each
    curve, closed-form integration of both polynomials over the shared
    quality interval, then 100 * (10^(mean difference) - 1).
    """
    if anchor.metric_name != test.metric_name:
        raise ValueError(
            f"curves measure different metrics: {anchor.metric_name!r} vs {test.metric_name!r}"
        )
    if anchor.lower_is_better != test.lower_is_better:
        raise ValueError("curves disagree on metric orientation")
    for curve, name in ((anchor, "anchor"), (test, "test")):
        if len(curve.rates) < 4:
            raise DegenerateCurve(f"{name} curve has {len(curve.rates)} points, cubic fit needs 4")
        if len(set(curve.qualities)) != len(curve.qualities):
            raise DegenerateCurve(f"{name} curve repeats a quality value")
    lo = max(min(anchor.qualities), min(test.qualities))
    hi = min(max(anchor.qualities), max(test.qualities))
    if hi <= lo:
        raise NoOverlap(f"quality ranges do not overlap (interval [{lo}, {hi}])")

    def integral(curve: RdCurve) -> float:
        poly = np.polyfit(curve.qualities, np.log10(curve.rates), 3)
        anti = np.polyint(poly)
        return float(np.polyval(anti, hi) - np.polyval(anti, lo))

    delta = (integral(test) - integral(anchor)) / (hi - lo)
    return 100.0 * (10.0**delta - 1.0)


def aggregate_loss(weights: LossWeights, readings: MetricReadings) -> tuple[float, float]:
    """Return (loss, distortion): D is the kappa-weighted sum of normalized
    readings, loss is rate + lambda * D."""
    norm = readings.normalized()
    # fsum gives the correctly rounded sum of the four products, so exact
    # identities (unit losses with weights summing to 1, doubling weights)
    # survive in floating point
    distortion = math.fsum(k * v for k, v in zip(weights.kappas, norm))
    return readings.rate + weights.lam * distortion, distortion


@dataclass(frozen=True)
class RatioReport:
    """Per-pipeline bit totals and ratios against the first pipeline."""

    pipelines: tuple[str, ...]
    totals: tuple[int, ...]
    ratios: tuple[float, ...]
    documents: tuple[str, ...] = ()
    per_document: tuple[tuple[int, ...], ...] = ()

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["pipeline", "total_bits", "compression_ratio_pct"])
        for name, total, ratio in zip(self.pipelines, self.totals, self.ratios):
            writer.writerow([name, total, f"{ratio:.2f}"])
        return out.getvalue()

    def document_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["document"] + list(self.pipelines))
        for doc, row in zip(self.documents, self.per_document):
            writer.writerow([doc] + list(row))
        return out.getvalue()

    def to_text(self) -> str:
        width = max(12, *(len(p) + 2 for p in self.pipelines))
        header = "".ljust(18) + "".join(p.rjust(width) for p in self.pipelines)
        bits_row = "Total bits".ljust(18) + "".join(
            str(t).rjust(width) for t in self.totals
        )
        ratio_row = "Compression ratio".ljust(18) + "".join(
            f"{r:.2f}%".rjust(width) for r in self.ratios
        )
        return "\n".join((header, bits_row, ratio_row)) + "\n"


def ratio_report(
    results: Mapping[str, Sequence[int]],
    documents: Sequence[str] = (),
) -> RatioReport:
    """Summarize per-document bit counts; ratios are computed on summed
    totals (not averaged per-document ratios) against the first pipeline."""
    if not results:
        raise EmptyInput("no pipelines to report")
    pipelines = tuple(results.keys())
    lengths = {len(results[p]) for p in pipelines}
    if lengths == {0}:
        raise EmptyInput("no documents to report")
    if len(lengths) != 1:
        raise ValueError(f"pipelines cover different document counts: {sorted(lengths)}")
    totals = tuple(int(sum(results[p])) for p in pipelines)
    baseline = totals[0]
    ratios = tuple(compression_ratio(baseline, t) for t in totals)
    ndocs = lengths.pop()
    docs = tuple(documents) if documents else tuple(f"doc{i:03d}" for i in range(ndocs))
    if len(docs) != ndocs:
        raise ValueError("document names do not match document count")
    per_document = tuple(
        tuple(int(results[p][i]) for p in pipelines) for i in range(ndocs)
    )
    return RatioReport(pipelines, totals, ratios, docs, per_document)


def read_rd_curve(
    path,
    metric_name: str = "quality",
    lower_is_better: bool = False,
) -> RdCurve:
    """Load a curve from CSV with header ``rate_bpp,quality``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["rate_bpp", "quality"]:
            raise ValueError(f"{path}: expected CSV header 'rate_bpp,quality'")
        rates: list[float] = []
        qualities: list[float] = []
        for row in reader:
            if not row or not row[0].strip():
                continue
            rates.append(float(row[0]))
            qualities.append(float(row[1]))
    return RdCurve(tuple(rates), tuple(qualities), metric_name, lower_is_better)
