import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import rankcodec as rc
from rankcodec.errors import DegenerateCurve, EmptyInput, InvalidReading, NoOverlap
from rankcodec.metrics import read_rd_curve


def numeric_bd_rate_oracle(anchor, test, samples=100_000):
    """Independent route: Vandermonde least squares fit plus trapezoidal
    integration over a dense sampling of the fitted cubics."""

    def fit(curve):
        q = np.asarray(curve.qualities)
        a = np.vander(q, 4)
        coef, *_ = np.linalg.lstsq(a, np.log10(np.asarray(curve.rates)), rcond=None)
        return coef

    lo = max(min(anchor.qualities), min(test.qualities))
    hi = min(max(anchor.qualities), max(test.qualities))
    qs = np.linspace(lo, hi, samples)

    def integral(coef):
        ys = np.polyval(coef, qs)
        return np.trapezoid(ys, qs)

    delta = (integral(fit(test)) - integral(fit(anchor))) / (hi - lo)
    return 100.0 * (10.0**delta - 1.0)


def random_curve(rng, npoints, quality_lo=1.0, quality_hi=10.0):
    """Synthetic but R-D-shaped: qualities spread over a shared range so two
    draws always overlap substantially, rates monotone in quality."""
    qualities = np.sort(
        rng.uniform(quality_lo, quality_hi, npoints) + rng.normal(0, 0.05, npoints)
    )
    while len(set(qualities)) != npoints:
        qualities = np.sort(rng.uniform(quality_lo, quality_hi, npoints))
    log_rates = np.cumsum(rng.uniform(0.05, 0.4, npoints)) + rng.uniform(-0.5, 0.5)
    return rc.RdCurve(tuple(10.0**log_rates), tuple(qualities), "m", False)


class TestCompressionRatio:
    def test_reference_totals(self):
        # reference bit totals for the caption corpus under the three
        # pipelines; only the ratio arithmetic is reproduced here
        assert rc.compression_ratio(1055856, 598960) == pytest.approx(43.28, abs=0.01)
        assert rc.compression_ratio(1055856, 368080) == pytest.approx(65.14, abs=0.01)

    def test_identity_is_zero(self):
        assert rc.compression_ratio(717, 717) == 0.0

    def test_zero_baseline(self):
        with pytest.raises(ZeroDivisionError):
            rc.compression_ratio(0, 10)


class TestBdRate:
    def test_identical_curves_give_exact_zero(self):
        curve = rc.RdCurve((1.0, 2.0, 4.0, 8.0), (30.0, 33.0, 36.0, 39.0))
        assert rc.bd_rate(curve, curve) == 0.0

    def test_halved_rates_give_minus_fifty(self):
        anchor = rc.RdCurve((1.0, 2.0, 4.0, 8.0), (30.0, 33.0, 36.0, 39.0))
        assert rc.bd_rate(anchor, anchor.scaled(0.5)) == pytest.approx(-50.0, abs=1e-9)

    @pytest.mark.parametrize("scale", [0.5, 0.9, 1.1, 2.0])
    def test_uniform_scaling_law(self, scale):
        anchor = rc.RdCurve((0.5, 1.5, 3.0, 7.0, 11.0), (10.0, 14.0, 19.0, 23.0, 30.0))
        assert rc.bd_rate(anchor, anchor.scaled(scale)) == pytest.approx(
            100.0 * (scale - 1.0), abs=1e-6
        )

    def test_antisymmetric_sign(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a = random_curve(rng, 5)
            b = random_curve(rng, 5)
            forward = rc.bd_rate(a, b)
            backward = rc.bd_rate(b, a)
            if abs(forward) > 1e-9:
                assert np.sign(forward) == -np.sign(backward)

    def test_matches_numeric_integration_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            anchor = random_curve(rng, int(rng.integers(4, 7)))
            test = random_curve(rng, int(rng.integers(4, 7)))
            got = rc.bd_rate(anchor, test)
            want = numeric_bd_rate_oracle(anchor, test)
            assert got == pytest.approx(want, abs=0.01)

    def test_no_overlap(self):
        a = rc.RdCurve((1.0, 2.0, 3.0, 4.0), (1.0, 2.0, 3.0, 4.0))
        b = rc.RdCurve((1.0, 2.0, 3.0, 4.0), (10.0, 11.0, 12.0, 13.0))
        with pytest.raises(NoOverlap):
            rc.bd_rate(a, b)

    def test_duplicate_quality_is_degenerate(self):
        a = rc.RdCurve((1.0, 2.0, 3.0, 4.0), (1.0, 2.0, 2.0, 4.0))
        b = rc.RdCurve((1.0, 2.0, 3.0, 4.0), (1.0, 2.0, 3.0, 4.0))
        with pytest.raises(DegenerateCurve):
            rc.bd_rate(a, b)

    def test_too_few_points_for_cubic(self):
        a = rc.RdCurve((1.0, 2.0, 3.0), (1.0, 2.0, 3.0))
        b = rc.RdCurve((1.0, 2.0, 3.0, 4.0), (1.0, 2.0, 3.0, 4.0))
        with pytest.raises(DegenerateCurve):
            rc.bd_rate(a, b)

    def test_metric_mismatch(self):
        a = rc.RdCurve((1.0, 2.0, 3.0, 4.0), (1.0, 2.0, 3.0, 4.0), "lpips", True)
        b = rc.RdCurve((1.0, 2.0, 3.0, 4.0), (1.0, 2.0, 3.0, 4.0), "clip", False)
        with pytest.raises(ValueError):
            rc.bd_rate(a, b)

    def test_curve_validation(self):
        with pytest.raises(ValueError):
            rc.RdCurve((1.0,), (2.0,))
        with pytest.raises(ValueError):
            rc.RdCurve((0.0, 1.0), (1.0, 2.0))
        with pytest.raises(ValueError):
            rc.RdCurve((1.0, 1.0), (1.0, 2.0))

    def test_csv_ingestion(self, tmp_path):
        path = tmp_path / "curve.csv"
        path.write_text("rate_bpp,quality\n0.5,30\n0.25,27\n1.0,33\n2.0,35\n")
        curve = read_rd_curve(path, "lpips", lower_is_better=True)
        assert curve.rates == (0.25, 0.5, 1.0, 2.0)
        assert curve.qualities == (27.0, 30.0, 33.0, 35.0)
        assert curve.lower_is_better


class TestAggregateLoss:
    KAPPAS = (0.5, 0.2, 0.2, 0.1)

    def test_zero_distortion(self):
        w = rc.LossWeights(3.0, self.KAPPAS)
        m = rc.MetricReadings(rate=0.7, mse=0.0, lpips=0.0, clipiqa=0.0, clipi2t=0.0)
        loss, d = rc.aggregate_loss(w, m)
        assert d == 0.0 and loss == 0.7

    def test_unit_losses_sum_weights_exactly(self):
        w = rc.LossWeights(1.0, self.KAPPAS)
        m = rc.MetricReadings(rate=0.0, mse=255.0, lpips=1.0, clipiqa=1.0, clipi2t=1.0)
        loss, d = rc.aggregate_loss(w, m)
        assert d == 1.0
        assert loss == 1.0

    def test_hand_worked_example(self):
        w = rc.LossWeights(2.0, self.KAPPAS)
        m = rc.MetricReadings(
            rate=0.04, mse=0.2 * 255, lpips=0.5, clipiqa=0.1, clipi2t=0.3
        )
        loss, d = rc.aggregate_loss(w, m)
        assert d == pytest.approx(0.25, abs=1e-12)
        assert loss == pytest.approx(0.54, abs=1e-12)

    @given(
        kappas=st.tuples(*[st.floats(0.01, 5)] * 4),
        losses=st.tuples(*[st.floats(0, 1)] * 4),
        lam=st.floats(0.01, 10),
        scale=st.floats(0.1, 4),
    )
    def test_linearity(self, kappas, losses, lam, scale):
        m = rc.MetricReadings(
            rate=0.0,
            mse=losses[0] * 255,
            lpips=losses[1],
            clipiqa=losses[2],
            clipi2t=losses[3],
        )
        _, d1 = rc.aggregate_loss(rc.LossWeights(lam, kappas), m)
        _, d2 = rc.aggregate_loss(
            rc.LossWeights(lam, tuple(k * 2 for k in kappas)), m
        )
        assert d2 == pytest.approx(2 * d1, rel=1e-12)
        loss_a, d = rc.aggregate_loss(rc.LossWeights(lam, kappas), m)
        loss_b, _ = rc.aggregate_loss(rc.LossWeights(lam * scale, kappas), m)
        assert loss_b - 0.0 == pytest.approx(scale * (loss_a - 0.0), rel=1e-9)

    def test_non_finite_rejected(self):
        w = rc.LossWeights(1.0, self.KAPPAS)
        m = rc.MetricReadings(rate=float("nan"), mse=0, lpips=0, clipiqa=0, clipi2t=0)
        with pytest.raises(InvalidReading):
            rc.aggregate_loss(w, m)

    def test_out_of_range_normalized_value(self):
        w = rc.LossWeights(1.0, self.KAPPAS)
        m = rc.MetricReadings(rate=0.0, mse=300.0, lpips=0.0, clipiqa=0.0, clipi2t=0.0)
        with pytest.raises(InvalidReading):
            rc.aggregate_loss(w, m)

    def test_weight_validation(self):
        with pytest.raises(ValueError):
            rc.LossWeights(0.0, self.KAPPAS)
        with pytest.raises(ValueError):
            rc.LossWeights(1.0, (0.0, 0.0, 0.0, 0.0))


class TestRatioReport:
    def test_single_document(self):
        report = rc.ratio_report({"none": [800], "deflate": [400], "rank+deflate": [200]})
        assert report.totals == (800, 400, 200)
        assert report.ratios == (0.0, 50.0, 75.0)

    def test_reference_totals_row(self):
        report = rc.ratio_report(
            {"none": [1055856], "gzip": [598960], "rank+gzip": [368080]}
        )
        assert report.ratios[0] == 0.0
        assert report.ratios[1] == pytest.approx(43.28, abs=0.01)
        assert report.ratios[2] == pytest.approx(65.14, abs=0.01)

    def test_sums_not_averaged_ratios(self):
        report = rc.ratio_report({"none": [100, 900], "z": [80, 300]})
        # ratio on summed totals, by hand: 1 - 380/1000
        assert report.ratios[1] == pytest.approx(62.0)
        per_doc_mean = (rc.compression_ratio(100, 80) + rc.compression_ratio(900, 300)) / 2
        assert report.ratios[1] != pytest.approx(per_doc_mean)

    def test_agrees_with_compression_ratio_on_single_docs(self):
        report = rc.ratio_report({"a": [1234], "b": [777]})
        assert report.ratios[1] == rc.compression_ratio(1234, 777)

    def test_empty_corpus(self):
        with pytest.raises(EmptyInput):
            rc.ratio_report({})
        with pytest.raises(EmptyInput):
            rc.ratio_report({"none": []})

    def test_csv_and_text_shapes(self):
        report = rc.ratio_report({"none": [800], "deflate": [400]}, ("doc.txt",))
        csv_text = report.to_csv()
        assert csv_text.splitlines()[0] == "pipeline,total_bits,compression_ratio_pct"
        assert "deflate,400,50.00" in csv_text
        table = report.to_text()
        assert "Total bits" in table and "50.00%" in table
        per_doc = report.document_csv()
        assert per_doc.splitlines()[1].startswith("doc.txt,")
