import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfwm.fitting import (
    CorrelationMetrics,
    DegenerateDataError,
    MultiPeakError,
    cauchy_schwarz,
    fit_etalon_spectrum,
    fit_wavepacket,
    read_wavepacket_counts,
    sbr_to_peak_g2,
    spectral_fwhm,
    wavepacket_model,
)

TRUTH = dict(a=120.0, t0=40.0, p=1.8, tau1=6.0, tau2=30.0, td=8.0)


def truth_curve(t, background=3.0):
    return wavepacket_model(t, background=background, **TRUTH)


class TestWavepacketFit:
    def test_noiseless_recovery(self):
        t = np.arange(0.0, 300.0, 1.0)
        fit = fit_wavepacket(t, truth_curve(t))
        assert fit.converged
        for name, value in TRUTH.items():
            assert getattr(fit, name) == pytest.approx(value, rel=1e-6), name
        assert fit.background == pytest.approx(3.0, rel=1e-6)
        # the reported width must be the half-max width of the fitted curve
        refit = fit_wavepacket(t, truth_curve(t))
        assert refit.tau_b == pytest.approx(fit.tau_b, rel=1e-9)

    def test_fit_idempotence(self):
        t = np.arange(0.0, 300.0, 1.0)
        first = fit_wavepacket(t, truth_curve(t))
        fitted_curve = wavepacket_model(t, *first.params_tuple(), first.background)
        second = fit_wavepacket(t, fitted_curve)
        for name in ("a", "t0", "p", "tau1", "tau2", "td", "background", "tau_b"):
            assert getattr(second, name) == pytest.approx(getattr(first, name), rel=1e-6, abs=1e-9), name

    def test_poisson_recovery_median_within_5_percent(self):
        t = np.arange(0.0, 300.0, 1.0)
        clean = truth_curve(t, background=5.0)
        clean *= 200.0 / clean.max()
        truth_fit = fit_wavepacket(t, clean)
        errors = []
        for seed in range(100):
            noisy = np.random.default_rng(seed).poisson(clean).astype(float)
            fit = fit_wavepacket(t, noisy)
            errors.append(abs(fit.tau_b - truth_fit.tau_b) / truth_fit.tau_b)
        assert float(np.median(errors)) < 0.05

    def test_tau_b_invariant_under_scaling_and_translation(self):
        t = np.arange(0.0, 300.0, 1.0)
        base = fit_wavepacket(t, truth_curve(t))
        rng = np.random.default_rng(31)
        for _ in range(5):
            scale = float(rng.uniform(0.1, 50.0))
            shift = float(rng.uniform(-80.0, 80.0))
            fit = fit_wavepacket(t + shift, scale * truth_curve(t))
            assert fit.tau_b == pytest.approx(base.tau_b, rel=1e-6)

    def test_sbr_matches_peak_over_background(self):
        t = np.arange(0.0, 300.0, 1.0)
        fit = fit_wavepacket(t, truth_curve(t, background=3.0))
        curve = wavepacket_model(t, *fit.params_tuple())
        assert fit.sbr == pytest.approx(curve.max() / fit.background, rel=1e-3)

    def test_background_free_data_reports_infinite_sbr(self):
        t = np.arange(0.0, 300.0, 1.0)
        fit = fit_wavepacket(t, truth_curve(t, background=0.0))
        assert math.isinf(fit.sbr)
        assert fit.to_dict()["sbr"] is None

    def test_covariance_shape_and_positivity(self):
        t = np.arange(0.0, 300.0, 1.0)
        noisy = np.random.default_rng(1).poisson(truth_curve(t) + 5.0).astype(float)
        fit = fit_wavepacket(t, noisy)
        assert fit.covariance is not None
        assert fit.covariance.shape == (7, 7)
        assert np.all(np.diag(fit.covariance) >= 0.0)

    def test_rejects_short_input(self):
        t = np.arange(5.0)
        with pytest.raises(ValueError, match="12"):
            fit_wavepacket(t, np.ones_like(t))

    def test_rejects_negative_counts(self):
        t = np.arange(0.0, 20.0, 1.0)
        y = np.ones_like(t)
        y[3] = -5.0
        with pytest.raises(ValueError, match="non-negative"):
            fit_wavepacket(t, y)

    def test_flat_data_degenerate(self):
        t = np.arange(0.0, 20.0, 1.0)
        with pytest.raises(DegenerateDataError):
            fit_wavepacket(t, np.full_like(t, 7.0))

    def test_unit_weights_match_unweighted(self):
        t = np.arange(0.0, 300.0, 1.0)
        y = truth_curve(t)
        a = fit_wavepacket(t, y)
        b = fit_wavepacket(t, y, weights=np.ones_like(t))
        assert a.tau_b == pytest.approx(b.tau_b, rel=1e-9)


class TestSpectralFwhm:
    def test_lorentzian_width(self):
        f = np.arange(-60.0, 60.0, 0.05)
        power = 1.0 / (1.0 + 4.0 * f**2 / 10.0**2)
        assert spectral_fwhm(f, power) == pytest.approx(10.0, abs=0.05)

    def test_squared_lorentzian_width(self):
        f = np.arange(-250.0, 250.0, 0.05)
        power = (math.sqrt(0.29) / (1.0 + 4.0 * f**2 / 59.0**2)) ** 2
        assert spectral_fwhm(f, power) == pytest.approx(38.0, abs=1.0)

    def test_width_relation_across_linewidths(self):
        shape = math.sqrt(math.sqrt(2.0) - 1.0)
        rng = np.random.default_rng(12)
        for _ in range(10):
            gamma_e = float(rng.uniform(5.0, 200.0))
            f = np.linspace(-6 * gamma_e, 6 * gamma_e, 8001)
            power = 1.0 / (1.0 + 4.0 * f**2 / gamma_e**2) ** 2
            assert spectral_fwhm(f, power) == pytest.approx(gamma_e * shape, rel=5e-3)

    def test_multi_peak_rejected_with_count(self):
        f = np.linspace(-10.0, 10.0, 2001)
        power = np.exp(-((f - 3) ** 2)) + 0.9 * np.exp(-((f + 3) ** 2))
        with pytest.raises(MultiPeakError) as err:
            spectral_fwhm(f, power)
        assert err.value.count == 2

    def test_sub_half_ripples_tolerated(self):
        f = np.linspace(-10.0, 10.0, 2001)
        power = np.exp(-(f**2)) + 0.2 * np.exp(-((f - 5) ** 2))
        assert spectral_fwhm(f, power) == pytest.approx(2.0 * math.sqrt(math.log(2.0)), rel=1e-3)

    def test_edge_touching_lobe_rejected(self):
        f = np.linspace(0.0, 1.0, 64)
        power = 1.0 - f
        with pytest.raises(ValueError, match="edge"):
            spectral_fwhm(f, power)


class TestEtalonFit:
    def test_lorentzian_exact_recovery(self):
        f = np.linspace(-200.0, 200.0, 401)
        trans = 0.42 / (1.0 + 4.0 * f**2 / 80.0**2)
        fit = fit_etalon_spectrum(f, trans, model="lorentzian")
        assert fit.t_p == pytest.approx(0.42, rel=1e-9)
        assert fit.fwhm == pytest.approx(80.0, rel=1e-9)
        assert fit.center == pytest.approx(0.0, abs=1e-9)
        assert fit.gamma_e is None

    def test_product_fits_squared_lorentzian(self):
        f = np.linspace(-150.0, 150.0, 601)
        product = (0.42 / (1.0 + 4.0 * f**2 / 80.0**2)) * (0.70 / (1.0 + 4.0 * f**2 / 47.0**2))
        fit = fit_etalon_spectrum(f, product, model="squared_lorentzian")
        assert fit.t_p == pytest.approx(0.29, abs=0.02)
        assert fit.fwhm == pytest.approx(38.0, abs=2.0)
        assert fit.gamma_e == pytest.approx(59.0, abs=1.0)

    def test_linewidth_arithmetic(self):
        shape = math.sqrt(math.sqrt(2.0) - 1.0)
        assert 38.0 / shape == pytest.approx(59.05, abs=0.05)

    def test_shifted_center_recovered(self):
        f = np.linspace(-100.0, 300.0, 801)
        trans = 0.5 / (1.0 + 4.0 * (f - 120.0) ** 2 / 60.0**2) ** 2
        fit = fit_etalon_spectrum(f, trans, model="squared_lorentzian")
        assert fit.center == pytest.approx(120.0, abs=1e-6)

    def test_unknown_model_rejected(self):
        with pytest.raises(ValueError, match="model"):
            fit_etalon_spectrum(np.arange(10.0), np.ones(10), model="gaussian")


class TestCorrelationMetrics:
    def test_reported_operating_point(self):
        value = cauchy_schwarz(3.00, 2.06, 1.95)
        assert 2.2 <= value <= 2.3
        assert value == pytest.approx(9.0 / (2.06 * 1.95), rel=1e-12)

    @pytest.mark.parametrize("triple", [(1.0, 1.0, 1.0), (2.0, 2.0, 2.0)])
    def test_classical_boundary(self, triple):
        assert cauchy_schwarz(*triple) == pytest.approx(1.0, rel=1e-12)

    @settings(max_examples=100)
    @given(
        st.floats(min_value=1e-3, max_value=1e3),
        st.floats(min_value=1e-3, max_value=1e3),
        st.floats(min_value=1e-3, max_value=1e3),
    )
    def test_algebraic_definition(self, si, ss, ii):
        assert cauchy_schwarz(si, ss, ii) == pytest.approx(si * si / (ss * ii), rel=1e-12)

    @pytest.mark.parametrize("bad", [(0.0, 1, 1), (1, -2, 1), (1, 1, float("nan"))])
    def test_nonpositive_rejected(self, bad):
        with pytest.raises(ValueError):
            cauchy_schwarz(*bad)

    def test_metrics_invariant(self):
        m = CorrelationMetrics.from_values(3.0, 2.06, 1.95)
        assert m.cs_factor == pytest.approx(m.g2_si_peak**2 / (m.g2_ss0 * m.g2_ii0), rel=1e-12)

    @pytest.mark.parametrize("sbr,expected", [(2.00, 3.00), (0.0, 1.0), (8.5, 9.5)])
    def test_sbr_to_peak(self, sbr, expected):
        assert sbr_to_peak_g2(sbr) == pytest.approx(expected, rel=1e-12)

    def test_sbr_rejects_negative(self):
        with pytest.raises(ValueError):
            sbr_to_peak_g2(-0.1)


class TestIngestion:
    def test_round_trip_with_weights(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("t_ns,counts,weight\n0,1,1\n1,4,0.5\n2,9,1\n")
        t, counts, weights = read_wavepacket_counts(path)
        assert list(t) == [0.0, 1.0, 2.0]
        assert list(counts) == [1.0, 4.0, 9.0]
        assert list(weights) == [1.0, 0.5, 1.0]

    def test_comments_skipped(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("# config_hash=x\nt_ns,counts\n0,1\n1,2\n")
        t, counts, weights = read_wavepacket_counts(path)
        assert weights is None
        assert list(counts) == [1.0, 2.0]

    @pytest.mark.parametrize(
        "content",
        ["0,1\n1,2\n", "time,counts\n0,1\n", "t_ns,counts,sigma\n0,1,1\n", "t_ns,counts\n0,abc\n"],
    )
    def test_bad_files_rejected(self, tmp_path, content):
        path = tmp_path / "data.csv"
        path.write_text(content)
        with pytest.raises(ValueError):
            read_wavepacket_counts(path)
