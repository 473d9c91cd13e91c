import math

import numpy as np
import pytest

from cavitybragg.constants import TWO_PI
from cavitybragg.fitting import (
    AmbiguousFitError,
    SidebandFitConfig,
    fit_lorentzian_doublet,
    fit_separation,
    fit_sideband_spectrum,
    format_uncertainty,
)
from cavitybragg.fitting.models import periodogram_peaks
from cavitybragg.geometry import Mode, ProbeGeometry, interference_period
from cavitybragg.series import SpectrumSeries

from synthetic import (
    PHI,
    SIDEBAND_TRUTH,
    SPLIT,
    WAVELENGTH,
    doublet_spectrum,
    separation_scans,
    sideband_spectrum,
)

PROBE = ProbeGeometry(WAVELENGTH, PHI)
P_CW = interference_period(PROBE, Mode.CW)
P_CCW = interference_period(PROBE, Mode.CCW)


class TestFormatting:
    @pytest.mark.parametrize("value, err, text", [
        (783.14, 0.4, "783.1(4)"),
        (935.03, 0.62, "935.0(6)"),
        (0.1703, 0.013, "0.170(13)"),
        (3.4, 2.4, "3.4(2.4)"),
        (8417123.0, 812.0, "8417100(800)"),
        (1.0, math.inf, "1(inf)"),
        (2.5, 0.0, "2.5"),
    ])
    def test_parenthesized_style(self, value, err, text):
        assert format_uncertainty(value, err) == text


class TestSeparation:
    @pytest.mark.parametrize("n_atoms", [2, 3, 4])
    def test_noisy_round_trip(self, n_atoms):
        for seed in range(3):
            cw, ccw = separation_scans(n_atoms, 0.03, seed)
            fit = fit_separation(cw, ccw, n_atoms, WAVELENGTH)
            assert fit.result.converged
            assert abs(fit.period_cw - P_CW) < 0.5
            assert abs(fit.period_ccw - P_CCW) < 0.5
            assert abs(fit.phi_deg - PHI) < 0.05
            assert 0 < fit.errors["period_cw"] < 0.5

    def test_noiseless_exact(self):
        cw, ccw = separation_scans(3, 0.0, 0)
        fit = fit_separation(cw, ccw, 3, WAVELENGTH)
        assert fit.period_cw == pytest.approx(P_CW, rel=1e-9)
        assert fit.period_ccw == pytest.approx(P_CCW, rel=1e-9)
        assert fit.phi_deg == pytest.approx(PHI, abs=1e-7)
        assert fit.c0_cw == pytest.approx(1.0, abs=1e-8)
        assert fit.c1_cw == pytest.approx(1.0, abs=1e-8)

    def test_normal_incidence(self):
        inside_1 = 0
        for seed in range(20):
            cw, ccw = separation_scans(2, 0.03, seed, phi=0.0)
            fit = fit_separation(cw, ccw, 2, WAVELENGTH)
            err = fit.errors["phi_deg"]
            assert abs(fit.phi_deg) <= 3 * err
            inside_1 += abs(fit.phi_deg) <= err
        # about 68% of draws should fall within one standard error
        assert inside_1 >= 10

    @pytest.mark.parametrize("factor", [2.0, 1.7, 0.37])
    def test_equivariance(self, factor):
        cw, ccw = separation_scans(3, 0.03, 4)
        base = fit_separation(cw, ccw, 3, WAVELENGTH)
        scaled = fit_separation(SpectrumSeries(cw.freq * factor, cw.rate),
                                SpectrumSeries(ccw.freq * factor, ccw.rate),
                                3, WAVELENGTH * factor)
        assert scaled.period_cw == pytest.approx(base.period_cw * factor, rel=1e-9)
        assert scaled.period_ccw == pytest.approx(base.period_ccw * factor, rel=1e-9)
        assert scaled.phi_deg == pytest.approx(base.phi_deg, abs=1e-9)

    def test_periodogram_finds_period(self):
        cw, _ = separation_scans(2, 0.0, 0)
        top = periodogram_peaks(cw)[0]
        assert 1 / top == pytest.approx(P_CW, rel=0.01)

    def test_ambiguity(self):
        # on a 25 nm grid starting at a multiple of 25 nm, the period P and its
        # alias 1/(1/25 - 1/P) give identical samples, so both minima tie
        cw, ccw = separation_scans(2, 0.03, 0, n_points=201)
        assert np.allclose(np.diff(cw.freq), 25.0)
        alias = (1 / (1 / 25.0 - 1 / P_CW), 1 / (1 / 25.0 - 1 / P_CCW))
        with pytest.raises(AmbiguousFitError):
            fit_separation(cw, ccw, 2, WAVELENGTH, period_hints=[alias])

    def test_summary(self):
        cw, ccw = separation_scans(2, 0.03, 0)
        text = fit_separation(cw, ccw, 2, WAVELENGTH).summary()
        assert text.startswith("period_cw=783.") and "deg" in text

    def test_short_scan(self):
        s = SpectrumSeries([1.0, 2.0, 3.0], [1.0, 2.0, 1.0])
        with pytest.raises(ValueError):
            fit_separation(s, s, 2, WAVELENGTH)


class TestSideband:
    def test_noiseless_all_parameters(self):
        spec = sideband_spectrum(0.0, 0, n_points=1001)
        res = fit_sideband_spectrum(spec)
        assert res.converged and not res.degenerate
        for name, truth in SIDEBAND_TRUTH.items():
            if truth == 0.0:
                assert abs(res[name]) < 1e-3 * TWO_PI * 36.7e3
            else:
                assert res[name] == pytest.approx(truth, rel=1e-3)

    def test_noisy_round_trip(self):
        cfg = SidebandFitConfig(inverse_variance=True)
        for seed in range(3):
            res = fit_sideband_spectrum(sideband_spectrum(0.05, seed), cfg)
            assert res.converged
            assert abs(res["n_radial"] - 0.17) < 0.05
            assert abs(res["n_axial"] - 3.4) < 2.4

    def test_radial_removed(self):
        no_radial = SidebandFitConfig(include_radial=False)
        spec = sideband_spectrum(0.0, 0, n_points=1001, config=no_radial)
        pinned = fit_sideband_spectrum(spec, no_radial)
        assert pinned.converged and not pinned.degenerate
        assert "omega_radial" not in pinned.names
        assert pinned["n_axial"] == pytest.approx(3.4, rel=1e-3)
        full = fit_sideband_spectrum(spec)
        assert full.degenerate

    def test_fixed_parameter(self):
        spec = sideband_spectrum(0.0, 0, n_points=1001)
        res = fit_sideband_spectrum(spec, SidebandFitConfig(fixed={"omega_c": 0.0}))
        assert "omega_c" not in res.names
        assert res["n_radial"] == pytest.approx(0.17, rel=1e-3)

    def test_lamb_dicke_follows_trap(self):
        from cavitybragg.fitting import sideband_model_rate
        freq = TWO_PI * np.linspace(-250e3, 250e3, 501)
        cfg = SidebandFitConfig()
        a = sideband_model_rate(SIDEBAND_TRUTH, freq, cfg)
        b = sideband_model_rate(dict(SIDEBAND_TRUTH, omega_radial=TWO_PI * 60e3), freq, cfg)
        # moving the trap changes both position and weight of the radial lines
        i = np.argmin(np.abs(freq + TWO_PI * 89e3))
        j = np.argmin(np.abs(freq + TWO_PI * 60e3))
        assert b[j] > a[i]


class TestDoublet:
    def test_noisy_round_trip(self):
        for seed in range(3):
            fit = fit_lorentzian_doublet(doublet_spectrum(0.02, seed), inverse_variance=True)
            assert not fit.degenerate
            assert abs(fit.splitting - SPLIT) / TWO_PI < 1e3
            assert fit.errors["splitting"] / TWO_PI < 1e3
            assert fit.width / TWO_PI == pytest.approx(36.7e3, rel=0.05)

    def test_amplitude_ratio(self):
        for seed in range(3):
            fit = fit_lorentzian_doublet(doublet_spectrum(0.02, seed, ratio=0.5),
                                         inverse_variance=True)
            assert fit.amplitudes[0] / fit.amplitudes[1] == pytest.approx(2.0, rel=0.03)

    def test_zero_splitting_flag(self):
        fit = fit_lorentzian_doublet(doublet_spectrum(0.02, 0, split=0.0))
        assert fit.degenerate

    def test_centres_ordered(self):
        fit = fit_lorentzian_doublet(doublet_spectrum(0.0, 0, ratio=2.0))
        assert fit.centers[0] < fit.centers[1]
        assert fit.amplitudes[1] / fit.amplitudes[0] == pytest.approx(2.0, rel=1e-6)
        cov = fit.result.covariance
        assert np.sqrt(cov[0, 0]) == pytest.approx(fit.errors["center_1"], rel=1e-9)
