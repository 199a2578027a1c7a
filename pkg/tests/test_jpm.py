"""Detector physics: potential landscape, escape rates, click model."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jpmsim import jpm
from jpmsim.constants import TWO_PI


class TestPotential:
    def test_energy_scales(self, device):
        E_L, omega_LC = jpm.energy_scales(device)
        assert E_L == pytest.approx(8.3316e-23, rel=1e-3)
        assert omega_LC / TWO_PI == pytest.approx(2.97603e9, rel=1e-4)

    def test_critical_phase(self, device):
        from jpmsim.device import beta_L
        beta = beta_L(device)
        dc = jpm.critical_phase(beta)
        assert dc == pytest.approx(1.75262, abs=1e-4)
        # inflection point: curvature vanishes at the critical phase
        assert jpm.potential_curvature(dc, beta) == pytest.approx(0.0, abs=1e-9)

    def test_critical_bias(self, device):
        assert jpm.critical_bias(device) == pytest.approx(7.19159, abs=1e-4)

    def test_photodetect_landscape(self, device):
        de = jpm.flux_for_plasma(device, device.omega_r_bare)
        assert de == pytest.approx(5.91784, abs=1e-4)
        land = jpm.landscape(device, de)
        well = land.active
        assert well.delta_min == pytest.approx(1.0691, abs=1e-3)
        assert well.delta_saddle == pytest.approx(2.4680, abs=1e-3)
        E_L, _ = jpm.energy_scales(device)
        assert well.barrier / E_L == pytest.approx(1.1773, abs=1e-3)
        assert well.omega_p == pytest.approx(device.omega_r_bare, rel=1e-4)
        assert well.n_bound == pytest.approx(26.0, abs=0.1)

    def test_extrema_are_stationary(self, device):
        from jpmsim.device import beta_L
        beta = beta_L(device)
        land = jpm.landscape(device, 5.5)
        eps = 1e-6
        for d in list(land.minima) + list(land.saddles):
            du = (jpm.potential_u(d + eps, 5.5, beta)
                  - jpm.potential_u(d - eps, 5.5, beta)) / (2 * eps)
            assert abs(du) < 1e-5

    def test_potential_rows(self, device):
        rows = list(jpm.potential_csv_rows(device, 5.9, n_points=51))
        assert len(rows) == 51
        deltas = [r[0] for r in rows]
        assert deltas == sorted(deltas)


class TestPlasmaBand:
    def test_max_plasma(self, device):
        assert jpm.max_plasma_frequency(device) / TWO_PI == pytest.approx(
            7.605e9, rel=1e-3)

    def test_flux_round_trip(self, device):
        for f_ghz in (4.0, 5.0, 5.693, 7.0, 7.3):
            target = TWO_PI * f_ghz * 1e9
            de = jpm.flux_for_plasma(device, target)
            land = jpm.landscape(device, de)
            assert land.active.omega_p == pytest.approx(target, rel=1e-4)

    def test_out_of_range_rejected(self, device):
        with pytest.raises(ValueError):
            jpm.flux_for_plasma(device, TWO_PI * 8.5e9)


class TestEscape:
    def test_rate_increases_with_excitation(self, device):
        de = jpm.flux_for_plasma(device, device.omega_r_bare)
        well = jpm.landscape(device, de).active
        quantum = jpm.photodetect_energy(device, 1.0, 5e-9)
        rates = [jpm.escape_rate(device, well, k * quantum) for k in range(5)]
        assert all(b > a for a, b in zip(rates, rates[1:]))

    def test_probability_bounds_and_monotonicity(self):
        assert jpm.escape_probability(0.0, 1e-8) == 0.0
        p1 = jpm.escape_probability(1e8, 5e-9)
        p2 = jpm.escape_probability(1e8, 10e-9)
        p3 = jpm.escape_probability(2e8, 10e-9)
        assert 0.0 < p1 < p2 < p3 < 1.0

    @settings(max_examples=100, deadline=None)
    @given(rate=st.floats(1e2, 1e10), t1=st.floats(1e-9, 1e-7),
           scale=st.floats(1.0, 10.0))
    def test_probability_monotone_property(self, rate, t1, scale):
        assert jpm.escape_probability(rate, t1 * scale) >= \
            jpm.escape_probability(rate, t1) - 1e-15


class TestPhotodetection:
    def test_efficiency_value(self, device):
        assert jpm.photodetect_efficiency(device, 5e-9) == pytest.approx(
            0.31803, abs=1e-4)

    def test_optimal_time(self, device):
        t = jpm.optimal_photodetect_time(device)
        assert t == pytest.approx(3.3872e-9, rel=1e-3)
        eps = 0.05e-9
        assert jpm.photodetect_efficiency(device, t) >= \
            max(jpm.photodetect_efficiency(device, t - eps),
                jpm.photodetect_efficiency(device, t + eps))


@pytest.fixture(scope="module")
def bias(device):
    return jpm.flux_for_plasma(device, device.omega_r_bare)


class TestClickModel:
    def test_click_monotone_in_photon_number(self, device, bias):
        n = np.array([0.0, 1.0, 5.0, 15.0, 27.0])
        c = jpm.click_probability(device, n, 0.875, bias)
        assert np.all(np.diff(c) > 0)
        assert c[-1] > 0.999

    def test_dark_click_matches_zero_photons(self, device, bias):
        a = 0.85
        assert jpm.dark_click_probability(device, a, bias) == pytest.approx(
            float(jpm.click_probability(device, 0.0, a, bias)))

    def test_s_curve_ordering(self, device, bias):
        amps = np.linspace(0.0, 1.0, 21)
        dark = np.array([jpm.dark_click_probability(device, a, bias)
                         for a in amps])
        bright = np.array([float(jpm.click_probability(device, 27.0, a, bias))
                           for a in amps])
        assert np.all(bright >= dark - 1e-12)
        assert np.all(np.diff(dark) >= -1e-12)
        assert np.all(np.diff(bright) >= -1e-12)

    def test_amplitude_range_enforced(self, device, bias):
        with pytest.raises(ValueError):
            jpm.tunnel_bias(device, 1.5, bias)


class TestReadoutChannels:
    def test_hybridized_decay(self, device):
        rate0 = jpm.hybridized_decay_rate(device, 0.0)
        assert 1.0 / rate0 == pytest.approx(9.967e-9, rel=1e-3)
        far = jpm.hybridized_decay_rate(device, TWO_PI * 50e9)
        assert far == pytest.approx(device.kappa_r, rel=1e-2)
        near = jpm.hybridized_decay_rate(device, TWO_PI * 100e6)
        assert device.kappa_r < near < rate0

    def test_retrap(self):
        assert jpm.retrap_probability(30e-9) == pytest.approx(
            0.05 * math.exp(-30.0 / 7.0), rel=1e-9)
        assert jpm.retrap_probability(0.0) == pytest.approx(0.05)

    def test_misassignment(self):
        assert jpm.readout_misassignment(8.0) == pytest.approx(
            3.1671e-5, rel=1e-3)
        assert jpm.readout_misassignment(0.0) == pytest.approx(0.5)
        assert jpm.readout_misassignment(20.0) < 1e-10
