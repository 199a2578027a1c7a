"""Experiment drivers: fidelity, scans, estimators, phenomenological fits."""

import numpy as np
import pytest

from jpmsim import experiments as ex
from jpmsim.calibrate import default_calibration
from jpmsim.constants import TWO_PI
from jpmsim.device import dressed_resonator_freqs
from jpmsim.model import ErrorModel


@pytest.fixture(scope="module")
def em():
    return ErrorModel()


@pytest.fixture(scope="module")
def calib(device, em):
    return default_calibration(device, em)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestRabiFidelity:
    def test_fidelity_and_noise(self, device, calib, em):
        r = ex.rabi_fidelity(device, calib, em, rng(1))
        assert r.fidelity == pytest.approx(0.984, abs=0.006)
        assert 0.0015 <= r.sigma <= 0.0025
        assert r.p_click.min() >= 0.0 and r.p_click.max() <= 1.0

    def test_budget_attached(self, device, calib, em):
        r = ex.rabi_fidelity(device, calib, em, rng(2))
        assert sum(v for _, v in r.budget) == pytest.approx(
            1.0 - (r.p1_given_1 - r.p1_given_0), abs=3 * r.sigma)

    def test_curve_oscillates(self, device, calib, em):
        r = ex.rabi_fidelity(device, calib, em, rng(3))
        mid = r.p_click[len(r.angles) // 2]   # angle pi: near the top
        assert r.p_click[0] < 0.05
        assert mid > 0.95
        assert r.p_click[-1] < 0.05           # angle 2pi: back near zero


class TestStability:
    def test_spread_is_shot_noise(self, device, calib, em):
        r = ex.stability_histogram(device, calib, em, rng(4))
        assert 0.0015 <= r.std <= 0.0025
        assert r.mean == pytest.approx(0.984, abs=0.002)
        assert r.fidelities.size == 1000


class TestScan:
    def test_two_lobes_near_dressed_resonances(self, device, calib, em):
        sc = ex.scan_2d(device, calib, em)
        assert sc.argmax["n_local_maxima"] == 2
        w0, w1 = dressed_resonator_freqs(device)
        d = np.abs(sc.difference)
        i, j = np.unravel_index(np.argmax(d), d.shape)
        assert min(abs(sc.omega_d[i] - w0), abs(sc.omega_d[i] - w1)) \
            < TWO_PI * 3e6
        assert abs(sc.t_d[j] - 105e-9) < 20e-9

    def test_count_local_maxima_synthetic(self):
        x, y = np.meshgrid(np.linspace(-1, 1, 41), np.linspace(-1, 1, 41),
                           indexing="ij")
        two = np.exp(-((x - 0.5) ** 2 + y ** 2) / 0.01) \
            + np.exp(-((x + 0.5) ** 2 + y ** 2) / 0.01)
        assert ex.count_local_maxima(two) == 2
        assert ex.count_local_maxima(np.ones((5, 5))) == 1


class TestStark:
    def test_pointer_numbers(self, device, calib):
        r = ex.stark_calibration(device, calib)
        assert r.bright_final == pytest.approx(27.0, abs=0.1)
        assert 3.0 <= r.dark_peak <= 5.0
        assert r.dark_residual < 0.5
        # implied shift is 2 chi n(t): check the endpoint
        assert r.shift_bright[-1] == pytest.approx(
            2 * -TWO_PI * 3.7e6 * r.n_bright[-1], rel=1e-6)


class TestExcessPopulation:
    @pytest.mark.parametrize("planted", [0.0, 0.003, 0.04])
    def test_recovers_planted_value(self, device, calib, em, planted):
        emp = em.without(excess_one_population=planted)
        r = ex.excess_population_estimate(device, calib, emp, rng(5))
        assert r.estimate == pytest.approx(planted, abs=2.5e-3)

    def test_reuse_analytic_curves(self, device, calib, em):
        amps = np.linspace(0.25, 0.40, 7)
        analytic = ex.excess_population_curves(device, calib, em, amps)
        a = ex.excess_population_estimate(device, calib, em, rng(6),
                                          analytic=analytic)
        b = ex.excess_population_estimate(device, calib, em, rng(6))
        assert a.estimate == pytest.approx(b.estimate)


class TestReset:
    def test_time_constants(self, device, calib, em):
        r = ex.reset_experiments(device, calib, em)
        assert r.passive_1e_time == pytest.approx(1.53e-6, rel=1e-9)
        assert r.on_resonance_1e_time == pytest.approx(10e-9, rel=0.2)
        assert r.qubit_reset_time < 100e-9
        # active reset beats the passive 1/e time by more than tenfold
        assert r.resonator_reset_time < r.passive_1e_time / 10

    def test_detuning_curve_minimum_on_resonance(self, device, calib, em):
        r = ex.reset_experiments(device, calib, em)
        k = np.argmin(r.hybrid_1e_times)
        assert abs(r.detunings[k]) < TWO_PI * 10e6


class TestRepetitionRate:
    def test_recovery_constant(self, device, calib, em):
        r = ex.repetition_rate_sweep(device, calib, em, rng(7))
        assert r.fitted_tau == pytest.approx(13e-6, rel=0.1)
        assert r.p11[0] < r.p11[-1]
        assert r.p10[0] > r.p10[-1]


class TestBackaction:
    def test_mitigation_ladder(self, device, calib, em):
        r = ex.backaction_experiment(device, calib, em, rng(8))
        assert r.tunneling_baseline == pytest.approx(0.8)
        v = r.visibilities
        assert v["none"] < 0.1
        assert v["resonator_reset"] == pytest.approx(0.30, abs=0.05)
        assert v["hide_bias"] == pytest.approx(0.75, abs=0.05)
        assert r.fidelity_ideal - r.fidelity_full == pytest.approx(0.002,
                                                                   abs=1e-6)


class TestCrosstalk:
    def test_echo_ratios(self, device, calib, em):
        r = ex.crosstalk_spin_echo(device, calib, em, rng(9))
        assert r.ratio_with_drive == pytest.approx(2.6, abs=0.1)
        assert r.ratio_with_reset == pytest.approx(1.0, abs=0.05)
        assert r.implied_n_bar >= 0.0
