"""Acceptance gate: eight end-to-end criteria, one pass/fail line each.

Each test prints a single summary line naming every subcheck; the pytest
verdict for the test is the pass/fail line for that criterion.  Two checks
fail by design of the underlying physics and are left red on purpose; the
failure text states the observed value next to the required window.
"""

import math

import numpy as np
import pytest

from jpmsim import experiments as ex
from jpmsim import jpm
from jpmsim.calibrate import (default_calibration, optimize_drive, s_curves)
from jpmsim.cli import main
from jpmsim.constants import TWO_PI
from jpmsim.device import (beta_L, dressed_resonator_freqs, effective_chi,
                           has_double_well, n_crit, purcell_limit)
from jpmsim.model import ErrorModel


@pytest.fixture(scope="module")
def em():
    return ErrorModel()


@pytest.fixture(scope="module")
def calib(device, em):
    return default_calibration(device, em)


class Checks:
    """Collects named subchecks and renders one pass/fail line."""

    def __init__(self, criterion):
        self.criterion = criterion
        self.items = []

    def add(self, name, ok, detail):
        self.items.append((name, bool(ok), detail))

    def finish(self):
        ok = all(x[1] for x in self.items)
        verdict = "PASS" if ok else "FAIL"
        parts = "; ".join(f"{n} {'ok' if o else 'FAIL'} ({d})"
                          for n, o, d in self.items)
        print(f"[criterion {self.criterion}] {verdict}: {parts}")
        failed = [f"{n}: {d}" for n, o, d in self.items if not o]
        assert not failed, f"criterion {self.criterion} failed: " + \
            "; ".join(failed)


def test_criterion_1_derived_goldens(device):
    c = Checks(1)
    t_purcell = purcell_limit(device, delta=TWO_PI * 5.1e9
                              - device.omega_r_bare)
    c.add("purcell", abs(t_purcell - 66e-6) <= 0.05 * 66e-6,
          f"{t_purcell * 1e6:.2f} us vs 66 +- 5%")
    nc = n_crit(device)
    c.add("n_crit", abs(nc - 13.3) <= 0.1, f"{nc:.2f} vs 13.3 +- 0.1")
    swap = math.pi / (2 * device.g_jr)
    c.add("swap", abs(swap - 4e-9) <= 0.02 * 4e-9,
          f"{swap * 1e9:.3f} ns vs 4 +- 2%")
    b = beta_L(device)
    c.add("beta_L", abs(b - 5.5) < 0.2 and has_double_well(device),
          f"{b:.3f}, double well {has_double_well(device)}")
    top = jpm.max_plasma_frequency(device) / TWO_PI
    lo_ok = True
    try:
        jpm.flux_for_plasma(device, TWO_PI * 4.0e9)
    except ValueError:
        lo_ok = False
    c.add("plasma_range", lo_ok and abs(top - 7.3e9) <= 0.1 * 7.3e9,
          f"reaches 4 GHz, top {top / 1e9:.2f} vs 7.3 +- 10%")
    de = jpm.flux_for_plasma(device, device.omega_r_bare)
    nb = jpm.landscape(device, de).active.n_bound
    # red on purpose: the harmonic level count in this potential is half the
    # required window; see the decisions ledger for the analysis
    c.add("bound_states", abs(nb - 50.0) <= 15.0, f"{nb:.1f} vs 50 +- 15")
    c.finish()


def test_criterion_2_pointer_cross_check(device, calib):
    c = Checks(2)
    two_chi = 2 * abs(effective_chi(device)) / TWO_PI
    c.add("splitting", abs(two_chi - 7.4e6) < 1e3,
          f"2chi {two_chi / 1e6:.2f} MHz")
    r = ex.stark_calibration(device, calib)
    c.add("bright", abs(r.bright_final - 27.0) < 0.1,
          f"n_bright {r.bright_final:.2f}")
    c.add("t_d", abs(calib.t_d - 105e-9) < 1e-12,
          f"{calib.t_d * 1e9:.0f} ns")
    c.add("dark_peak", 3.0 <= r.dark_peak <= 5.0,
          f"{r.dark_peak:.2f} vs 4 +- 1")
    c.add("dark_residual", r.dark_residual < 0.5,
          f"{r.dark_residual:.3f} vs < 0.5")
    c.finish()


def test_criterion_3_fidelity(device, calib, em):
    c = Checks(3)
    rng = np.random.default_rng(314)
    r = ex.rabi_fidelity(device, calib, em, rng, shots=5000)
    c.add("fidelity", abs(r.fidelity - 0.984) <= 0.005,
          f"{r.fidelity * 100:.2f}% vs 98.4 +- 0.5%")
    budget_sum = sum(v for _, v in r.budget)
    gap = abs(budget_sum - (1.0 - r.fidelity))
    c.add("budget", gap <= 3 * r.sigma,
          f"|sum - (1-F)| {gap * 100:.3f}% vs 3 sigma "
          f"{3 * r.sigma * 100:.3f}%")
    st = ex.stability_histogram(device, calib, em, rng,
                                determinations=1000, shots=5000)
    c.add("sigma_F", abs(st.std - 0.002) <= 0.0005,
          f"{st.std * 100:.3f}% vs 0.2 +- 0.05%")
    c.finish()


def test_criterion_4_scan_structure(device, calib, em):
    c = Checks(4)
    sc = ex.scan_2d(device, calib, em)
    c.add("two_maxima", sc.argmax["n_local_maxima"] == 2,
          f"{sc.argmax['n_local_maxima']} lobes")
    w0, w1 = dressed_resonator_freqs(device)
    d = np.abs(sc.difference)
    t_half = math.pi / abs(effective_chi(device))
    # both lobes close to a dressed resonance at t near pi/chi
    from scipy import ndimage
    lab, n = ndimage.label(d >= 0.5 * d.max())
    near = 0
    for k in range(1, n + 1):
        i, j = ndimage.center_of_mass(d, lab, k)
        w = np.interp(i, np.arange(sc.omega_d.size), sc.omega_d)
        t = np.interp(j, np.arange(sc.t_d.size), sc.t_d)
        if min(abs(w - w0), abs(w - w1)) < TWO_PI * 5e6 and \
                abs(t - t_half) < 0.35 * t_half:
            near += 1
    c.add("lobe_positions", near >= 2,
          f"{near} lobes near dressed freqs at t ~ pi/chi")
    opt = optimize_drive(device, calib, em)
    dk = (w1 - opt.omega_d) / TWO_PI
    c.add("detuning", 1e6 <= dk <= 3e6, f"{dk / 1e6:.2f} MHz below w1")
    shortening = 1.0 - opt.t_d / t_half
    c.add("shortening", 0.15 <= shortening <= 0.30,
          f"{shortening * 100:.1f}% vs 15-30%")
    c.finish()


def test_criterion_5_reset_suite(device, calib, em):
    c = Checks(5)
    r = ex.reset_experiments(device, calib, em)
    c.add("passive", r.passive_1e_time == pytest.approx(1.0 / device.kappa_r),
          f"{r.passive_1e_time * 1e6:.3f} us (model identity)")
    # red on purpose: emptying 27 photons to 1e-3 through the hybridized
    # channel takes just over the window; see the decisions ledger
    c.add("resonator_reset", r.resonator_reset_time < 100e-9,
          f"{r.resonator_reset_time * 1e9:.1f} ns vs < 100 ns")
    c.add("qubit_reset", r.qubit_reset_time < 100e-9,
          f"{r.qubit_reset_time * 1e9:.1f} ns vs < 100 ns")
    c.add("hybrid_decay",
          abs(r.on_resonance_1e_time - 10e-9) <= 0.2 * 10e-9,
          f"{r.on_resonance_1e_time * 1e9:.2f} ns vs 10 +- 20%")
    c.finish()


def test_criterion_6_excess_population_estimator(device, calib, em):
    c = Checks(6)
    amps = np.linspace(0.25, 0.40, 7)
    for planted in (0.0, 0.003, 0.04):
        emp = em.without(excess_one_population=planted)
        analytic = ex.excess_population_curves(device, calib, emp, amps)
        ests = np.array([
            ex.excess_population_estimate(
                device, calib, emp, np.random.default_rng([17, k]),
                analytic=analytic).estimate
            for k in range(100)])
        sem = ests.std(ddof=1) / 10.0
        # tolerance: replication noise plus the stated systematic floor of
        # 0.05 percentage points from the dark-response slope
        tol = 3 * sem + 5e-4
        c.add(f"planted_{planted:g}", abs(ests.mean() - planted) <= tol,
              f"mean {ests.mean():.5f} vs {planted:g} +- {tol:.5f}")
    c.finish()


def test_criterion_7_phenomenological_fits(device, calib, em):
    c = Checks(7)
    rng = np.random.default_rng(2718)
    rr = ex.repetition_rate_sweep(device, calib, em, rng)
    c.add("recovery", abs(rr.fitted_tau - 13e-6) <= 0.1 * 13e-6,
          f"{rr.fitted_tau * 1e6:.2f} us vs 13 +- 10%")
    ct = ex.crosstalk_spin_echo(device, calib, em, rng)
    c.add("echo_no_reset", abs(ct.ratio_with_drive - 2.6) <= 0.1,
          f"{ct.ratio_with_drive:.2f} vs 2.6 +- 0.1")
    c.add("echo_with_reset", abs(ct.ratio_with_reset - 1.0) <= 0.05,
          f"{ct.ratio_with_reset:.2f} vs 1.00 +- 0.05")
    ba = ex.backaction_experiment(device, calib, em, rng)
    v = ba.visibilities
    ladder_ok = (abs(ba.tunneling_baseline - 0.80) < 0.02
                 and abs(v["resonator_reset"] - 0.30) <= 0.05
                 and abs(v["hide_bias"] - 0.75) <= 0.05
                 and abs((ba.fidelity_ideal - ba.fidelity_full) - 0.002)
                 <= 5e-4)
    c.add("backaction", ladder_ok,
          f"refill {ba.tunneling_baseline:.2f}, "
          f"vis {v['resonator_reset']:.2f}/{v['hide_bias']:.2f}, "
          f"drop {(ba.fidelity_ideal - ba.fidelity_full) * 100:.2f}%")
    c.finish()


def test_criterion_8_determinism_and_properties(device, tmp_path):
    c = Checks(8)
    for sub in ("a", "b"):
        main(["reproduce", "--seed", "21", "--out", str(tmp_path / sub),
              "--presets", "4d", "6b", "7c"])
    files = sorted((tmp_path / "a").glob("*.csv"))
    identical = all(f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
                    for f in files)
    c.add("byte_identical", identical and len(files) == 3,
          f"{len(files)} tables compared")

    rng = np.random.default_rng(99)
    mono_ok = True
    for _ in range(1000):
        rate = 10.0 ** rng.uniform(2, 10)
        t = 10.0 ** rng.uniform(-9, -7)
        scale = rng.uniform(1.0, 10.0)
        if jpm.escape_probability(rate, t * scale) < \
                jpm.escape_probability(rate, t) - 1e-15:
            mono_ok = False
            break
        if jpm.escape_probability(rate * scale, t) < \
                jpm.escape_probability(rate, t) - 1e-15:
            mono_ok = False
            break
    c.add("escape_monotone", mono_ok, "1000 randomized instances")

    order_ok = True
    for _ in range(1000):
        f_target = TWO_PI * rng.uniform(4.5e9, 7.2e9)
        de = jpm.flux_for_plasma(device, f_target)
        a_lo, a_hi = np.sort(rng.uniform(0.0, 1.0, size=2))
        n_lo, n_hi = np.sort(rng.uniform(0.0, 30.0, size=2))
        hi = float(jpm.click_probability(device, n_hi, a_hi, de))
        lo_n = float(jpm.click_probability(device, n_lo, a_hi, de))
        lo_a = float(jpm.click_probability(device, n_hi, a_lo, de))
        # probabilities saturate at 1 with ~1e-8 numerical noise near the
        # critical amplitude, so compare at 1e-6 resolution
        if hi < lo_n - 1e-6 or hi < lo_a - 1e-6:
            order_ok = False
            break
    c.add("s_curve_ordering", order_ok, "1000 randomized instances")
    c.finish()
