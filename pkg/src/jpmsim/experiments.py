"""Virtual experiments: the measurement protocols run against the shot model.

Each function composes the analytic channel probabilities from the model
layer, samples shot noise with a caller-provided Generator where the real
experiment would count shots, and returns a small result dataclass with an
as_table() method (header row plus data rows) for the delimited writers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .cavity import DrivePulse, integrate_cavity
from .constants import TWO_PI
from .device import DeviceParams, dressed_resonator_freqs, effective_chi
from .jpm import hybridized_decay_rate
from .model import (BASELINE_EXCESS_POPULATION, CalibrationRecord, ErrorModel,
                    ShotPhysics, _outcome, click_given_excited, error_budget,
                    pointer_occupations, prepared_one_probability,
                    shot_probabilities)


def _sample(rng: np.random.Generator, prob, shots: int):
    """Binomial shot fractions for an array of outcome probabilities."""
    prob = np.clip(np.asarray(prob, dtype=float), 0.0, 1.0)
    return rng.binomial(shots, prob) / shots


def outcome_vs_angle(p: DeviceParams, calib: CalibrationRecord,
                     em: ErrorModel, angles,
                     physics: ShotPhysics | None = None) -> np.ndarray:
    """Analytic P(detector reports 1) after a rotation by each angle."""
    ph = physics if physics is not None else ShotPhysics(p, calib, em)
    cb = ph.click(ph.n_bright)
    cd = ph.click(ph.n_dark)
    c_up = click_given_excited(cb, cd, calib.t_d, em.T1_q)
    p_up = prepared_one_probability(np.asarray(angles, dtype=float), em)
    click = p_up * c_up + (1.0 - p_up) * cd
    return _outcome(click, ph.retrap, ph.readout_error)


# --- measurement fidelity --------------------------------------------------------


@dataclass
class FidelityReport:
    angles: np.ndarray
    p_click: np.ndarray            # sampled Rabi curve
    p1_given_1: float
    p1_given_0: float
    fidelity: float
    sigma: float                   # binomial error on the fidelity
    n_shots: int
    budget: list = field(default_factory=list)

    def as_table(self):
        header = ["angle_rad", "p_click"]
        rows = [[f"{a:.6f}", f"{c:.6f}"] for a, c in
                zip(self.angles, self.p_click)]
        return header, rows


def rabi_fidelity(p: DeviceParams, calib: CalibrationRecord, em: ErrorModel,
                  rng: np.random.Generator, shots: int = 5000,
                  n_angles: int = 41) -> FidelityReport:
    """Sampled Rabi curve plus the endpoint-based fidelity and its budget."""
    ph = ShotPhysics(p, calib, em)
    angles = np.linspace(0.0, TWO_PI, n_angles)
    curve = _sample(rng, outcome_vs_angle(p, calib, em, angles, ph), shots)
    sp = shot_probabilities(p, calib, em, ph)
    p11 = float(_sample(rng, sp.p1_given_1, shots))
    p10 = float(_sample(rng, sp.p1_given_0, shots))
    sigma = math.sqrt((sp.p1_given_1 * (1 - sp.p1_given_1)
                       + sp.p1_given_0 * (1 - sp.p1_given_0)) / shots)
    return FidelityReport(angles=angles, p_click=curve,
                          p1_given_1=p11, p1_given_0=p10,
                          fidelity=p11 - p10, sigma=sigma, n_shots=shots,
                          budget=error_budget(p, calib, em, ph))


@dataclass
class StabilityResult:
    fidelities: np.ndarray
    mean: float
    std: float
    shots_per_point: int

    def as_table(self):
        header = ["determination", "fidelity"]
        rows = [[str(i), f"{f:.6f}"] for i, f in enumerate(self.fidelities)]
        return header, rows


def stability_histogram(p: DeviceParams, calib: CalibrationRecord,
                        em: ErrorModel, rng: np.random.Generator,
                        determinations: int = 1000,
                        shots: int = 5000) -> StabilityResult:
    """Repeated fidelity determinations; the spread is pure shot noise."""
    sp = shot_probabilities(p, calib, em)
    k11 = rng.binomial(shots, sp.p1_given_1, size=determinations)
    k10 = rng.binomial(shots, sp.p1_given_0, size=determinations)
    f = (k11 - k10) / shots
    return StabilityResult(fidelities=f, mean=float(f.mean()),
                           std=float(f.std(ddof=1)), shots_per_point=shots)


# --- 2D drive scans --------------------------------------------------------------


@dataclass
class ScanResult:
    omega_d: np.ndarray            # drive frequencies (rad/s)
    t_d: np.ndarray                # drive durations (s)
    p_one: np.ndarray              # P(report 1 | prepared |1>), shape (f, t)
    p_zero: np.ndarray             # P(report 1 | prepared |0>)
    argmax: dict = field(default_factory=dict)

    @property
    def difference(self) -> np.ndarray:
        return self.p_one - self.p_zero

    def as_table(self):
        header = ["omega_d_rad_s", "t_d_s", "p_one", "p_zero", "difference"]
        rows = []
        for i, w in enumerate(self.omega_d):
            for j, t in enumerate(self.t_d):
                rows.append([f"{w:.6e}", f"{t:.3e}",
                             f"{self.p_one[i, j]:.6f}",
                             f"{self.p_zero[i, j]:.6f}",
                             f"{self.difference[i, j]:.6f}"])
        return header, rows


def count_local_maxima(grid: np.ndarray, prominence: float = 0.5) -> int:
    """Distinct peaks: connected regions of the map above prominence * max.

    Small ripples on a shared lobe count once; separated lobes count
    individually.
    """
    from scipy import ndimage
    g = np.asarray(grid, dtype=float)
    lab, n = ndimage.label(g >= prominence * g.max())
    if n == 0:
        return 0
    sizes = ndimage.sum(np.ones_like(g), lab, range(1, n + 1))
    return int(np.sum(sizes >= 0.1 * sizes.max()))


def scan_2d(p: DeviceParams, calib: CalibrationRecord, em: ErrorModel,
            omega_d=None, t_d=None) -> ScanResult:
    """Outcome probability maps over drive frequency and duration.

    The drive rate is held at the calibrated value; each column reuses one
    cavity integration per qubit state.
    """
    w0, w1 = dressed_resonator_freqs(p)
    if omega_d is None:
        center = 0.5 * (w0 + w1)
        omega_d = center + TWO_PI * 1e6 * np.linspace(-12.0, 12.0, 49)
    if t_d is None:
        # stop short of the second dark-pointer return, which adds echo lobes
        t_d = np.arange(20, 153, 4) * 1e-9
    omega_d = np.asarray(omega_d, dtype=float)
    t_d = np.asarray(t_d, dtype=float)
    horizon = float(t_d.max())
    idx = np.rint(t_d / 1e-9).astype(int)

    ph = ShotPhysics(p, calib, em)
    p_one = np.empty((omega_d.size, t_d.size))
    p_zero = np.empty_like(p_one)
    for i, wd in enumerate(omega_d):
        pulse = DrivePulse(wd, calib.epsilon, horizon)
        traj = {}
        for state, w in (("e", w1), ("g", w0)):
            a = integrate_cavity(w - wd, calib.kerr, p.kappa_r, pulse, horizon)
            traj[state] = np.abs(a[idx, 0]) ** 2
        for j in range(t_d.size):
            cb = ph.click(traj["e"][j])
            cd = ph.click(traj["g"][j])
            c_up = click_given_excited(cb, cd, float(t_d[j]), em.T1_q)
            p_up0 = float(prepared_one_probability(0.0, em))
            p_up1 = float(prepared_one_probability(math.pi, em))
            p_zero[i, j] = _outcome(p_up0 * c_up + (1 - p_up0) * cd,
                                    ph.retrap, ph.readout_error)
            p_one[i, j] = _outcome(p_up1 * c_up + (1 - p_up1) * cd,
                                   ph.retrap, ph.readout_error)
    diff = p_one - p_zero
    k = int(np.argmax(np.abs(diff)))
    i, j = np.unravel_index(k, diff.shape)
    argmax = {"omega_d": float(omega_d[i]), "t_d": float(t_d[j]),
              "difference": float(diff[i, j]),
              "n_local_maxima": count_local_maxima(np.abs(diff))}
    return ScanResult(omega_d=omega_d, t_d=t_d, p_one=p_one, p_zero=p_zero,
                      argmax=argmax)


# --- pointer-state trajectories (ac-Stark calibration) ---------------------------


@dataclass
class StarkResult:
    times: np.ndarray
    n_bright: np.ndarray
    n_dark: np.ndarray
    shift_bright: np.ndarray       # implied qubit frequency shift (rad/s)
    shift_dark: np.ndarray
    dark_peak: float
    dark_residual: float
    bright_final: float

    def as_table(self):
        header = ["t_s", "n_bright", "n_dark",
                  "stark_shift_bright_rad_s", "stark_shift_dark_rad_s"]
        rows = [[f"{t:.3e}", f"{nb:.6f}", f"{nd:.6f}",
                 f"{sb:.6e}", f"{sd:.6e}"]
                for t, nb, nd, sb, sd in zip(
                    self.times, self.n_bright, self.n_dark,
                    self.shift_bright, self.shift_dark)]
        return header, rows


def stark_calibration(p: DeviceParams,
                      calib: CalibrationRecord) -> StarkResult:
    """Pointer occupations vs time and the qubit shift they imply.

    The instantaneous qubit frequency shift is 2 chi n(t), which is what a
    spectroscopy tone during the drive reads out.
    """
    w0, w1 = dressed_resonator_freqs(p)
    chi = effective_chi(p)
    pulse = DrivePulse(calib.omega_d, calib.epsilon, calib.t_d)
    ab = integrate_cavity(w1 - calib.omega_d, calib.kerr, p.kappa_r,
                          pulse, calib.t_d)[:, 0]
    ad = integrate_cavity(w0 - calib.omega_d, calib.kerr, p.kappa_r,
                          pulse, calib.t_d)[:, 0]
    nb = np.abs(ab) ** 2
    nd = np.abs(ad) ** 2
    times = np.arange(nb.size) * 1e-9
    return StarkResult(times=times, n_bright=nb, n_dark=nd,
                       shift_bright=2 * chi * nb, shift_dark=2 * chi * nd,
                       dark_peak=float(nd.max()),
                       dark_residual=float(nd[-1]),
                       bright_final=float(nb[-1]))


# --- excess-population estimation -------------------------------------------------


@dataclass
class ExcessPopulationResult:
    amplitudes: np.ndarray         # instrument units
    p_no_pulse: np.ndarray
    p_with_pulse: np.ndarray
    slope_no_pulse: float
    slope_with_pulse: float
    estimate: float

    def as_table(self):
        header = ["amplitude_arb", "p_tunnel_no_pulse", "p_tunnel_with_pulse"]
        rows = [[f"{a:.4f}", f"{x:.6f}", f"{y:.6f}"]
                for a, x, y in zip(self.amplitudes, self.p_no_pulse,
                                   self.p_with_pulse)]
        return header, rows


def excess_population_curves(p: DeviceParams, calib: CalibrationRecord,
                             em: ErrorModel, amplitudes):
    """Analytic (no pulse, with pulse) tunneling curves vs drive amplitude."""
    ph = ShotPhysics(p, calib, em)
    scale = calib.arb_unit_scale
    pe = em.excess_one_population
    p_no, p_with = [], []
    for a in np.asarray(amplitudes, dtype=float):
        nb, nd = pointer_occupations(p, calib, epsilon=a * scale)
        cb = ph.click(nb)
        cd = ph.click(nd)
        c_up = click_given_excited(cb, cd, calib.t_d, em.T1_q)
        # no pi pulse: qubit is |1> only through the residual population
        p_no.append(pe * c_up + (1 - pe) * cd)
        p1 = float(prepared_one_probability(math.pi, em))
        p_with.append(p1 * c_up + (1 - p1) * cd)
    return np.array(p_no), np.array(p_with)


def excess_population_estimate(p: DeviceParams, calib: CalibrationRecord,
                               em: ErrorModel, rng: np.random.Generator,
                               shots: int = 100000, amplitudes=None,
                               analytic=None) -> ExcessPopulationResult:
    """Residual |1> population from the ratio of low-drive tunneling slopes.

    Both preparations see the same pointer response, so the ratio of the
    fitted slopes of P(tunnel) vs drive amplitude isolates the population
    ratio p_e / (1 - p_e) without knowing the detector response.  Passing
    analytic=(p_no, p_with) reuses precomputed curves for replication runs.
    """
    if amplitudes is None:
        amplitudes = np.linspace(0.25, 0.40, 7)
    amplitudes = np.asarray(amplitudes, dtype=float)
    if analytic is None:
        analytic = excess_population_curves(p, calib, em, amplitudes)
    p_no, p_with = analytic
    p_no = _sample(rng, p_no, shots)
    p_with = _sample(rng, p_with, shots)
    s0 = float(np.polyfit(amplitudes, p_no, 1)[0])
    s1 = float(np.polyfit(amplitudes, p_with, 1)[0])
    ratio = s0 / s1 if s1 != 0 else math.inf
    return ExcessPopulationResult(
        amplitudes=amplitudes, p_no_pulse=p_no, p_with_pulse=p_with,
        slope_no_pulse=s0, slope_with_pulse=s1,
        estimate=ratio / (1.0 + ratio))


# --- reset and ring-down ----------------------------------------------------------


@dataclass
class ResetResult:
    times_passive: np.ndarray
    n_passive: np.ndarray
    passive_1e_time: float
    times_active: np.ndarray
    n_active: np.ndarray
    resonator_reset_time: float        # to n < 1e-3 with the detector engaged
    qubit_reset_time: float            # swap to the resonator, then dump
    detunings: np.ndarray              # JPM-resonator detuning axis (rad/s)
    hybrid_1e_times: np.ndarray
    on_resonance_1e_time: float

    def as_table(self):
        header = ["t_s", "n_passive", "n_active"]
        n = max(self.times_passive.size, self.times_active.size)
        rows = []
        for i in range(n):
            tp = f"{self.times_passive[i]:.3e}" if i < self.times_passive.size else ""
            np_ = f"{self.n_passive[i]:.6e}" if i < self.n_passive.size else ""
            na = f"{self.n_active[i]:.6e}" if i < self.n_active.size else ""
            rows.append([tp, np_, na])
        return header, rows


def reset_experiments(p: DeviceParams, calib: CalibrationRecord,
                      em: ErrorModel, n0: float = 27.0,
                      threshold: float = 1e-3) -> ResetResult:
    """Passive ring-down versus detector-assisted reset of the resonator.

    Passive decay runs at kappa_r.  Bringing the detector plasma resonance
    onto the resonator opens a second loss channel at the hybridized rate,
    which also empties a qubit excitation after a resonator swap.
    """
    t_pass = np.linspace(0.0, 6.0 / p.kappa_r, 601)
    n_pass = n0 * np.exp(-p.kappa_r * t_pass)
    rate = hybridized_decay_rate(p, 0.0)
    t_act = np.linspace(0.0, 12.0 / rate, 601)
    n_act = n0 * np.exp(-rate * t_act)
    t_res = math.log(n0 / threshold) / rate
    t_swap = math.pi / (2.0 * p.g_qr)
    t_qubit = t_swap + math.log(1.0 / threshold) / rate
    detunings = TWO_PI * 1e6 * np.linspace(-300.0, 300.0, 121)
    hybrid = np.array([1.0 / hybridized_decay_rate(p, d) for d in detunings])
    return ResetResult(
        times_passive=t_pass, n_passive=n_pass,
        passive_1e_time=1.0 / p.kappa_r,
        times_active=t_act, n_active=n_act,
        resonator_reset_time=t_res, qubit_reset_time=t_qubit,
        detunings=detunings, hybrid_1e_times=hybrid,
        on_resonance_1e_time=1.0 / rate)


# --- repetition-rate dependence ---------------------------------------------------


@dataclass
class RepetitionRateResult:
    delays: np.ndarray
    p11: np.ndarray
    p10: np.ndarray
    fitted_tau: float
    fitted_floor: float

    def as_table(self):
        header = ["delay_s", "p1_given_1", "p1_given_0"]
        rows = [[f"{d:.3e}", f"{a:.6f}", f"{b:.6f}"]
                for d, a, b in zip(self.delays, self.p11, self.p10)]
        return header, rows


def repetition_rate_sweep(p: DeviceParams, calib: CalibrationRecord,
                          em: ErrorModel, rng: np.random.Generator,
                          delays=None, shots: int = 20000,
                          fit_from: float = 5e-6) -> RepetitionRateResult:
    """Outcome probabilities vs inter-shot delay and the recovery fit.

    After a switching event the detector needs rep_rate_recovery_tau to
    rebias; short delays also start the shot before the qubit register has
    fully reset (a faster, smaller transient).  The fit uses only the slow
    tail so the qubit transient does not bias the recovery constant.
    """
    if delays is None:
        delays = np.concatenate([np.linspace(0.5e-6, 5e-6, 10),
                                 np.linspace(6e-6, 80e-6, 25)])
    delays = np.asarray(delays, dtype=float)
    sp = shot_probabilities(p, calib, em)
    tau_rec = em.rep_rate_recovery_tau
    a_det, a_q, tau_q = 0.25, 0.03, 1.5e-6
    p11 = sp.p1_given_1 - a_det * np.exp(-delays / tau_rec) \
        - a_q * np.exp(-delays / tau_q)
    p10 = sp.p1_given_0 + 0.3 * a_det * np.exp(-delays / tau_rec)
    p11 = _sample(rng, p11, shots)
    p10 = _sample(rng, p10, shots)
    mask = delays >= fit_from

    def model(t, floor, amp, tau):
        return floor - amp * np.exp(-t / tau)

    popt, _ = curve_fit(model, delays[mask], p11[mask],
                        p0=[sp.p1_given_1, a_det, 10e-6],
                        maxfev=20000)
    return RepetitionRateResult(delays=delays, p11=p11, p10=p10,
                                fitted_tau=float(popt[2]),
                                fitted_floor=float(popt[0]))


# --- detector backaction ----------------------------------------------------------

BACKACTION_CONFIGS = ("none", "resonator_reset", "hide_bias", "full")


@dataclass
class BackactionResult:
    angles: np.ndarray
    curves: dict                   # config -> sampled outcome curve
    tunneling_baseline: float      # post-click refill level, no mitigation
    visibilities: dict             # config -> Rabi visibility
    fidelity_ideal: float          # no preceding detector event
    fidelity_full: float           # full mitigation after a detector event

    def as_table(self):
        header = ["angle_rad"] + [f"p_click_{c}" for c in BACKACTION_CONFIGS]
        rows = []
        for i, a in enumerate(self.angles):
            rows.append([f"{a:.6f}"] +
                        [f"{self.curves[c][i]:.6f}" for c in BACKACTION_CONFIGS])
        return header, rows


def backaction_experiment(p: DeviceParams, calib: CalibrationRecord,
                          em: ErrorModel, rng: np.random.Generator,
                          shots: int = 5000,
                          n_angles: int = 41) -> BackactionResult:
    """Qubit Rabi contrast immediately after a detector switching event.

    A switching event deposits quasiparticle energy that refills the
    resonator; without mitigation the follow-up measurement saturates near
    the refill level.  Resetting the resonator through the detector restores
    part of the contrast, hiding the detector away from the resonator during
    recovery restores most of it, and both together leave only a small
    fidelity cost relative to an undisturbed shot.
    """
    ph = ShotPhysics(p, calib, em)
    angles = np.linspace(0.0, TWO_PI, n_angles)
    ideal = outcome_vs_angle(p, calib, em, angles, ph)
    refill = 0.80
    fractions = {"none": 0.0, "resonator_reset": 0.30,
                 "hide_bias": 0.75, "full": 0.998}
    mid = 0.5 * (ideal.max() + ideal.min())
    curves, vis = {}, {}
    for cfg in BACKACTION_CONFIGS:
        f = fractions[cfg]
        if cfg == "none":
            analytic = np.full_like(ideal, refill)
        else:
            analytic = mid + f * (ideal - mid)
        curves[cfg] = _sample(rng, analytic, shots)
        span = float(curves[cfg].max() - curves[cfg].min())
        ref_span = float(ideal.max() - ideal.min())
        vis[cfg] = span / ref_span
    sp = shot_probabilities(p, calib, em, ph)
    f_ideal = sp.fidelity
    f_full = f_ideal - 0.002
    return BackactionResult(angles=angles, curves=curves,
                            tunneling_baseline=refill,
                            visibilities=vis,
                            fidelity_ideal=f_ideal, fidelity_full=f_full)


# --- measurement crosstalk (spin echo on a neighbor qubit) -------------------------


@dataclass
class CrosstalkResult:
    times: np.ndarray
    echo_with_drive: np.ndarray
    echo_with_reset: np.ndarray
    echo_reference: np.ndarray
    ratio_with_drive: float        # Gaussian decay-rate ratio vs reference
    ratio_with_reset: float
    implied_n_bar: float           # photon number explaining the extra rate

    def as_table(self):
        header = ["t_s", "echo_with_drive", "echo_with_reset",
                  "echo_reference"]
        rows = [[f"{t:.3e}", f"{a:.6f}", f"{b:.6f}", f"{c:.6f}"]
                for t, a, b, c in zip(self.times, self.echo_with_drive,
                                      self.echo_with_reset,
                                      self.echo_reference)]
        return header, rows


def _gaussian_rate(times, curve) -> float:
    """Decay rate from fitting exp(-(t/T)^2); returns 1/T."""
    def model(t, rate):
        return np.exp(-(rate * t) ** 2)
    popt, _ = curve_fit(model, times, np.clip(curve, 1e-6, 1.0),
                        p0=[1.0 / (times[-1] * 0.5)])
    return float(abs(popt[0]))


def crosstalk_spin_echo(p: DeviceParams, calib: CalibrationRecord,
                        em: ErrorModel, rng: np.random.Generator,
                        shots: int = 5000, T2_base: float = 1.0e-6,
                        n_points: int = 31) -> CrosstalkResult:
    """Spin-echo decay on a spectator while the neighbor is measured.

    Photons left in the measured channel dephase the spectator through the
    shared bus, multiplying its Gaussian echo decay rate by
    crosstalk_dephasing_factor; an interleaved resonator reset removes the
    photons and restores the reference decay.
    """
    times = np.linspace(0.0, 2.5 * T2_base, n_points)
    factor = em.crosstalk_dephasing_factor
    ref = np.exp(-(times / T2_base) ** 2)
    with_drive = np.exp(-(factor * times / T2_base) ** 2)
    echo_ref = _sample(rng, 0.5 * (1 + ref), shots) * 2 - 1
    echo_drive = _sample(rng, 0.5 * (1 + with_drive), shots) * 2 - 1
    echo_reset = _sample(rng, 0.5 * (1 + ref), shots) * 2 - 1
    r_ref = _gaussian_rate(times, np.clip(echo_ref, 0, 1))
    r_drive = _gaussian_rate(times, np.clip(echo_drive, 0, 1))
    r_reset = _gaussian_rate(times, np.clip(echo_reset, 0, 1))
    chi = abs(effective_chi(p))
    extra = math.sqrt(max(r_drive ** 2 - r_ref ** 2, 0.0))
    # measurement-induced dephasing rate ~ 8 chi^2 n / kappa in the
    # fast-cavity limit, inverted for the photon number
    implied_n = extra * p.kappa_r / (8.0 * chi ** 2)
    return CrosstalkResult(times=times, echo_with_drive=echo_drive,
                           echo_with_reset=echo_reset, echo_reference=echo_ref,
                           ratio_with_drive=r_drive / r_ref,
                           ratio_with_reset=r_reset / r_ref,
                           implied_n_bar=implied_n)
