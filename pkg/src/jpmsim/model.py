"""Composable measurement model: error channels, shot probabilities, budget.

This sits between the physics modules (cavity, detector) and the experiment
drivers.  Everything here is analytic in the channel probabilities; sampling
happens in the experiment layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cavity import DEFAULT_KERR, DrivePulse, integrate_cavity
from .device import DeviceParams, dressed_resonator_freqs
from .jpm import (DEFAULT_PHOTODETECT_TIME, DEFAULT_TUNNEL_TIME,
                  click_probability, flux_for_plasma, readout_misassignment,
                  retrap_probability)

ARB_UNIT_REFERENCE = 0.885   # optimal drive amplitude in instrument units


@dataclass(frozen=True)
class ErrorModel:
    """Scalar error-channel rates and phenomenological time constants."""

    excess_one_population: float = 0.003   # residual |1> after active reset
    gate_error: float = 0.001              # scalar X-gate flip probability
    T1_q: float = 16.9e-6
    rep_rate_recovery_tau: float = 13e-6   # detector recovery constant
    crosstalk_dephasing_factor: float = 2.6
    backaction_photons: float = 100.0
    readout_snr: float = 8.0
    hold_time: float = 30e-9               # relax hold before flux readout
    target_dark_count: float = 0.006
    ideal_detector: bool = False           # threshold detector, no dark counts

    def __post_init__(self):
        for name in ("excess_one_population", "gate_error", "target_dark_count"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v}")

    def without(self, **overrides) -> "ErrorModel":
        return replace(self, **overrides)


BASELINE_EXCESS_POPULATION = 0.04   # thermal value without active reset


@dataclass
class CalibrationRecord:
    """Operating point consumed by the sequencer and the experiments."""

    omega_d: float = None          # pointer drive frequency (rad/s)
    t_d: float = None              # pointer drive duration (s)
    epsilon: float = None          # pointer drive rate (rad/s)
    tunnel_amplitude: float = None # tunnel pulse amplitude, 0..1
    readout_snr: float = 8.0
    delta_e_pd: float = None       # photodetection flux bias (phase units)
    kerr: float = DEFAULT_KERR
    t_pd: float = DEFAULT_PHOTODETECT_TIME
    t_b: float = DEFAULT_TUNNEL_TIME
    provenance: list = field(default_factory=list)

    REQUIRED = ("omega_d", "t_d", "epsilon", "tunnel_amplitude", "delta_e_pd")

    def missing_fields(self):
        return [f for f in self.REQUIRED if getattr(self, f) is None]

    def validate(self):
        missing = self.missing_fields()
        if missing:
            raise ValueError("incomplete calibration: " + ", ".join(missing))
        if not 10e-9 <= self.t_d <= 1e-6:
            raise ValueError("t_d outside [10 ns, 1 us]")

    @property
    def arb_unit_scale(self) -> float:
        """rad/s per instrument amplitude unit."""
        return self.epsilon / ARB_UNIT_REFERENCE


def pointer_occupations(p: DeviceParams, calib: CalibrationRecord,
                        epsilon: float | None = None):
    """(n_bright, n_dark) cavity occupations at the end of the drive."""
    w0, w1 = dressed_resonator_freqs(p)
    eps = calib.epsilon if epsilon is None else epsilon
    pulse = DrivePulse(calib.omega_d, eps, calib.t_d)
    nb = abs(integrate_cavity(w1 - calib.omega_d, calib.kerr, p.kappa_r,
                              pulse, calib.t_d)[-1, 0]) ** 2
    nd = abs(integrate_cavity(w0 - calib.omega_d, calib.kerr, p.kappa_r,
                              pulse, calib.t_d)[-1, 0]) ** 2
    return float(nb), float(nd)


class ShotPhysics:
    """Precomputed detector response at one operating point.

    Caches the potential landscape behind click_probability so the per-shot
    cost is a couple of exponentials.
    """

    def __init__(self, p: DeviceParams, calib: CalibrationRecord,
                 em: ErrorModel):
        calib.validate()
        self.params = p
        self.calib = calib
        self.em = em
        self.n_bright, self.n_dark = pointer_occupations(p, calib)
        self.retrap = retrap_probability(em.hold_time)
        self.readout_error = readout_misassignment(em.readout_snr)
        self._ideal = em.ideal_detector

    def click(self, n_bar) -> float:
        if self._ideal:
            return float(np.asarray(n_bar) >= 1.0)
        return float(click_probability(
            self.params, n_bar, self.calib.tunnel_amplitude,
            self.calib.delta_e_pd, t_pd=self.calib.t_pd, t_b=self.calib.t_b))


def click_given_excited(click_b: float, click_d: float, t_d: float,
                        T1: float) -> float:
    """Mean click probability for a qubit that enters the drive in |1>.

    Decay at time tau yields the bright pointer with probability tau/t_d;
    averaging over the exponential decay time gives a closed form.
    """
    if not math.isfinite(T1):
        return click_b
    r = t_d / T1
    # e^-r survival plus the decay integral collapses to (1 - e^-r)/r,
    # which expands to 1 - t_d/(2 T1) for short drives
    bright_weight = (1.0 - math.exp(-r)) / r
    return bright_weight * click_b + (1.0 - bright_weight) * click_d


def prepared_one_probability(theta, em: ErrorModel):
    """P(qubit in |1> after thermal init and a rotation by theta).

    The gate error is a flip with probability gate_error * theta / pi.
    """
    theta = np.asarray(theta, dtype=float)
    pe = em.excess_one_population
    q = (1.0 - pe) * np.sin(theta / 2.0) ** 2 + pe * np.cos(theta / 2.0) ** 2
    flip = em.gate_error * theta / math.pi
    return q * (1.0 - flip) + (1.0 - q) * flip


@dataclass(frozen=True)
class ShotProbabilities:
    p1_given_0: float
    p1_given_1: float
    click_bright: float
    click_dark: float
    n_bright: float
    n_dark: float

    @property
    def fidelity(self) -> float:
        return self.p1_given_1 - self.p1_given_0


def _outcome(click: float, retrap: float, q: float) -> float:
    kept = click * (1.0 - retrap)
    return kept * (1.0 - q) + (1.0 - kept) * q


def shot_probabilities(p: DeviceParams, calib: CalibrationRecord,
                       em: ErrorModel,
                       physics: ShotPhysics | None = None) -> ShotProbabilities:
    """Analytic outcome probabilities for prepared |0> and |1> (X gate)."""
    ph = physics if physics is not None else ShotPhysics(p, calib, em)
    cb = ph.click(ph.n_bright)
    cd = ph.click(ph.n_dark)
    c_up = click_given_excited(cb, cd, calib.t_d, em.T1_q)
    p_up0 = float(prepared_one_probability(0.0, em))
    p_up1 = float(prepared_one_probability(math.pi, em))
    click0 = p_up0 * c_up + (1.0 - p_up0) * cd
    click1 = p_up1 * c_up + (1.0 - p_up1) * cd
    q = ph.readout_error
    return ShotProbabilities(
        p1_given_0=_outcome(click0, ph.retrap, q),
        p1_given_1=_outcome(click1, ph.retrap, q),
        click_bright=cb, click_dark=cd,
        n_bright=ph.n_bright, n_dark=ph.n_dark)


BUDGET_ORDER = (
    ("imperfect dark pointer", "dark"),
    ("excess |1> population", "excess"),
    ("qubit relaxation", "relax"),
    ("X gate", "gate"),
    ("bright-pointer miss", "miss"),
    ("retrapping", "retrap"),
    ("flux readout", "readout"),
)


def error_budget(p: DeviceParams, calib: CalibrationRecord, em: ErrorModel,
                 physics: ShotPhysics | None = None):
    """Per-channel infidelity lines that sum exactly to 1 - F.

    Channels are enabled cumulatively in a fixed order; each line is the
    fidelity drop from adding that channel.
    """
    ph = physics if physics is not None else ShotPhysics(p, calib, em)
    cb = ph.click(ph.n_bright)
    cd = ph.click(ph.n_dark)
    q = ph.readout_error
    retrap = ph.retrap

    def fidelity(on):
        cd_ = cd if "dark" in on else 0.0
        cb_ = cb if "miss" in on else 1.0
        pe = em.excess_one_population if "excess" in on else 0.0
        ge = em.gate_error if "gate" in on else 0.0
        T1 = em.T1_q if "relax" in on else math.inf
        rt = retrap if "retrap" in on else 0.0
        q_ = q if "readout" in on else 0.0
        em_ = em.without(excess_one_population=pe, gate_error=ge, T1_q=T1)
        c_up = click_given_excited(cb_, cd_, calib.t_d, T1)
        p_up0 = float(prepared_one_probability(0.0, em_))
        p_up1 = float(prepared_one_probability(math.pi, em_))
        click0 = p_up0 * c_up + (1.0 - p_up0) * cd_
        click1 = p_up1 * c_up + (1.0 - p_up1) * cd_
        return _outcome(click1, rt, q_) - _outcome(click0, rt, q_)

    lines = []
    on = set()
    f_prev = fidelity(on)
    for label, key in BUDGET_ORDER:
        on.add(key)
        f_now = fidelity(on)
        lines.append((label, f_prev - f_now))
        f_prev = f_now
    return lines
