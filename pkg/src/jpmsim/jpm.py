"""rf-SQUID phase detector: potential landscape, photon absorption, tunneling.

The detector is a single junction (critical current I0) in a superconducting
loop (inductance L) shunted by a capacitance C.  In units of the inductive
energy E_L = (Phi0 / 2 pi)^2 / L the potential over the junction phase is

    u(delta) = (delta - delta_e)^2 / 2 - beta cos(delta),    beta = 2 pi L I0 / Phi0

where delta_e is the externally applied flux in phase units (2 pi Phi/Phi0).
For beta > 1 the potential is multistable.  Measurement biases the device so
the active (shallow) well's small-oscillation frequency matches the readout
cavity; absorbed photons climb the intrawell ladder, and a subsequent fast
flux pulse toward the critical bias converts the excitation into an escape
event by macroscopic quantum tunneling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .constants import HBAR, PHI0_BAR, TWO_PI
from .device import DeviceParams, beta_L

# Cubic-barrier WKB exponent, Gamma = (omega_p / 2 pi) exp(-7.2 dU / hbar omega_p)
MQT_EXPONENT = 7.2

DEFAULT_PHOTODETECT_TIME = 5e-9
DEFAULT_TUNNEL_TIME = 10e-9  # assumed value, overridable in the calibration record
RETRAP_BASE = 0.05
RETRAP_TAU = 7e-9

_ROOT_TOL = 1e-12  # |du/ddelta| tolerance at reported extrema (E_L per radian)


def energy_scales(p: DeviceParams) -> tuple[float, float]:
    """(E_L in joules, omega_LC in rad/s) for the detector loop."""
    e_l = PHI0_BAR ** 2 / p.L_j
    omega_lc = 1.0 / math.sqrt(p.L_j * p.C_j)
    return e_l, omega_lc


def potential_u(delta, delta_e: float, beta: float):
    """Loop potential in E_L units."""
    delta = np.asarray(delta, dtype=float)
    return 0.5 * (delta - delta_e) ** 2 - beta * np.cos(delta)


def potential_curvature(delta, beta: float):
    """d^2 u / d delta^2 (dimensionless)."""
    return 1.0 + beta * np.cos(np.asarray(delta, dtype=float))


def critical_phase(beta: float) -> float:
    """Phase where the well curvature first vanishes, arccos(-1/beta)."""
    if beta <= 1.0:
        raise ValueError("no critical phase for beta <= 1 (single well)")
    return math.acos(-1.0 / beta)


def critical_bias(p: DeviceParams) -> float:
    """Flux bias delta_e at which the active well merges with its saddle."""
    beta = beta_L(p)
    dc = critical_phase(beta)
    return dc + beta * math.sin(dc)


@dataclass(frozen=True)
class Well:
    """One metastable well of the loop potential."""

    delta_min: float         # phase at the minimum
    delta_saddle: float      # phase at the adjacent saddle toward escape
    barrier: float           # dU in joules
    omega_p: float           # small-oscillation (plasma) frequency, rad/s
    n_bound: float           # barrier / (hbar omega_p), harmonic level count

    @property
    def barrier_ratio(self) -> float:
        """dU / (hbar omega_p), the dimensionless tunneling exponent argument."""
        return self.barrier / (HBAR * self.omega_p)


@dataclass(frozen=True)
class PotentialLandscape:
    delta_e: float
    beta: float
    minima: tuple
    saddles: tuple
    active: Well | None      # shallowest well, None when monostable


def _extrema(delta_e: float, beta: float):
    """All roots of u'(delta) = delta - delta_e + beta sin(delta), classified.

    Returns (minima, saddles) as sorted lists of phases.  Roots are bracketed
    on a fine grid over the reachable phase interval and polished with brentq
    until |u'| < 1e-12.
    """
    def du(d):
        return d - delta_e + beta * math.sin(d)

    lo, hi = delta_e - beta - 1.0, delta_e + beta + 1.0
    grid = np.linspace(lo, hi, 4001)
    vals = grid - delta_e + beta * np.sin(grid)
    minima, saddles = [], []
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            root = grid[i]
        elif a * b < 0:
            root = brentq(du, grid[i], grid[i + 1], xtol=1e-14)
        else:
            continue
        if abs(du(root)) > _ROOT_TOL:
            root = brentq(du, root - 1e-6, root + 1e-6, xtol=1e-15)
        curv = 1.0 + beta * math.cos(root)
        if curv > 0:
            minima.append(root)
        elif curv < 0:
            saddles.append(root)
    return sorted(minima), sorted(saddles)


def landscape(p: DeviceParams, delta_e: float) -> PotentialLandscape:
    """Classified potential landscape at bias delta_e.

    The active well is the metastable well continuously connected from zero
    phase (the smallest-|delta| minimum); its escape path runs over the
    adjacent saddle toward the deep well.  active is None when the bias has
    collapsed that well (monostable).
    """
    beta = beta_L(p)
    e_l, omega_lc = energy_scales(p)
    minima, saddles = _extrema(delta_e, beta)
    active = None
    # the metastable well sits below the critical phase; past the critical
    # bias it has merged with its saddle and only deep wells remain
    shallow = [m for m in minima if abs(m) < critical_phase(beta)]
    if shallow and len(minima) > 1 and saddles:
        m = min(shallow, key=abs)
        above = [s for s in saddles if s > m]
        below = [s for s in saddles if s < m]
        s = min(above) if above else max(below)
        du_el = float(potential_u(s, delta_e, beta) - potential_u(m, delta_e, beta))
        if du_el >= 0:
            omega_p = omega_lc * math.sqrt(1.0 + beta * math.cos(m))
            barrier = du_el * e_l
            active = Well(delta_min=m, delta_saddle=s, barrier=barrier,
                          omega_p=omega_p, n_bound=barrier / (HBAR * omega_p))
    return PotentialLandscape(delta_e=delta_e, beta=beta,
                              minima=tuple(minima), saddles=tuple(saddles),
                              active=active)


def plasma_frequency(p: DeviceParams, delta_min: float) -> float:
    """Small-oscillation frequency at a potential minimum (rad/s)."""
    _, omega_lc = energy_scales(p)
    curv = 1.0 + beta_L(p) * math.cos(delta_min)
    if curv <= 0:
        raise ValueError("not a minimum: curvature is nonpositive")
    return omega_lc * math.sqrt(curv)


def max_plasma_frequency(p: DeviceParams) -> float:
    """Plasma frequency at delta = 0 (deepest possible well)."""
    _, omega_lc = energy_scales(p)
    return omega_lc * math.sqrt(1.0 + beta_L(p))


def flux_for_plasma(p: DeviceParams, omega_target: float) -> float:
    """Bias delta_e placing the active well's plasma frequency at omega_target.

    Solves on the active-well branch delta_min in (0, critical phase): the
    branch where the well gets shallower as the bias grows.
    """
    beta = beta_L(p)
    _, omega_lc = energy_scales(p)
    ratio = (omega_target / omega_lc) ** 2 - 1.0
    if not (-1.0 < ratio / beta < 1.0):
        raise ValueError(
            f"plasma target {omega_target / TWO_PI / 1e9:.3f} GHz outside "
            "the reachable range"
        )
    d_min = math.acos(ratio / beta)
    return d_min + beta * math.sin(d_min)


def escape_rate(p: DeviceParams, well: Well, excitation_energy: float = 0.0) -> float:
    """MQT escape rate out of a well, barrier reduced by the excitation energy."""
    du = max(well.barrier - excitation_energy, 0.0)
    return (well.omega_p / TWO_PI) * math.exp(
        -MQT_EXPONENT * du / (HBAR * well.omega_p))


def escape_probability(rate, duration: float):
    """P(escape) = 1 - exp(-rate * duration); rate may be an array."""
    return 1.0 - np.exp(-np.asarray(rate) * duration)


# --- photon absorption -------------------------------------------------------

def photodetect_efficiency(p: DeviceParams, t: float) -> float:
    """Fraction of cavity energy transferred after a swap window of length t.

    Resonant vacuum-Rabi transfer at rate g_jr, degraded by intrawell decay:
    eta(t) = sin^2(g_jr t) exp(-t / T1_j).
    """
    return math.sin(p.g_jr * t) ** 2 * math.exp(-t / p.T1_j)


def optimal_photodetect_time(p: DeviceParams) -> float:
    """Argmax of the damped transfer window, tan(g t) = 2 g T1_j."""
    return math.atan(2.0 * p.g_jr * p.T1_j) / p.g_jr


def photodetect_energy(p: DeviceParams, n_bar: float, t: float) -> float:
    """Mean energy (J) deposited in the detector from n_bar cavity photons."""
    return HBAR * p.omega_r_bare * n_bar * photodetect_efficiency(p, t)


# --- composite click probability --------------------------------------------

def tunnel_bias(p: DeviceParams, amplitude, delta_e_pd: float):
    """Flux bias reached by a tunnel pulse of given amplitude (0..1).

    amplitude = 0 holds the photodetection bias; amplitude = 1 reaches the
    critical bias where the active well vanishes.
    """
    a = np.asarray(amplitude, dtype=float)
    if np.any(a < 0) or np.any(a > 1):
        raise ValueError("tunnel pulse amplitude must lie in [0, 1]")
    return delta_e_pd + a * (critical_bias(p) - delta_e_pd)


def click_probability(p: DeviceParams, n_bar, amplitude: float,
                      delta_e_pd: float,
                      t_pd: float = DEFAULT_PHOTODETECT_TIME,
                      t_b: float = DEFAULT_TUNNEL_TIME):
    """Probability that the detector switches, given n_bar cavity photons.

    Absorption during the photodetection window is Poissonian with mean
    eta(t_pd) * n_bar intrawell quanta, each carrying hbar omega_r.  The
    tunnel pulse then tilts the potential to the bias set by amplitude; each
    quantum of stored energy cuts the escape barrier and the switch fires
    with 1 - exp(-Gamma t_b).  Vectorized over n_bar.
    """
    n_bar = np.atleast_1d(np.asarray(n_bar, dtype=float))
    land = landscape(p, float(tunnel_bias(p, amplitude, delta_e_pd)))
    if land.active is None:
        ones = np.ones_like(n_bar)
        return ones if ones.size > 1 else 1.0
    well = land.active
    lam = photodetect_efficiency(p, t_pd) * n_bar
    quantum = HBAR * p.omega_r_bare
    k_max = int(np.ceil(lam.max() + 10.0 * math.sqrt(lam.max() + 1.0))) + 1
    ks = np.arange(k_max + 1)
    surv_k = np.array([
        math.exp(-escape_rate(p, well, k * quantum) * t_b) for k in ks
    ])
    # Poisson pmf over k for each n_bar, log-space for stability at large lam
    with np.errstate(divide="ignore"):
        log_pmf = (ks[None, :] * np.log(np.maximum(lam[:, None], 1e-300))
                   - lam[:, None]
                   - np.array([math.lgamma(k + 1) for k in ks])[None, :])
    pmf = np.exp(log_pmf)
    pmf[lam == 0.0, :] = 0.0
    pmf[lam == 0.0, 0] = 1.0
    survival = pmf @ surv_k
    result = 1.0 - survival
    return result if result.size > 1 else float(result[0])


def dark_click_probability(p: DeviceParams, amplitude: float, delta_e_pd: float,
                           t_b: float = DEFAULT_TUNNEL_TIME) -> float:
    """Switch probability with an empty cavity (bare barrier tunneling)."""
    land = landscape(p, float(tunnel_bias(p, amplitude, delta_e_pd)))
    if land.active is None:
        return 1.0
    return float(escape_probability(escape_rate(p, land.active), t_b))


# --- after the switch ---------------------------------------------------------

def retrap_probability(hold_time: float) -> float:
    """Probability the phase falls back into the original well after a switch.

    Empirical model: decays exponentially with the hold time spent at the
    post-switch bias before classification.
    """
    if hold_time < 0:
        raise ValueError("hold_time must be nonnegative")
    return RETRAP_BASE * math.exp(-hold_time / RETRAP_TAU)


def readout_misassignment(snr: float) -> float:
    """Probability of misclassifying the loop flux state at a given SNR.

    Two Gaussian pointer distributions separated by snr standard deviations:
    P(err) = Q(snr / 2).
    """
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    return 0.5 * erfc(snr / (2.0 * math.sqrt(2.0)))


def hybridized_decay_rate(p: DeviceParams, detuning: float) -> float:
    """Cavity energy decay rate with the detector plasma mode nearby (1/s).

    detuning is omega_p - omega_r.  On resonance the cavity-like hybrid mode
    decays at the average of the two bare rates; far away it recovers kappa_r
    plus the usual inverse-square tail.
    """
    gamma_j = 1.0 / p.T1_j
    x = abs(detuning) / math.hypot(detuning, 2.0 * p.g_jr)
    return p.kappa_r + 0.5 * (gamma_j - p.kappa_r) * (1.0 - x)


def potential_csv_rows(p: DeviceParams, delta_e: float, n_points: int = 401):
    """Rows (delta, u_in_EL) over the interesting phase interval."""
    beta = beta_L(p)
    deltas = np.linspace(delta_e - beta - 1.0, delta_e + beta + 1.0, n_points)
    u = potential_u(deltas, delta_e, beta)
    for d, ui in zip(deltas, u):
        yield (d, ui)
