"""Device constants and closed-form derived quantities.

All frequencies are stored internally as angular frequencies (rad/s).
Config files use linear frequencies in natural lab units (GHz, MHz, ...)
and are converted at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import yaml

from .constants import PHI0, TWO_PI

INF = math.inf


class DeviceConfigError(ValueError):
    """Raised when a device config violates an invariant. Names the offending field."""


class StraddlingRegimeError(DeviceConfigError):
    """Dispersive formula unusable: detuning too small or Delta*(Delta+eta) ~ 0."""


@dataclass(frozen=True)
class DeviceParams:
    """Circuit constants for one qubit-resonator-JPM chain (angular units, SI)."""

    omega_r_bare: float      # bare readout resonator frequency (rad/s)
    omega_q_max: float       # qubit maximum transition frequency (rad/s)
    omega_q_op: float        # qubit operating-point frequency (rad/s)
    eta: float               # qubit anharmonicity (rad/s, negative)
    g_qr: float              # qubit-resonator coupling (rad/s)
    g_jr: float              # JPM-resonator coupling (rad/s)
    kappa_r: float           # resonator energy decay rate (1/s)
    T1_q: float              # qubit energy relaxation time (s)
    T1_j: float              # JPM energy relaxation time (s)
    L_j: float               # JPM loop inductance (H)
    C_j: float               # JPM shunt capacitance (F)
    I0_j: float              # JPM junction critical current (A)
    C_jr: float              # JPM readout reflection capacitance (F); metadata
    g_qq: float | None = None        # qubit-qubit coupling (rad/s), crosstalk input
    measured_two_chi: float | None = None  # optional measured |2 chi| override (rad/s)
    # Metadata constants: stored for config completeness, not consumed by dynamics.
    M_j: float = 0.0         # JPM bias mutual inductance (H)
    M_q: float = 0.0         # qubit bias mutual inductance (H)
    I0_q: float = 0.0        # transmon SQUID total critical current (A)
    C_xy: float = 0.0        # qubit excitation capacitance (F)

    def __post_init__(self):
        positive = [
            "omega_r_bare", "omega_q_max", "omega_q_op", "g_qr", "g_jr",
            "kappa_r", "T1_q", "T1_j", "L_j", "C_j", "I0_j", "C_jr",
        ]
        for name in positive:
            if not getattr(self, name) > 0:
                raise DeviceConfigError(f"{name} must be strictly positive")
        if not self.eta < 0:
            raise DeviceConfigError("eta must be strictly negative")
        if abs(self.omega_q_op - self.omega_r_bare) <= self.g_qr:
            raise StraddlingRegimeError(
                "omega_q_op violates the dispersive-regime guard "
                "|omega_q_op - omega_r_bare| > g_qr"
            )

    @property
    def delta_qr(self) -> float:
        """Qubit-resonator detuning at the operating point (rad/s)."""
        return self.omega_q_op - self.omega_r_bare


def derive_chi(p: DeviceParams, *, delta: float | None = None) -> float:
    """Dispersive shift chi = g^2 eta / (Delta (Delta + eta)), signed.

    For Delta < 0, eta < 0 this is negative, so 2chi = w_r|0> - w_r|1> > 0
    when reported as a magnitude.
    """
    d = p.delta_qr if delta is None else delta
    if abs(d) <= p.g_qr:
        raise StraddlingRegimeError("dispersive-regime guard violated")
    denom = d * (d + p.eta)
    if abs(denom) < 1e-6 * max(d * d, p.eta * p.eta):
        raise StraddlingRegimeError("Delta*(Delta+eta) within tolerance of zero")
    return p.g_qr ** 2 * p.eta / denom


def effective_chi(p: DeviceParams, *, delta: float | None = None) -> float:
    """Signed chi used by the measurement pipeline.

    If the config provides measured_two_chi, the formula value at the
    reference operating point is rescaled so |2 chi| matches the measured
    splitting there; the same scale factor is applied at other detunings.
    """
    chi = derive_chi(p, delta=delta)
    if p.measured_two_chi is None:
        return chi
    chi_ref = derive_chi(p)
    scale = (p.measured_two_chi / 2.0) / abs(chi_ref)
    return chi * scale


def dressed_resonator_freqs(p: DeviceParams) -> tuple[float, float]:
    """(omega_r|0>, omega_r|1>) dressed frequencies at the operating point."""
    chi = effective_chi(p)
    return p.omega_r_bare - chi, p.omega_r_bare + chi


def purcell_limit(p: DeviceParams, *, delta: float | None = None) -> float:
    """Purcell bound on qubit T1, Delta^2/(g^2 kappa_r); inf for g -> 0."""
    d = p.delta_qr if delta is None else delta
    if p.g_qr == 0 or p.kappa_r == 0:
        return INF
    return d ** 2 / (p.g_qr ** 2 * p.kappa_r)


def n_crit(p: DeviceParams, *, delta: float | None = None) -> float:
    """Critical photon number (Delta/g)^2 / 4."""
    d = p.delta_qr if delta is None else delta
    return (d / p.g_qr) ** 2 / 4.0


def beta_L(p: DeviceParams) -> float:
    """rf-SQUID screening parameter 2 pi L I0 / Phi0."""
    return TWO_PI * p.L_j * p.I0_j / PHI0


def has_double_well(p: DeviceParams) -> bool:
    return beta_L(p) > 1.0


@dataclass(frozen=True)
class DerivedQuantities:
    """Closed-form quantities derived from DeviceParams."""

    chi: float
    two_chi: float           # positive magnitude, w_r|0> - w_r|1>
    delta_qr: float
    n_crit: float
    purcell_T1: float
    beta_L: float
    double_well: bool
    swap_half_period: float  # pi / (2 g_jr)
    pi_over_chi: float


def derive_all(p: DeviceParams) -> DerivedQuantities:
    chi = effective_chi(p)
    return DerivedQuantities(
        chi=chi,
        two_chi=2.0 * abs(chi),
        delta_qr=p.delta_qr,
        n_crit=n_crit(p),
        purcell_T1=purcell_limit(p),
        beta_L=beta_L(p),
        double_well=has_double_well(p),
        swap_half_period=math.pi / (2.0 * p.g_jr),
        pi_over_chi=math.pi / abs(chi),
    )


# Config keys -> (DeviceParams field, multiplier to SI-angular).  Linear
# frequencies convert with 2*pi; times/rates/electrical values with plain
# unit prefixes.
_GHZ = TWO_PI * 1e9
_MHZ = TWO_PI * 1e6
_CONFIG_KEYS = {
    "f_r_ghz": ("omega_r_bare", _GHZ),
    "f_q_max_ghz": ("omega_q_max", _GHZ),
    "f_q_op_ghz": ("omega_q_op", _GHZ),
    "eta_mhz": ("eta", _MHZ),
    "g_qr_mhz": ("g_qr", _MHZ),
    "g_jr_mhz": ("g_jr", _MHZ),
    "g_qq_mhz": ("g_qq", _MHZ),
    "measured_two_chi_mhz": ("measured_two_chi", _MHZ),
    "kappa_r_decay_us": ("kappa_r", None),  # decay time in us -> rate
    "T1_q_us": ("T1_q", 1e-6),
    "T1_j_ns": ("T1_j", 1e-9),
    "L_j_nh": ("L_j", 1e-9),
    "C_j_pf": ("C_j", 1e-12),
    "I0_j_ua": ("I0_j", 1e-6),
    "C_jr_ff": ("C_jr", 1e-15),
    "M_j_ph": ("M_j", 1e-12),
    "M_q_ph": ("M_q", 1e-12),
    "I0_q_na": ("I0_q", 1e-9),
    "C_xy_af": ("C_xy", 1e-18),
}

_REQUIRED = [k for k, (f, _) in _CONFIG_KEYS.items()
             if f not in ("g_qq", "measured_two_chi", "M_j", "M_q", "I0_q", "C_xy")]


def params_from_dict(raw: dict) -> DeviceParams:
    """Build DeviceParams from a parsed config mapping, with field diagnostics."""
    if not isinstance(raw, dict):
        raise DeviceConfigError("device config must be a mapping")
    unknown = sorted(set(raw) - set(_CONFIG_KEYS))
    if unknown:
        raise DeviceConfigError(f"unknown device config key(s): {', '.join(unknown)}")
    missing = sorted(set(_REQUIRED) - set(raw))
    if missing:
        raise DeviceConfigError(f"missing device config key(s): {', '.join(missing)}")
    kwargs = {}
    for key, value in raw.items():
        fname, mult = _CONFIG_KEYS[key]
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise DeviceConfigError(f"{key}: not a number: {value!r}") from None
        if key == "kappa_r_decay_us":
            if value <= 0:
                raise DeviceConfigError("kappa_r_decay_us must be positive")
            kwargs[fname] = 1.0 / (value * 1e-6)
        else:
            kwargs[fname] = value * mult
    return DeviceParams(**kwargs)


def load_device(path) -> DeviceParams:
    """Load and validate a device config YAML file."""
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    return params_from_dict(raw)


def params_to_dict(p: DeviceParams) -> dict:
    """Inverse of params_from_dict (used for config hashing and export)."""
    out = {}
    for key, (fname, mult) in _CONFIG_KEYS.items():
        value = getattr(p, fname)
        if value is None:
            continue
        if key == "kappa_r_decay_us":
            out[key] = 1.0 / value / 1e-6
        else:
            out[key] = value / mult
    return out
