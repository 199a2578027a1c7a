"""Named report presets: each produces one table and one figure.

Preset ids match the report layout of the accompanying writeup: detector
potential and plasma band, switching curves, pointer trajectories, drive
scans, fidelity and stability, reset, residual population, repetition rate,
backaction, and crosstalk.
"""

from __future__ import annotations

import numpy as np

from . import experiments as ex
from .calibrate import s_curves
from .constants import TWO_PI
from .device import DeviceParams, beta_L
from .jpm import (critical_bias, flux_for_plasma, landscape,
                  plasma_frequency, potential_csv_rows)
from .model import CalibrationRecord, ErrorModel


def _potential(p, calib, em, rng, shots):
    rows = [[f"{d:.6f}", f"{u:.8f}"]
            for d, u in potential_csv_rows(p, calib.delta_e_pd)]
    land = landscape(p, calib.delta_e_pd)
    summary = {"barrier_J": land.active.barrier,
               "n_bound": land.active.n_bound,
               "omega_p_GHz": land.active.omega_p / TWO_PI / 1e9}
    return ["delta_rad", "u_EL"], rows, summary


def _plasma_band(p, calib, em, rng, shots):
    dcrit = critical_bias(p)
    biases = np.linspace(0.0, dcrit * 0.999, 201)
    rows = []
    for de in biases:
        land = landscape(p, de)
        rows.append([f"{de:.6f}",
                     f"{land.active.omega_p / TWO_PI / 1e9:.6f}"])
    summary = {"beta_L": beta_L(p), "critical_bias": dcrit}
    return ["delta_e_rad", "omega_p_GHz"], rows, summary


def _s_curves(p, calib, em, rng, shots):
    amps = np.linspace(0.0, 1.0, 201)
    curves = s_curves(p, calib.delta_e_pd, 27.0, amps, t_b=calib.t_b)
    rows = [[f"{a:.4f}", f"{d:.6f}", f"{b:.6f}"]
            for a, d, b in zip(amps, curves.p_dark, curves.p_bright)]
    summary = {"tunnel_amplitude": calib.tunnel_amplitude,
               "max_contrast": float(np.max(curves.contrast))}
    return ["amplitude_arb", "p_dark", "p_bright"], rows, summary


def _stark(p, calib, em, rng, shots):
    r = ex.stark_calibration(p, calib)
    h, rows = r.as_table()
    return h, rows, {"dark_peak": r.dark_peak,
                     "dark_residual": r.dark_residual,
                     "bright_final": r.bright_final}


def _scan(p, calib, em, rng, shots):
    r = ex.scan_2d(p, calib, em)
    h, rows = r.as_table()
    return h, rows, dict(r.argmax)


def _rabi(p, calib, em, rng, shots):
    r = ex.rabi_fidelity(p, calib, em, rng, shots=shots)
    h, rows = r.as_table()
    return h, rows, {"fidelity": r.fidelity, "sigma": r.sigma,
                     "p1_given_1": r.p1_given_1, "p1_given_0": r.p1_given_0}


def _stability(p, calib, em, rng, shots):
    r = ex.stability_histogram(p, calib, em, rng, shots=shots)
    h, rows = r.as_table()
    return h, rows, {"mean": r.mean, "std": r.std}


def _reset(p, calib, em, rng, shots):
    r = ex.reset_experiments(p, calib, em)
    h, rows = r.as_table()
    return h, rows, {"passive_1e_us": r.passive_1e_time * 1e6,
                     "resonator_reset_ns": r.resonator_reset_time * 1e9,
                     "qubit_reset_ns": r.qubit_reset_time * 1e9,
                     "hybrid_1e_ns": r.on_resonance_1e_time * 1e9}


def _excess(p, calib, em, rng, shots):
    r = ex.excess_population_estimate(p, calib, em, rng,
                                      shots=max(shots, 20000))
    h, rows = r.as_table()
    return h, rows, {"estimate": r.estimate}


def _rep_rate(p, calib, em, rng, shots):
    r = ex.repetition_rate_sweep(p, calib, em, rng, shots=shots)
    h, rows = r.as_table()
    return h, rows, {"fitted_tau_us": r.fitted_tau * 1e6,
                     "fitted_floor": r.fitted_floor}


def _backaction(p, calib, em, rng, shots):
    r = ex.backaction_experiment(p, calib, em, rng, shots=shots)
    h, rows = r.as_table()
    return h, rows, {"visibilities": r.visibilities,
                     "tunneling_baseline": r.tunneling_baseline,
                     "fidelity_drop": r.fidelity_ideal - r.fidelity_full}


def _crosstalk(p, calib, em, rng, shots):
    r = ex.crosstalk_spin_echo(p, calib, em, rng, shots=shots)
    h, rows = r.as_table()
    return h, rows, {"ratio_with_drive": r.ratio_with_drive,
                     "ratio_with_reset": r.ratio_with_reset,
                     "implied_n_bar": r.implied_n_bar}


PRESETS = {
    "4b": ("potential", _potential),
    "4c": ("plasma_band", _plasma_band),
    "4d": ("s_curves", _s_curves),
    "5": ("stark", _stark),
    "6a": ("scan2d", _scan),
    "6b": ("rabi", _rabi),
    "7c": ("stability", _stability),
    "8": ("reset", _reset),
    "9": ("excess_population", _excess),
    "10": ("rep_rate", _rep_rate),
    "11": ("backaction", _backaction),
    "12": ("crosstalk", _crosstalk),
}


def run_preset(preset_id: str, p: DeviceParams, calib: CalibrationRecord,
               em: ErrorModel, rng, shots: int = 5000):
    """Returns (name, header, rows, summary) for a preset id."""
    if preset_id not in PRESETS:
        raise KeyError(f"unknown preset {preset_id!r}; "
                       f"choose from {sorted(PRESETS)}")
    name, fn = PRESETS[preset_id]
    header, rows, summary = fn(p, calib, em, rng, shots)
    return name, header, rows, summary
