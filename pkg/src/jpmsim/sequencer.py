"""Measurement timing diagram as a typed schedule, plus single-shot execution.

A full measurement is: qubit gate, pointer drive (maps the qubit state onto a
bright or dark cavity field), photodetection window (cavity-detector photon
swap), fast tunnel-bias pulse, relax hold, flux-state readout, and reset.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .cavity import DrivePulse, OUTPUT_DT
from .device import DeviceParams


class SegmentKind(Enum):
    QUBIT_GATE = "qubit_gate"
    POINTER_DRIVE = "pointer_drive"
    PHOTODETECT = "photodetect"
    TUNNEL_BIAS = "tunnel_bias"
    RELAX = "relax"
    JPM_READOUT = "jpm_readout"
    RESONATOR_RESET = "resonator_reset"
    QUBIT_RESET = "qubit_reset"
    HIDE_BIAS = "hide_bias"
    IDLE = "idle"


# control channel per segment kind, for overlap checking and waveform export
CHANNEL = {
    SegmentKind.QUBIT_GATE: "qubit_xy",
    SegmentKind.POINTER_DRIVE: "resonator_drive",
    SegmentKind.PHOTODETECT: "jpm_flux",
    SegmentKind.TUNNEL_BIAS: "jpm_flux",
    SegmentKind.RELAX: "jpm_flux",
    SegmentKind.JPM_READOUT: "jpm_readout",
    SegmentKind.RESONATOR_RESET: "jpm_flux",
    SegmentKind.QUBIT_RESET: "qubit_flux",
    SegmentKind.HIDE_BIAS: "qubit_flux",
    SegmentKind.IDLE: "none",
}


class ScheduleError(ValueError):
    pass


def _ns(t: float) -> int:
    n = t * 1e9
    if abs(n - round(n)) > 1e-6:
        raise ScheduleError(f"duration {t!r} is not a whole nanosecond")
    return int(round(n))


@dataclass(frozen=True)
class ScheduleSegment:
    kind: SegmentKind
    start: float              # seconds
    duration: float           # seconds
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.duration < 0:
            raise ScheduleError("segment duration must be nonnegative")
        _ns(self.start)
        _ns(self.duration)

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class PulseSchedule:
    segments: tuple

    def __post_init__(self):
        by_channel: dict = {}
        for s in self.segments:
            by_channel.setdefault(CHANNEL[s.kind], []).append(s)
        for ch, segs in by_channel.items():
            if ch == "none":
                continue
            segs = sorted(segs, key=lambda s: s.start)
            for a, b in zip(segs, segs[1:]):
                if b.start < a.end - 1e-15:
                    raise ScheduleError(
                        f"overlapping segments on channel {ch}: "
                        f"{a.kind.value} and {b.kind.value}"
                    )

    @property
    def total_duration(self) -> float:
        return max((s.end for s in self.segments), default=0.0)

    def duration_excluding_reset(self) -> float:
        ends = [s.end for s in self.segments
                if s.kind not in (SegmentKind.RESONATOR_RESET,
                                  SegmentKind.QUBIT_RESET)]
        return max(ends, default=0.0)

    def find(self, kind: SegmentKind):
        return [s for s in self.segments if s.kind == kind]


CALIBRATION_FIELDS = ("omega_d", "t_d", "epsilon", "tunnel_amplitude",
                      "readout_snr")


def build_default_schedule(p: DeviceParams, calib) -> PulseSchedule:
    """Standard measurement schedule from a complete calibration record.

    Layout: 15 ns gate, pointer drive of t_d, 5 ns photodetect, 10 ns tunnel
    pulse, 30 ns relax hold, 250 ns flux readout, then 200 ns combined reset.
    """
    missing = [f for f in CALIBRATION_FIELDS if getattr(calib, f, None) is None]
    if missing:
        raise ScheduleError(
            "calibration record incomplete, missing: " + ", ".join(missing))
    gate_len = 15e-9
    t = 0.0
    segs = [ScheduleSegment(SegmentKind.QUBIT_GATE, t, gate_len,
                            {"angle": math.pi, "shape": "cosine"})]
    t += gate_len
    segs.append(ScheduleSegment(
        SegmentKind.POINTER_DRIVE, t, calib.t_d,
        {"omega_d": calib.omega_d, "epsilon": calib.epsilon}))
    t += calib.t_d
    segs.append(ScheduleSegment(SegmentKind.PHOTODETECT, t, 5e-9))
    t += 5e-9
    segs.append(ScheduleSegment(
        SegmentKind.TUNNEL_BIAS, t, 10e-9,
        {"amplitude": calib.tunnel_amplitude}))
    t += 10e-9
    segs.append(ScheduleSegment(SegmentKind.RELAX, t, 30e-9))
    t += 30e-9
    segs.append(ScheduleSegment(SegmentKind.JPM_READOUT, t, 250e-9,
                                {"snr": calib.readout_snr}))
    t += 250e-9
    segs.append(ScheduleSegment(SegmentKind.RESONATOR_RESET, t, 100e-9))
    t += 100e-9
    segs.append(ScheduleSegment(SegmentKind.QUBIT_RESET, t, 100e-9))
    return PulseSchedule(tuple(segs))


def gate_envelope(shape: str, duration: float) -> np.ndarray:
    """Sampled gate envelope and its derivative quadrature at 1 ns.

    Returns an array of shape (n, 2): in-phase cosine envelope and the
    derivative-correction quadrature.  Export-only; gate fidelity enters the
    error model as a scalar.
    """
    if duration < 1e-9:
        raise ScheduleError("gate duration must be at least 1 ns")
    if shape != "cosine":
        raise ScheduleError(f"unknown gate shape {shape!r}")
    n = _ns(duration) + 1
    t = np.linspace(0.0, 1.0, n)
    env = 0.5 * (1.0 - np.cos(2.0 * np.pi * t))
    denv = np.sin(2.0 * np.pi * t) * np.pi / (_ns(duration))
    return np.column_stack([env, denv])


# --- serialization ------------------------------------------------------------

def schedule_to_text(sched: PulseSchedule) -> str:
    """One row per segment: channel, start_ns, duration_ns, kind, params."""
    buf = io.StringIO()
    buf.write("channel\tstart_ns\tduration_ns\tkind\tparams\n")
    for s in sorted(sched.segments, key=lambda s: (s.start, CHANNEL[s.kind])):
        kv = ";".join(f"{k}={s.params[k]!r}" for k in sorted(s.params))
        buf.write(f"{CHANNEL[s.kind]}\t{_ns(s.start)}\t{_ns(s.duration)}"
                  f"\t{s.kind.value}\t{kv}\n")
    return buf.getvalue()


def schedule_from_text(text: str) -> PulseSchedule:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("channel\t"):
        raise ScheduleError("missing schedule header row")
    segs = []
    for ln in lines[1:]:
        _, start_ns, dur_ns, kind, kv = ln.split("\t")
        params = {}
        if kv:
            for item in kv.split(";"):
                k, v = item.split("=", 1)
                params[k] = eval(v, {"__builtins__": {}}, {})  # repr round-trip
        segs.append(ScheduleSegment(SegmentKind(kind), int(start_ns) * 1e-9,
                                    int(dur_ns) * 1e-9, params))
    return PulseSchedule(tuple(segs))


def waveform_rows(sched: PulseSchedule):
    """1 GS/s envelope magnitude per channel: rows (t_ns, channel values...)."""
    channels = sorted({CHANNEL[s.kind] for s in sched.segments} - {"none"})
    n = _ns(sched.total_duration) + 1
    wave = {ch: np.zeros(n) for ch in channels}
    for s in sched.segments:
        ch = CHANNEL[s.kind]
        if ch == "none" or s.duration == 0:
            continue
        i0, i1 = _ns(s.start), _ns(s.end)
        if s.kind is SegmentKind.QUBIT_GATE:
            wave[ch][i0:i1 + 1] = gate_envelope(
                s.params.get("shape", "cosine"), s.duration)[:, 0]
        elif s.kind is SegmentKind.TUNNEL_BIAS:
            wave[ch][i0:i1] = s.params.get("amplitude", 1.0)
        else:
            wave[ch][i0:i1] = 1.0
    yield ("t_ns", *channels)
    for i in range(n):
        yield (float(i), *(wave[ch][i] for ch in channels))


# --- single-shot execution ----------------------------------------------------

@dataclass(frozen=True)
class ShotRecord:
    outcome: int             # classified flux state, 1 = switched
    prepared: int            # intended qubit state after the gate
    qubit_after_prep: int    # actual qubit state entering the pointer drive
    clicked: bool            # detector switched before retrap/readout
    n_bar_seen: float        # cavity occupation presented to the detector
    error_fired: str         # first error channel that fired, "" if none


def run_shot(schedule: PulseSchedule, prepared_state: int, physics,
             error_model, rng: np.random.Generator) -> ShotRecord:
    """Execute one measurement shot by drawing through the error chain.

    physics is a ShotPhysics bundle (precomputed pointer occupations and
    detector response); error_model supplies the channel rates.  All
    stochastic draws come from rng in a fixed order, so a fixed seed
    reproduces the shot exactly.
    """
    drive = schedule.find(SegmentKind.POINTER_DRIVE)
    if not drive:
        raise ScheduleError("schedule has no pointer drive segment")
    t_d = drive[0].duration
    em = error_model
    fired = ""

    # thermal initialization, then the gate
    state = 1 if rng.random() < em.excess_one_population else 0
    if state == 1 and not fired:
        fired = "excess_population"
    if prepared_state == 1:
        state ^= 1
        if em.gate_error > 0 and rng.random() < em.gate_error:
            state ^= 1
            fired = fired or "gate_error"

    # qubit relaxation during the pointer drive; a decay at time tau yields a
    # bright pointer with probability equal to the elapsed drive fraction
    n_bar = physics.n_dark
    if state == 1:
        tau = rng.exponential(em.T1_q)
        if tau >= t_d:
            n_bar = physics.n_bright
        else:
            fired = fired or "relaxation"
            n_bar = physics.n_bright if rng.random() < tau / t_d else physics.n_dark

    clicked = bool(rng.random() < physics.click(n_bar))
    if clicked and rng.random() < physics.retrap:
        clicked = False
        fired = fired or "retrap"
    outcome = int(clicked)
    if rng.random() < physics.readout_error:
        outcome ^= 1
        fired = fired or "readout"
    return ShotRecord(outcome=outcome, prepared=prepared_state,
                      qubit_after_prep=state, clicked=clicked,
                      n_bar_seen=float(n_bar), error_fired=fired)
