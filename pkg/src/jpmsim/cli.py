"""Command-line entry point.

Subcommands:
  validate    load a device config and print the derived quantities
  calibrate   compute an operating point and write it as JSON
  run         run one report preset, writing a table and a figure
  reproduce   run every preset with deterministic per-preset seeds
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from importlib import resources

from .calibrate import default_calibration
from .constants import TWO_PI
from .device import (DeviceConfigError, derive_all, dressed_resonator_freqs,
                     load_device, params_to_dict)
from .model import CalibrationRecord, ErrorModel
from .plots import render_table
from .presets import PRESETS, run_preset
from .runio import (config_hash, default_outdir, experiment_rng,
                    table_filename, write_table)


def _default_device_path() -> str:
    return str(resources.files("jpmsim").joinpath("data/chip1_q1j1.yaml"))


def _add_common(sub):
    sub.add_argument("--device", default=_default_device_path(),
                     help="device config YAML")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--shots", type=int, default=5000)
    sub.add_argument("--out", default=None,
                     help="output directory (default: $JPMSIM_OUTDIR or ./out)")
    sub.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE",
                     help="override an error-model or calibration field")


_EM_FIELDS = {f.name: f.type for f in dataclasses.fields(ErrorModel)}
_CAL_FIELDS = ("omega_d", "t_d", "epsilon", "tunnel_amplitude",
               "readout_snr", "delta_e_pd", "kerr", "t_pd", "t_b")


def parse_overrides(pairs):
    """Split KEY=VALUE overrides into error-model and calibration dicts."""
    em_over, cal_over = {}, {}
    for pair in pairs:
        if "=" not in pair:
            raise SystemExit(f"error: malformed override {pair!r}, "
                             "expected KEY=VALUE")
        key, raw = pair.split("=", 1)
        if key in _EM_FIELDS:
            em_over[key] = (raw.lower() in ("1", "true", "yes")
                            if key == "ideal_detector" else float(raw))
        elif key in _CAL_FIELDS:
            cal_over[key] = float(raw)
        else:
            raise SystemExit(f"error: unknown override key {key!r}")
    return em_over, cal_over


def _load(args):
    try:
        p = load_device(args.device)
    except (DeviceConfigError, OSError) as exc:
        raise SystemExit(f"error: {exc}")
    em_over, cal_over = parse_overrides(args.overrides)
    em = ErrorModel(**em_over)
    calib = default_calibration(p, em)
    for k, v in cal_over.items():
        setattr(calib, k, v)
    calib.validate()
    return p, em, calib


def _outdir(args) -> Path:
    out = Path(args.out) if args.out else default_outdir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _meta(args, p, extra=None) -> dict:
    meta = {"device": config_hash(params_to_dict(p)), "seed": args.seed,
            "shots": args.shots}
    if args.overrides:
        meta["overrides"] = ";".join(sorted(args.overrides))
    meta.update(extra or {})
    return meta


def cmd_validate(args) -> int:
    try:
        p = load_device(args.device)
        d = derive_all(p)
    except (DeviceConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"device config {args.device}: OK")
    w0, w1 = dressed_resonator_freqs(p)
    print(f"  chi/2pi            {d.chi / TWO_PI / 1e6:+.4f} MHz")
    print(f"  2chi/2pi           {d.two_chi / TWO_PI / 1e6:.4f} MHz")
    print(f"  dressed freqs      {w0 / TWO_PI / 1e9:.6f} / "
          f"{w1 / TWO_PI / 1e9:.6f} GHz")
    print(f"  n_crit             {d.n_crit:.2f}")
    print(f"  Purcell T1 bound   {d.purcell_T1 * 1e6:.2f} us")
    print(f"  beta_L             {d.beta_L:.4f}")
    return 0


def cmd_calibrate(args) -> int:
    p, em, calib = _load(args)
    if args.optimize:
        from .calibrate import optimize_drive
        calib = optimize_drive(p, calib, em)
    out = _outdir(args)
    record = {k: getattr(calib, k) for k in _CAL_FIELDS}
    path = out / f"calibration_seed{args.seed}.json"
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    for k, v in record.items():
        print(f"  {k:17s} {v:.6e}")
    print(f"wrote {path}")
    return 0


def _run_one(preset_id, args, p, em, calib, out: Path) -> Path:
    name, fn = PRESETS[preset_id]
    rng = experiment_rng(args.seed, name)
    name, header, rows, summary = run_preset(preset_id, p, calib, em, rng,
                                             shots=args.shots)
    meta = _meta(args, p, {"preset": preset_id})
    table = write_table(out / table_filename(name, args.seed),
                        header, rows, meta)
    render_table(name, header, rows, table.with_suffix(".png"))
    print(f"preset {preset_id} ({name}): {table}")
    for k, v in summary.items():
        print(f"  {k}: {v}")
    return table


def cmd_run(args) -> int:
    if args.preset not in PRESETS:
        print(f"error: unknown preset {args.preset!r}; "
              f"choose from {' '.join(sorted(PRESETS))}", file=sys.stderr)
        return 2
    p, em, calib = _load(args)
    _run_one(args.preset, args, p, em, calib, _outdir(args))
    return 0


def cmd_reproduce(args) -> int:
    p, em, calib = _load(args)
    out = _outdir(args)
    ids = args.presets or sorted(PRESETS)
    for preset_id in ids:
        if preset_id not in PRESETS:
            print(f"error: unknown preset {preset_id!r}", file=sys.stderr)
            return 2
        _run_one(preset_id, args, p, em, calib, out)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="jpmsim",
        description="photon-counter qubit measurement simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sv = sub.add_parser("validate", help="check a device config")
    sv.add_argument("--device", default=_default_device_path())
    sv.set_defaults(fn=cmd_validate)

    sc = sub.add_parser("calibrate", help="compute an operating point")
    _add_common(sc)
    sc.add_argument("--optimize", action="store_true",
                    help="re-optimize the drive parameters from scratch")
    sc.set_defaults(fn=cmd_calibrate)

    sr = sub.add_parser("run", help="run one report preset")
    _add_common(sr)
    sr.add_argument("--preset", required=True,
                    help="preset id: " + " ".join(sorted(PRESETS)))
    sr.set_defaults(fn=cmd_run)

    sp = sub.add_parser("reproduce", help="run all presets deterministically")
    _add_common(sp)
    sp.add_argument("--presets", nargs="*", default=None,
                    help="subset of preset ids (default: all)")
    sp.set_defaults(fn=cmd_reproduce)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
