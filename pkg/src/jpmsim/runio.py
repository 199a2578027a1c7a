"""Deterministic run output: delimited tables with a provenance header.

Every table file carries exactly one '#' metadata line embedding the device
config hash, the seed, and any run options, so a reproduce run can be checked
byte for byte against the original.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

DELIMITER = ","
OUTDIR_ENV = "JPMSIM_OUTDIR"


def config_hash(mapping: dict) -> str:
    """Short stable hash of a JSON-serializable mapping."""
    blob = json.dumps(mapping, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def metadata_line(meta: dict) -> str:
    parts = [f"{k}={meta[k]}" for k in sorted(meta)]
    return "# " + " ".join(parts)


def write_table(path, header, rows, meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [metadata_line(meta), DELIMITER.join(header)]
    lines += [DELIMITER.join(str(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_table(path):
    """Returns (meta dict, header list, rows list-of-lists)."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValueError(f"{path}: missing metadata header")
    meta = dict(kv.split("=", 1) for kv in lines[0][2:].split(" "))
    header = lines[1].split(DELIMITER)
    rows = [ln.split(DELIMITER) for ln in lines[2:] if ln]
    return meta, header, rows


def experiment_rng(seed: int, tag: str) -> np.random.Generator:
    """Independent, reproducible stream per (seed, experiment tag)."""
    digest = hashlib.sha256(tag.encode()).digest()
    sub = int.from_bytes(digest[:4], "big")
    return np.random.default_rng([int(seed), sub])


def default_outdir() -> Path:
    return Path(os.environ.get(OUTDIR_ENV, "out"))


def table_filename(name: str, seed: int) -> str:
    return f"{name}_seed{seed}.csv"
