"""Figure rendering for report tables.

Each preset table gets a matching PNG next to the delimited file.  Rendering
works from the written table itself, so the figure always reflects exactly
what was saved.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _columns(header, rows):
    arr = np.array([[float(c) if c else np.nan for c in row] for row in rows])
    return {h: arr[:, i] for i, h in enumerate(header)}


def render_table(name: str, header, rows, out_path) -> Path:
    """Render a table to a PNG; layout depends on the preset name."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    cols = _columns(header, rows)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if name == "scan2d":
        w = np.unique(cols["omega_d_rad_s"])
        t = np.unique(cols["t_d_s"])
        diff = cols["difference"].reshape(w.size, t.size)
        im = ax.pcolormesh(t * 1e9, w / 2 / np.pi / 1e9, diff,
                           shading="auto", cmap="RdBu_r")
        fig.colorbar(im, ax=ax, label=header[-1])
        ax.set_xlabel("drive time (ns)")
        ax.set_ylabel("drive frequency (GHz)")
    elif name == "stability":
        ax.hist(cols["fidelity"], bins=40)
        ax.set_xlabel("fidelity")
        ax.set_ylabel("determinations")
    else:
        x = cols[header[0]]
        for h in header[1:]:
            y = cols[h]
            mask = np.isfinite(x) & np.isfinite(y)
            ax.plot(x[mask], y[mask], label=h, lw=1.2)
        ax.set_xlabel(header[0])
        if len(header) > 2:
            ax.legend(fontsize=8)
        else:
            ax.set_ylabel(header[1])
    ax.set_title(name)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
