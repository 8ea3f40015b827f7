"""Static SVG line plots rendered with matplotlib's SVG backend.

Output is byte-stable: the SVG id salt is fixed and the date metadata
dropped, so identical data give identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# dashed / dash-dot / solid as in the comparison figure
ESTIMATOR_STYLES = {"vec_b1": "--", "vec_b2": "-.", "mat_B": "-"}
GAMMA_STYLES = ("--", "-.", "-")

_RC = {
    "svg.hashsalt": "filtrans",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
}


@dataclass
class Panel:
    series: dict  # label -> (t, values)
    ylabel: str
    styles: dict = field(default_factory=dict)
    log_y: bool = False
    xlabel: str = "time [s]"


def _limits(values, log_y):
    finite = values[np.isfinite(values)]
    if log_y:
        finite = finite[finite > 0]
    if finite.size == 0:
        return None
    lo, hi = float(finite.min()), float(finite.max())
    if log_y:
        llo, lhi = np.log10(lo), np.log10(hi)
        pad = 0.05 * (lhi - llo) if lhi > llo else 0.5
        return 10 ** (llo - pad), 10 ** (lhi + pad)
    pad = 0.05 * (hi - lo) if hi > lo else (0.05 * abs(hi) if hi else 1.0)
    return lo - pad, hi + pad


def emit_panels(panels: list[Panel], path, title: str | None = None) -> Path:
    if not panels or any(not p.series for p in panels):
        raise ValueError("every panel needs at least one series")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(len(panels), 1, figsize=(6.4, 2.2 * len(panels) + 0.4),
                                 sharex=True, squeeze=False)
        for ax, panel in zip(axes[:, 0], panels):
            all_vals = []
            for label, (t, v) in panel.series.items():
                t = np.asarray(t, dtype=float)
                v = np.asarray(v, dtype=float)
                ax.plot(t, v, panel.styles.get(label, "-"), label=label)
                all_vals.append(v)
            if panel.log_y:
                ax.set_yscale("log")
            lims = _limits(np.concatenate(all_vals), panel.log_y)
            if lims is not None:
                ax.set_ylim(*lims)
            ax.set_ylabel(panel.ylabel)
            ax.legend(loc="upper right", frameon=False)
        axes[-1, 0].set_xlabel(panels[-1].xlabel)
        t_all = np.concatenate([np.asarray(t, dtype=float) for p in panels for t, _ in p.series.values()])
        axes[-1, 0].set_xlim(float(t_all.min()), float(t_all.max()))
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def emit_svg(series: dict, styles: dict, path, ylabel: str = "error [-]", log_y: bool = False,
             title: str | None = None) -> Path:
    """Single-panel plot of ``{label: (t, values)}``."""
    return emit_panels([Panel(series, ylabel, styles, log_y)], path, title)
