"""Figures for selection and diagnostics reports.

Rendering goes through the Agg canvas directly, so nothing here touches the
global pyplot state or needs a display.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    return path


def selection_figure(seq, selection, k: int, path) -> Path:
    """Total SS against cluster count, with the chosen K and the per-Kmax picks."""
    ss = seq.ss_of()
    ks = sorted(ss)
    fig = Figure(figsize=(8, 3.5))
    ax = fig.add_subplot(1, 2, 1)
    ax.plot(ks, [ss[x] for x in ks], "o-", ms=3, color="0.2")
    ax.plot([k], [ss[k]], "o", ms=8, mfc="none", mec="C3", mew=2)
    ax.set_xlabel("clusters")
    ax.set_ylabel("total within-cluster SS")
    ax.set_title(f"pruning path (K = {k})")
    ax2 = fig.add_subplot(1, 2, 2)
    if selection is not None and selection.picks:
        kmax, picks = zip(*sorted(selection.picks.items()))
        ax2.step(kmax, picks, where="mid", color="C0")
        ax2.axhline(selection.k, color="C3", lw=1, ls="--")
    else:
        ax2.text(0.5, 0.5, "no vote", ha="center", va="center", transform=ax2.transAxes)
    ax2.set_xlabel("Kmax")
    ax2.set_ylabel("elbow pick")
    return _save(fig, path)


def diagnostics_figure(records, path) -> Path:
    """Residuals, gradient bias and the hyperplane offset against step count.

    ``records`` are dicts or objects with the checkpoint fields.
    """
    def col(name):
        return np.array([r[name] if isinstance(r, dict) else getattr(r, name) for r in records],
                        dtype=np.float64)

    t = col("t")
    fig = Figure(figsize=(10, 3.5))
    ax = fig.add_subplot(1, 3, 1)
    ax.loglog(t, col("resid_v"), "o-", ms=3, label="tangent grad v")
    ax.loglog(t, col("resid_b"), "s-", ms=3, label="|dO/db|")
    ax.set_xlabel("t")
    ax.set_title("stationarity residual")
    ax.legend(fontsize=8)
    ax = fig.add_subplot(1, 3, 2)
    ax.loglog(t, col("bias_mc"), "o", ms=3, label="Monte Carlo")
    ax.loglog(t, col("bias_exact"), "-", label="exact")
    ax.set_xlabel("t")
    ax.set_title("gradient bias")
    ax.legend(fontsize=8)
    ax = fig.add_subplot(1, 3, 3)
    ax.semilogx(t, col("b_orig"), "o-", ms=3, color="0.2")
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel("t")
    ax.set_title("offset")
    return _save(fig, path)
