"""Figure rendering for the CLI report path.

Everything goes through the Agg backend so runs work headless; figures
are written next to the CSV they illustrate, never shown interactively.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import MIProfile

FIG_DPI = 150


def render_profile_figure(
    profiles: Sequence[MIProfile],
    path: Path,
    x_label: str = "time",
    title: str | None = None,
) -> Path:
    """Two-panel summary: rescaled MI per fragment size, then coherences.

    Returns the path written.  Rows whose rescaled MI is undefined (pure
    system, NaN in the CSV) simply leave gaps in the curves.
    """
    if not profiles:
        raise ValueError("nothing to plot: profiles is empty")

    x = np.array([p.step_or_time for p in profiles])
    ks = profiles[0].ks

    fig, (ax_mi, ax_coh) = plt.subplots(2, 1, figsize=(8.0, 6.0), sharex=True)

    for i, k in enumerate(ks):
        y = np.array([p.mi_rescaled[i] for p in profiles])
        ax_mi.plot(x, y, lw=1.2, label=f"k = {k}")
    ax_mi.axhline(1.0, color="0.6", lw=0.8, ls="--")
    ax_mi.set_ylabel("rescaled mutual information")
    ax_mi.legend(loc="upper right", fontsize=8)
    ax_mi.grid(alpha=0.3)
    if title:
        ax_mi.set_title(title)

    ax_coh.plot(x, [p.coherence_s for p in profiles], lw=1.2, label="system")
    ax_coh.plot(x, [p.coherence_a1 for p in profiles], lw=1.2, label="first register qubit")
    ax_coh.set_xlabel(x_label)
    ax_coh.set_ylabel("l1 coherence")
    ax_coh.legend(loc="upper right", fontsize=8)
    ax_coh.grid(alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)
    return path
