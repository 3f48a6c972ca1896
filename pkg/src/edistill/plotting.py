"""File-only figures for CLI reports (Agg backend, no display)."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (math.sqrt(5) - 1) / 2
WIDTH_IN = 5.0

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (WIDTH_IN, WIDTH_IN * GOLDEN),
}


def _axes():
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    return fig, ax


def _save(fig, path) -> None:
    # no timestamps in the metadata so repeated runs write identical files
    meta = {"Software": None} if str(path).lower().endswith(".png") else {}
    if str(path).lower().endswith(".pdf"):
        meta = {"CreationDate": None, "Producer": None}
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=meta)
    plt.close(fig)


def plot_profile(profile, path, brackets=None, reference: float | None = None) -> None:
    """One curve per block length; thresholds and brackets when given."""
    fig, ax = _axes()
    cmap = plt.get_cmap("viridis")
    ns = profile.ns
    shown = ns if len(ns) <= 8 else tuple(ns[int(i)] for i in np.linspace(0, len(ns) - 1, 8))
    for i, n in enumerate(ns):
        if n not in shown:
            continue
        ax.plot(profile.gammas, profile.values[i], color=cmap(i / max(1, len(ns) - 1)),
                lw=1.0, label=f"n = {n}")
    if brackets is not None:
        for g in (brackets.inf_est, brackets.sup_est):
            if math.isfinite(g):
                ax.axvline(g, color="0.5", ls=":", lw=0.8)
    if reference is not None:
        ax.axvline(reference, color="k", ls="--", lw=0.8, label="reference")
    ax.set_xlabel(r"$\gamma$ (bits per copy)")
    ax.set_ylabel(r"Tr$[\{\Pi_n \geq 0\}\Pi_n]$")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(frameon=False, ncol=2)
    _save(fig, path)


def plot_hashing(fidelities, path, mean: float, stderr: float, certificate: float) -> None:
    """Histogram of per-branch fidelities with the mean and the closed-form certificate."""
    fig, ax = _axes()
    ax.hist(np.asarray(fidelities), bins=40, range=(0, 1), color="0.6", edgecolor="white", lw=0.4)
    ax.axvline(mean, color="C0", lw=1.2, label=f"mean {mean:.4f}")
    if math.isfinite(stderr) and stderr > 0:
        ax.axvspan(mean - 3 * stderr, mean + 3 * stderr, color="C0", alpha=0.15, lw=0)
    ax.axvline(certificate, color="C3", ls="--", lw=1.0, label=f"certificate {certificate:.4f}")
    ax.set_xlabel("branch fidelity")
    ax.set_ylabel("samples")
    ax.legend(frameon=False)
    _save(fig, path)
