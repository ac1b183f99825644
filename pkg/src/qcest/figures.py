"""Matplotlib rendering of convergence and trade-off reports.

Figures are a side output of the report path: the delimited file remains the
authoritative artifact, the PNG next to it is for eyeballing the theorem.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_convergence(report):
    """F_C(N) row plot with the estimation bounds as horizontal guides."""
    ns = [r.n for r in report.rows if np.isfinite(r.fc)]
    fcs = [r.fc for r in report.rows if np.isfinite(r.fc)]
    fig, (ax, ax2) = plt.subplots(
        2, 1, figsize=(6.0, 6.0), sharex=True,
        gridspec_kw={"height_ratios": [2.2, 1.0]})
    ax.plot(ns, fcs, "o-", color="tab:blue", label=rf"$F_C(N)$ ({report.mode})")
    ax.axhline(report.fm_bounds.upper, color="tab:red", lw=1.0, ls="--",
               label=r"$F_M$ upper (SDP)")
    ax.axhline(report.fm_bounds.lower, color="tab:green", lw=1.0, ls=":",
               label=r"$F_M$ lower (see-saw)")
    ax.set_ylabel("fidelity")
    ax.set_title(f"cloning vs estimation: {report.ensemble_label}")
    ax.legend(loc="upper right", fontsize=9)
    ax.grid(alpha=0.3)

    negs = [(r.n, r.negativity) for r in report.rows if np.isfinite(r.negativity)]
    if negs:
        ax2.semilogy([n for n, _ in negs], [max(v, 1e-16) for _, v in negs],
                     "s-", color="tab:purple")
    ax2.set_xlabel("number of clones N")
    ax2.set_ylabel("marginal negativity")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def plot_tradeoff(curve):
    """F_B against F_A for the asymmetric machine."""
    fas = [p.fa for p in curve.points if np.isfinite(p.fb)]
    fbs = [p.fb for p in curve.points if np.isfinite(p.fb)]
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.plot(fas, fbs, "o-", color="tab:blue")
    ax.set_xlabel(r"$F_A$ (single clone)")
    ax.set_ylabel(rf"$F_B$ ({curve.n_b} clone{'s' if curve.n_b > 1 else ''})")
    ax.set_title(f"asymmetric trade-off: {curve.ensemble_label}")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def save_figure(fig, path) -> None:
    fig.savefig(path, dpi=150)
    plt.close(fig)
