"""Figure rendering.

All figures are written as SVG with a fixed hash salt and no embedded
timestamps, so rendering the same data twice produces identical bytes.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .models import nishimori_beta
from .threshold import PhaseBoundary, ScanResult, ThresholdEstimate

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def save_figure(fig, path: str, description: str = "") -> None:
    """Write the figure as deterministic SVG (atomic replace)."""
    matplotlib.rcParams["svg.hashsalt"] = "msctk"
    tmp = path + ".tmp"
    fig.savefig(
        tmp,
        format="svg",
        metadata={"Date": None, "Description": description},
        bbox_inches="tight",
    )
    plt.close(fig)
    os.replace(tmp, path)


def plot_scan(
    scan: ScanResult,
    estimate: ThresholdEstimate | None = None,
    path: str | None = None,
    description: str = "",
):
    """Binder ratio against error rate, one curve per size, crossing marked."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    u, ue = scan.u_grid()
    x = np.array(scan.p_grid)
    for k, size in enumerate(scan.sizes):
        ax.errorbar(
            x, u[k], yerr=ue[k],
            marker="o", markersize=4, capsize=2.5, lw=1.2,
            color=_COLORS[k % len(_COLORS)], label=f"L = {size}",
        )
    if estimate is not None and estimate.crossed:
        ax.axvline(estimate.p_c, color="0.25", lw=1.0, ls="--")
        if estimate.uncertainty:
            ax.axvspan(
                estimate.p_c - estimate.uncertainty,
                estimate.p_c + estimate.uncertainty,
                color="0.8", alpha=0.5, zorder=0,
            )
        ax.annotate(
            f"p_c = {estimate.p_c:.4f}",
            xy=(estimate.p_c, ax.get_ylim()[1]),
            xytext=(4, -12), textcoords="offset points", fontsize=9,
        )
    ax.set_xlabel("error rate p")
    ax.set_ylabel("Binder ratio of the replica overlap")
    ax.set_title(f"{scan.family}: size crossing along the matched line")
    ax.legend(frameon=False, fontsize=9)
    ax.grid(alpha=0.25, lw=0.5)
    if path:
        save_figure(fig, path, description)
        return None
    return fig


def plot_phase_boundary(
    boundary: PhaseBoundary,
    path: str | None = None,
    description: str = "",
    matched_line: bool = True,
):
    """Critical temperature against disorder, with the matched line overlaid."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ps = [b.p for b in boundary.points if b.crossed]
    ts = [b.t_c for b in boundary.points if b.crossed]
    te = [b.t_c_err for b in boundary.points if b.crossed]
    if ps:
        ax.errorbar(
            ps, ts, yerr=te,
            marker="s", markersize=5, capsize=2.5, lw=1.2,
            color=_COLORS[0], label="estimated T_c(p)",
        )
    missing = [b.p for b in boundary.points if not b.crossed]
    for p in missing:
        ax.axvline(p, color="0.85", lw=4.0, zorder=0)
    if matched_line:
        grid = np.linspace(1e-3, 0.45, 200)
        ax.plot(
            grid, [1.0 / nishimori_beta(p) for p in grid],
            ls=":", color="0.4", lw=1.2,
            label="matched disorder-temperature line",
        )
    ax.set_xlabel("error rate p")
    ax.set_ylabel("critical temperature T_c")
    ax.set_title(f"{boundary.family}: phase boundary")
    ax.legend(frameon=False, fontsize=9)
    ax.grid(alpha=0.25, lw=0.5)
    if path:
        save_figure(fig, path, description)
        return None
    return fig


def plot_ensemble(
    betas,
    observables: dict,
    path: str | None = None,
    description: str = "",
    title: str = "disorder-averaged observables",
    wilson: dict | None = None,
):
    """U_q and energy per rung for a single ensemble; Wilson means if present."""
    n_rows = 2 + (1 if wilson else 0)
    fig, axes = plt.subplots(n_rows, 1, figsize=(6.0, 2.6 * n_rows), sharex=True)
    axes = np.atleast_1d(axes)
    x = np.array(betas)
    axes[0].errorbar(
        x, observables["u_q"], yerr=observables["u_q_err"],
        marker="o", markersize=4, capsize=2.5, color=_COLORS[0],
    )
    axes[0].set_ylabel("Binder ratio")
    axes[1].errorbar(
        x, observables["e"], yerr=observables["e_err"],
        marker="o", markersize=4, capsize=2.5, color=_COLORS[1],
    )
    axes[1].set_ylabel("energy per model")
    if wilson:
        w = np.array(wilson["mean"])
        we = np.array(wilson["err"])
        for j in range(w.shape[0]):
            axes[2].errorbar(
                x, w[j], yerr=we[j],
                marker="^", markersize=4, capsize=2.5,
                color=_COLORS[(2 + j) % len(_COLORS)], label=f"loop {j}",
            )
        axes[2].set_ylabel("Wilson loop")
        axes[2].legend(frameon=False, fontsize=8)
    axes[-1].set_xlabel("inverse temperature")
    axes[0].set_title(title)
    for ax in axes:
        ax.grid(alpha=0.25, lw=0.5)
    if path:
        save_figure(fig, path, description)
        return None
    return fig
