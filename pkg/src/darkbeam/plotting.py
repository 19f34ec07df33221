"""Figure rendering for the run operations.

All figures go through _save, which strips the date metadata and salts
the SVG element ids with the configuration hash, so rerunning the same
configuration reproduces the file byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

OUTCOME_COLORS = {
    "passed": "tab:green",
    "blocked_slit2": "tab:gray",
    "blocked_slit3": "tab:red",
    "deflected_out": "tab:purple",
}


def _save(fig, path: Path, cfg_hash: str) -> None:
    with matplotlib.rc_context({"svg.hashsalt": cfg_hash}):
        fig.savefig(
            path, format="svg",
            metadata={"Date": None, "Description": f"config_sha256={cfg_hash}"},
        )
    plt.close(fig)


def surface_heatmaps(path: Path, panels, cfg_hash: str) -> None:
    """One heatmap per tuning case: branch energy over (t, x)."""
    n = len(panels)
    fig, axes = plt.subplots(1, n, figsize=(5.2 * n, 4.0), squeeze=False)
    for ax, (name, x_grid, t_grid, energies) in zip(axes[0], panels):
        mesh = ax.pcolormesh(
            t_grid * 1e6, x_grid * 1e6, energies, shading="auto", cmap="viridis"
        )
        fig.colorbar(mesh, ax=ax, label="branch energy (rad/s)")
        ax.set_xlabel("time (us)")
        ax.set_ylabel("transverse position (um)")
        ax.set_title(name)
    fig.tight_layout()
    _save(fig, path, cfg_hash)


def follow_panels(path: Path, panels, cfg_hash: str) -> None:
    """Followed-branch projection, total projection, and norm per case."""
    n = len(panels)
    fig, axes = plt.subplots(1, n, figsize=(4.6 * n, 3.6), squeeze=False)
    for ax, (name, times, followed, totals, norms) in zip(axes[0], panels):
        t_us = times * 1e6
        ax.plot(t_us, followed, label="followed branch", color="tab:blue")
        ax.plot(t_us, totals, label="all branches", color="tab:orange", ls="--")
        ax.plot(t_us, norms**2, label="norm$^2$", color="tab:gray", ls=":")
        ax.set_ylim(-0.02, 1.05)
        ax.set_xlabel("time (us)")
        ax.set_ylabel("projection")
        ax.set_title(name)
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path, cfg_hash)


def stirap_panel(path: Path, result, labels, cfg_hash: str) -> None:
    """Bare-level populations through one pulse window."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    t_us = result.times * 1e6
    for i, lab in enumerate(labels):
        ax.plot(t_us, result.populations[:, i], label=f"|{lab}>")
    ax.plot(t_us, result.norms**2, color="tab:gray", ls=":", label="norm$^2$")
    lo, hi = result.plateau_window_s
    ax.axvspan(lo * 1e6, hi * 1e6, color="tab:olive", alpha=0.15, label="plateau")
    ax.set_xlabel("time (us)")
    ax.set_ylabel("population")
    ax.set_title(f"{result.mode} (ratio {result.plateau_ratio_measured:.3f})")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path, cfg_hash)


def beamline_panels(path: Path, level_paths, slits, laser_z_m: float,
                    v_nominal_mps: float, cfg_hash: str) -> None:
    """Transverse position along the beamline for a few molecules per level."""
    if not level_paths:
        fig, ax = plt.subplots(figsize=(6.0, 3.0))
        ax.text(0.5, 0.5, "no recorded trajectories", ha="center", va="center")
        ax.set_axis_off()
        _save(fig, path, cfg_hash)
        return
    n = len(level_paths)
    ncols = min(4, n)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.6 * ncols, 3.2 * nrows),
        squeeze=False, sharex=True, sharey=True,
    )
    flat = axes.ravel()
    seen_outcomes = set()
    for ax, (label, paths) in zip(flat, level_paths):
        for z, x, outcome in paths:
            ax.plot(z, x * 1e6, color=OUTCOME_COLORS.get(outcome, "k"),
                    lw=0.8, alpha=0.85)
            seen_outcomes.add(outcome)
        for zs, w in zip(slits.z_m, slits.width_m):
            half = 0.5 * w * 1e6
            ax.plot([zs, zs], [half, half * 8], color="k", lw=2.0)
            ax.plot([zs, zs], [-half, -half * 8], color="k", lw=2.0)
        ax.axvline(laser_z_m, color="tab:orange", ls="--", lw=1.0)
        ax.set_ylim(-40, 40)
        ax.set_title(label, fontsize=9)
    for ax in flat[n:]:
        ax.set_axis_off()
    for ax in axes[-1]:
        ax.set_xlabel("longitudinal position (m)")
    for row in axes:
        row[0].set_ylabel("transverse position (um)")
    handles = [plt.Line2D([], [], color=OUTCOME_COLORS[o], label=o)
               for o in sorted(seen_outcomes)]
    if handles:
        fig.legend(handles=handles, loc="lower center",
                   ncol=len(handles), fontsize=8, frameon=False)
        fig.tight_layout(rect=(0, 0.06, 1, 1))
    else:
        fig.tight_layout()
    _save(fig, path, cfg_hash)


def sweep_panel(path: Path, rows, cfg_hash: str) -> None:
    """Purity and target yield across the sweep grid, row order."""
    idx = np.array([r["row"] for r in rows])
    purity = np.array([np.nan if r["purity"] is None else r["purity"] for r in rows])
    target_yield = np.array([r["target_yield"] for r in rows])
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(idx, purity, "o-", label="purity", color="tab:blue")
    ax.plot(idx, target_yield, "s--", label="target yield", color="tab:orange")
    ax.set_xlabel("sweep row")
    ax.set_ylabel("fraction")
    ax.set_ylim(-0.02, 1.05)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path, cfg_hash)
