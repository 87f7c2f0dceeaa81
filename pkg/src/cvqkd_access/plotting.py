"""Figure rendering for report outputs.

Every function writes one PNG next to the delimited data it illustrates and
returns the path. The Agg backend is forced so rendering works headless, and
figures avoid wall-clock metadata so repeated runs are byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_DPI = 150


def save_rate_vs_loss(loss_db, skr_bps, path, *, marks=None) -> Path:
    """Secret key rate against channel loss, log-scale rate axis.

    ``marks`` is an optional list of (loss_db, skr_bps, label) points to
    highlight on top of the curve.
    """
    path = Path(path)
    loss_db = np.asarray(loss_db, dtype=float)
    skr = np.asarray(skr_bps, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    positive = skr > 0
    ax.semilogy(loss_db[positive], skr[positive], color="#1f5fa8", lw=1.8)
    if marks:
        for mloss, mrate, label in marks:
            ax.plot([mloss], [mrate], "o", color="#c23b22", ms=6)
            ax.annotate(label, (mloss, mrate), textcoords="offset points",
                        xytext=(6, 4), fontsize=9)
    ax.set_xlabel("Channel loss (dB)")
    ax.set_ylabel("Secret key rate (bit/s)")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_capacity_bars(n_onus, total_bps, path) -> Path:
    """Total network capacity as bars over the ONU count."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar(list(n_onus), np.asarray(total_bps, dtype=float) / 1e3,
           color="#1f5fa8", width=0.65)
    ax.set_xlabel("Number of ONUs")
    ax.set_ylabel("Network capacity (kbit/s)")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_rate_grid(grid, n_onus_values, loss_values, path) -> Path:
    """Pseudo-color map of per-ONU rate over ONU count and loss."""
    path = Path(path)
    grid = np.asarray(grid, dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    mesh = ax.pcolormesh(np.asarray(loss_values, dtype=float),
                         np.asarray(list(n_onus_values)),
                         grid / 1e3, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="Secret key rate (kbit/s)")
    ax.set_xlabel("Total loss (dB)")
    ax.set_ylabel("Number of ONUs")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def save_network_rates(rates_bps: dict, path) -> Path:
    """Per-ONU secret key rates of one pipeline run as bars."""
    path = Path(path)
    names = sorted(rates_bps)
    values = [rates_bps[n] / 1e3 for n in names]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar(names, values, color="#1f5fa8", width=0.5)
    ax.set_ylabel("Secret key rate (kbit/s)")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
