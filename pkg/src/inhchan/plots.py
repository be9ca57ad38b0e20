"""Figure rendering for the plot-data report path.

Each CSV emitted by the `plotdata` subcommand can be rendered to a PNG
written alongside it. Headless backend; nothing here touches a display.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_pl_vs_d(scatter_d, scatter_pl, line_d, line_pl, path, title=""):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogx(scatter_d, scatter_pl, ".", ms=3, alpha=0.4, label="samples")
    ax.semilogx(line_d, line_pl, "r-", lw=1.5, label="fitted model")
    ax.set_xlabel("T-R separation (m)")
    ax.set_ylabel("path loss (dB)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_qq(quantiles, values, path, ylabel="ordered value", title=""):
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.plot(quantiles, values, ".", ms=3, alpha=0.5)
    # Reference line through the quartiles, the usual probability-plot guide.
    q = np.asarray(quantiles, dtype=float)
    v = np.asarray(values, dtype=float)
    lo, hi = np.quantile(v, [0.25, 0.75])
    qlo, qhi = np.quantile(q, [0.25, 0.75])
    if qhi > qlo:
        slope = (hi - lo) / (qhi - qlo)
        ax.plot(q, lo + slope * (q - qlo), "r--", lw=1.0)
    ax.set_xlabel("standard normal quantile")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_spread_vs_d(distances, values, path, ylabel, title=""):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogx(distances, values, ".", ms=3, alpha=0.5)
    ax.set_xlabel("T-R separation (m)")
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
