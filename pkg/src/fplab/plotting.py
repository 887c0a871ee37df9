"""Matplotlib renderings of the figure data, written to image files."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
COLORS = {"hat": "#b2182b", "tilde": "#2166ac"}
LABELS = {"hat": r"$\hat\pi_d$ (p = 1/2)", "tilde": r"$\tilde\pi_d$ (p = 3/4)"}


def plot_figure1(rows, path: str | Path) -> Path:
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        d = [r.d for r in rows]
        ax.plot(d, [r.ln_d_var_hat for r in rows], "o-", ms=2.5, color=COLORS["hat"], label=LABELS["hat"])
        ax.plot(d, [r.ln_d_var_tilde for r in rows], "s-", ms=2.5, color=COLORS["tilde"], label=LABELS["tilde"])
        ax.set_xlabel("d")
        ax.set_ylabel(r"$\ln(d\,\mathrm{Var})$")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return path


def plot_figure2(rows, path: str | Path) -> Path:
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, (left, right) = plt.subplots(1, 2, figsize=(8.0, 3.2))
        for name in ("hat", "tilde"):
            sel = [r for r in rows if r.estimator == name]
            d = [r.d for r in sel]
            left.fill_between(d, [r.band_lo for r in sel], [r.band_hi for r in sel],
                              color=COLORS[name], alpha=0.3, label=LABELS[name])
            left.plot(d, [r.mean for r in sel], color=COLORS[name], lw=1)
            right.plot(d, [r.median_n for r in sel], "o-", ms=3, color=COLORS[name], label=LABELS[name])
            for r in sel:
                right.annotate(str(r.max_n), (r.d, r.median_n), textcoords="offset points",
                               xytext=(0, 5), ha="center", fontsize=6, color=COLORS[name])
        left.axhline(math.pi, color="k", lw=0.8)
        left.set_xlabel("d")
        left.set_ylabel(r"Ave $\pm$ SD/2")
        left.legend(frameon=False)
        right.set_yscale("log")
        right.set_xlabel("d")
        right.set_ylabel(r"median $N_d$")
        right.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return path
