"""Figures written next to the CSV outputs of the command-line tool."""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps repeated runs byte-stable
_META = {"Software": None}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)


def plot_histogram(hist, path, title: str = "", refined=None) -> None:
    """Bar chart of pooled pole locations, with an optional zoomed inset."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.stairs(hist.counts, hist.edges, fill=True, alpha=0.7)
    ax.set_xlabel("Re z")
    ax.set_ylabel("poles")
    if title:
        ax.set_title(title)
    if refined is not None and refined.total:
        inset = ax.inset_axes([0.55, 0.5, 0.4, 0.4])
        inset.stairs(refined.counts, refined.edges, fill=True, color="C1")
        inset.set_title(f"peak {refined.peak:.5f}", fontsize=8)
        inset.tick_params(labelsize=7)
    _save(fig, path)


def plot_curves(x: Sequence[float], curves: Mapping[str, Sequence[float]], path, title: str = "",
                ylim: tuple[float, float] | None = None) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    styles = ["k-", "C0--", "C1:", "C2-.", "C3-"]
    for (label, y), st in zip(curves.items(), styles * 4):
        ax.plot(x, y, st, label=label)
    ax.set_xlabel("x")
    ax.set_ylabel("y(x)")
    if ylim is not None:
        ax.set_ylim(*ylim)
    if title:
        ax.set_title(title)
    ax.legend()
    _save(fig, path)


def plot_ratios(reports: Mapping[str, object], path, title: str = "") -> None:
    """Predicted / exact coefficient ratios against the coefficient index."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, rep in reports.items():
        idx = [e.index for e in rep.entries if e.ratio is not None]
        ax.plot(idx, [float(e.ratio) for e in rep.entries if e.ratio is not None], "o-", label=label)
    ax.axhline(1.0, color="grey", lw=0.8)
    ax.set_xlabel("coefficient index")
    ax.set_ylabel("predicted / exact")
    if title:
        ax.set_title(title)
    ax.legend()
    _save(fig, path)


def plot_residues(orders: Sequence[int], residues: Sequence[float], path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.asarray(orders), np.abs(np.asarray(residues)), "o-")
    ax.set_xlabel("order")
    ax.set_ylabel("|residue| of pole nearest 1")
    if title:
        ax.set_title(title)
    _save(fig, path)
