"""PNG figures drawn with matplotlib's non-interactive backend."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .svg import PALETTE  # noqa: E402

# fixed metadata keeps repeated renders byte-identical
_META = {"Software": None}


def _save(fig, target) -> None:
    fig.savefig(target, format="png", dpi=150, metadata=_META)
    plt.close(fig)


def orbit_figure(target, x, y, atom, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(8, 5))
    colors = np.array(PALETTE)[np.asarray(atom) % len(PALETTE)]
    ax.scatter(x, y, s=0.05, c=colors, linewidths=0, rasterized=True)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    _save(fig, target)


def caps_figure(target, caps: list[np.ndarray], images: list[np.ndarray] | None = None,
                baseline: tuple[float, float] = (-1.0, 1.0)) -> None:
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.plot(baseline, (0, 0), color="black", lw=1)
    for k, pts in enumerate(caps):
        ax.plot(pts[:, 0], pts[:, 1], color=PALETTE[k % len(PALETTE)], lw=1.2, label=f"n={k + 1}")
    for k, pts in enumerate(images or []):
        ax.plot(pts[:, 0], pts[:, 1], color=PALETTE[k % len(PALETTE)], lw=0.8, ls="--")
    ax.set_aspect("equal")
    if caps:
        ax.legend(loc="upper right", fontsize=8)
    _save(fig, target)


def cells_figure(target, polygons: list[np.ndarray], points: list[np.ndarray] | None = None) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    for k, pts in enumerate(polygons):
        if len(pts):
            ax.fill(pts[:, 0], pts[:, 1], color=PALETTE[k % len(PALETTE)], alpha=0.4, lw=0.5, ec="black")
    for k, pts in enumerate(points or []):
        if len(pts):
            ax.scatter(pts[:, 0], pts[:, 1], s=0.1, color=PALETTE[k % len(PALETTE)], linewidths=0, rasterized=True)
    ax.set_aspect("equal")
    _save(fig, target)


def histogram_figure(target, values, xlabel: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(values, bins=50, color=PALETTE[0])
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    _save(fig, target)
