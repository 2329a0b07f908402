"""Minimal SVG writer: circles, polylines and polygons in world coordinates.

Output is plain geometry with fixed-precision numbers, so identical inputs
give byte-identical files and the files diff cleanly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
MAX_POINTS = 200_000


@dataclass
class Canvas:
    """World box ``[x0, x1] x [y0, y1]`` mapped to a ``width``-pixel wide image.

    Pixel coordinates are ``px = margin + (x - x0) * scale`` and
    ``py = margin + (y1 - y) * scale`` with ``scale = width / (x1 - x0)``.
    """

    box: tuple[float, float, float, float]
    width: int = 800
    margin: int = 10
    items: list[str] = field(default_factory=list)

    def __post_init__(self):
        x0, x1, y0, y1 = self.box
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate drawing box {self.box}")
        self.scale = self.width / (x1 - x0)
        self.height = int(round((y1 - y0) * self.scale))

    def _px(self, xs, ys):
        x0, _, _, y1 = self.box
        xs, ys = np.asarray(xs, float), np.asarray(ys, float)
        return self.margin + (xs - x0) * self.scale, self.margin + (y1 - ys) * self.scale

    def points(self, xs, ys, color: str = "#000000", r: float = 0.3, max_points: int = MAX_POINTS):
        xs, ys = np.asarray(xs, float), np.asarray(ys, float)
        if len(xs) > max_points:
            # deterministic thinning by a fixed stride
            stride = -(-len(xs) // max_points)
            xs, ys = xs[::stride], ys[::stride]
        px, py = self._px(xs, ys)
        body = "".join(f'<circle cx="{a:.3f}" cy="{b:.3f}" r="{r}"/>' for a, b in zip(px, py))
        self.items.append(f'<g fill="{color}" stroke="none">{body}</g>')

    def polyline(self, pts, color: str = "#000000", width: float = 1.0, closed: bool = False):
        pts = np.asarray(pts, float).reshape(-1, 2)
        if not len(pts):
            return
        px, py = self._px(pts[:, 0], pts[:, 1])
        coords = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(px, py))
        tag = "polygon" if closed else "polyline"
        self.items.append(f'<{tag} points="{coords}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def polygon(self, pts, fill: str, opacity: float = 0.35, stroke: str = "#000000"):
        pts = np.asarray(pts, float).reshape(-1, 2)
        if not len(pts):
            return
        px, py = self._px(pts[:, 0], pts[:, 1])
        coords = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(px, py))
        self.items.append(f'<polygon points="{coords}" fill="{fill}" fill-opacity="{opacity}" '
                          f'stroke="{stroke}" stroke-width="0.5"/>')

    def render(self) -> str:
        x0, x1, y0, y1 = self.box
        w, h = self.width + 2 * self.margin, self.height + 2 * self.margin
        header = (f"<!-- world box x=[{x0!r}, {x1!r}] y=[{y0!r}, {y1!r}]; "
                  f"px = {self.margin} + (x - {x0!r}) * {self.scale!r}; "
                  f"py = {self.margin} + ({y1!r} - y) * {self.scale!r} -->")
        return "\n".join([
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
            header,
            f'<rect width="{w}" height="{h}" fill="#ffffff"/>',
            *self.items,
            "</svg>",
            "",
        ])


def padded_box(xs, ys, pad: float = 0.05) -> tuple[float, float, float, float]:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
    dx = max(x1 - x0, 1e-9) * pad
    dy = max(y1 - y0, 1e-9) * pad
    return float(x0 - dx), float(x1 + dx), float(min(y0 - dy, 0.0)), float(y1 + dy)
