"""First-return maps, boundary interval exchanges and partition refinement.

Return maps are explored by sampling: a lattice of points in a polygonal
region is iterated until each point comes back, points are grouped by
return time and itinerary, and one isometry is fitted per group.  Points
that never come back within the step budget go to a ``lost`` bucket, since
the return partition need not be finite.

Refinement is analytic: cells are cut by clipping against the images of
the base partition, with :mod:`shapely` doing the polygon intersections
because refined cells need not stay convex.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import Polygon as ShapelyPolygon

from .errors import NotAnIET
from .geometry import (
    BOUNDARY,
    IDENTITY,
    INSIDE,
    Isometry,
    Polygon,
    fit_isometry,
    polygon_contains_many,
)
from .iet import IET, build_iet
from .tce import TCEParams, step_many

log = logging.getLogger(__name__)

CELL_TOL = 1e-9
_HASH_MUL = np.uint64(1_000_003)


# -- sampled first return -----------------------------------------------------


@dataclass
class ReturnCell:
    itinerary: tuple[int, ...]
    return_time: int
    sample_points: np.ndarray
    image_points: np.ndarray
    fitted_isometry: Isometry | None
    residual: float
    area: float = 0.0

    @property
    def fitted(self) -> bool:
        return self.fitted_isometry is not None

    @property
    def n_samples(self) -> int:
        return len(self.sample_points)

    def as_dict(self) -> dict:
        m = self.fitted_isometry
        return {
            "itinerary": list(self.itinerary),
            "return_time": self.return_time,
            "samples": self.n_samples,
            "area": self.area,
            "isometry": None if m is None else {"angle": m.angle, "beta": [m.beta.x, m.beta.y]},
            "residual": self.residual,
        }


@dataclass
class ReturnMap:
    region: Polygon
    cells: list[ReturnCell]
    lost: np.ndarray
    total_samples: int
    max_steps: int

    @property
    def lost_fraction(self) -> float:
        return len(self.lost) / self.total_samples if self.total_samples else 0.0

    @property
    def lost_area(self) -> float:
        return self.lost_fraction * self.region.area

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)

    def as_dict(self) -> dict:
        return {
            "samples": self.total_samples,
            "max_steps": self.max_steps,
            "lost": int(len(self.lost)),
            "lost_fraction": self.lost_fraction,
            "cells": [c.as_dict() for c in self.cells],
        }


def lattice_points(region: Polygon, grid: int, tol: float = 1e-12) -> np.ndarray:
    """Cell-centred ``grid x grid`` lattice over the bounding box, kept if inside."""
    if grid < 2:
        raise ValueError("grid must be at least 2")
    x0, x1, y0, y1 = region.bounds()
    u = (np.arange(grid) + 0.5) / grid
    xs, ys = np.meshgrid(x0 + (x1 - x0) * u, y0 + (y1 - y0) * u, indexing="xy")
    xs, ys = xs.ravel(), ys.ravel()
    keep = polygon_contains_many(region, xs, ys, tol) == INSIDE
    return np.column_stack([xs[keep], ys[keep]])


def itinerary_of(t: TCEParams, p, steps: int) -> tuple[int, ...]:
    xs, ys = np.array([float(p[0])]), np.array([float(p[1])])
    word = []
    for _ in range(steps):
        xs, ys, j = step_many(t, xs, ys)
        word.append(int(j[0]))
    return tuple(word)


def itinerary_isometry(t: TCEParams, word) -> Isometry:
    """Composition of the atom isometries along ``word`` (first letter acts first)."""
    m = IDENTITY
    for j in word:
        m = t.isometry(j).compose(m)
    return m


def _noncollinear(pts: np.ndarray, tol: float = 1e-12) -> bool:
    if len(pts) < 3:
        return False
    c = pts - pts.mean(axis=0)
    s = np.linalg.svd(c, compute_uv=False)
    return bool(s[-1] > tol * max(s[0], 1e-300))


def first_return_map(t: TCEParams, region: Polygon, grid: int = 500, max_steps: int = 10**5,
                     cell_tol: float = CELL_TOL, points: np.ndarray | None = None) -> ReturnMap:
    """Sample the first return map of the TCE to ``region``.

    Samples are grouped by ``(return_time, itinerary)``; an itinerary is
    identified by a rolling 64-bit hash and the word itself is recovered from
    one representative.  Groups of at least three non-collinear samples get a
    least-squares isometry with its worst residual; smaller groups are left
    unfitted.  Groups whose residual exceeds ``cell_tol`` are logged, as that
    points at a hash collision or a grouping tolerance problem.
    """
    pts = lattice_points(region, grid) if points is None else np.asarray(points, float)
    n = len(pts)
    xs, ys = pts[:, 0].copy(), pts[:, 1].copy()
    h = np.zeros(n, dtype=np.uint64)
    h2 = np.zeros(n, dtype=np.uint64)
    out_x, out_y = np.empty(n), np.empty(n)
    rtime = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    with np.errstate(over="ignore"):
        for k in range(1, max_steps + 1):
            if not len(active):
                break
            nx, ny, j = step_many(t, xs[active], ys[active])
            code = j.astype(np.uint64) + np.uint64(1)
            h[active] = h[active] * _HASH_MUL + code
            h2[active] = (h2[active] ^ code) * np.uint64(0x100000001B3)
            xs[active], ys[active] = nx, ny
            back = polygon_contains_many(region, nx, ny, 1e-12) >= BOUNDARY
            done = active[back]
            out_x[done], out_y[done], rtime[done] = nx[back], ny[back], k
            active = active[~back]
    returned = rtime > 0
    lost = pts[~returned]
    idx = np.flatnonzero(returned)
    keys = np.stack([rtime[idx].astype(np.uint64), h[idx], h2[idx]], axis=1)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    cells = []
    for g in range(inverse.max() + 1 if len(idx) else 0):
        members = idx[inverse == g]
        src = pts[members]
        dst = np.column_stack([out_x[members], out_y[members]])
        word = itinerary_of(t, src[0], int(rtime[members[0]]))
        if _noncollinear(src):
            m, res = fit_isometry(src, dst)
            if res > cell_tol:
                log.warning("cell %s: isometry residual %.3g exceeds %.3g", word[:12], res, cell_tol)
        else:
            m, res = None, math.nan
        area = len(members) / n * region.area if n else 0.0
        cells.append(ReturnCell(word, int(rtime[members[0]]), src, dst, m, res, area))
    cells.sort(key=lambda c: (c.return_time, c.itinerary))
    return ReturnMap(region, cells, lost, n, max_steps)


# -- boundary edges -----------------------------------------------------------


@dataclass(frozen=True)
class EdgeIET:
    y: float
    x0: float
    x1: float
    iet: IET | None
    translations: tuple[float, ...]
    breakpoints: tuple[float, ...]
    lost: int = 0

    @property
    def is_two_interval(self) -> bool:
        return self.iet is not None and self.iet.d == 2

    def as_dict(self) -> dict:
        return {
            "y": self.y, "x0": self.x0, "x1": self.x1,
            "breakpoints": list(self.breakpoints),
            "translations": list(self.translations),
            "iet": None if self.iet is None else self.iet.as_dict(),
            "lost": self.lost,
        }


def _edge_return(t: TCEParams, xs: np.ndarray, y: float, x0: float, x1: float,
                 max_steps: int, tol: float) -> np.ndarray:
    """Horizontal displacement at the first return to the segment, NaN if none.

    ``tol`` bounds the drift off the line; along the line the segment is the
    half-open ``[x0, x1)`` up to rounding, so breakpoints are not biased.
    """
    slack = 1e-13 * max(1.0, abs(x0), abs(x1))
    px, py = xs.copy(), np.full(xs.shape, float(y))
    shift = np.full(xs.shape, np.nan)
    active = np.arange(len(xs))
    for _ in range(max_steps):
        if not len(active):
            break
        nx, ny, _j = step_many(t, px[active], py[active])
        px[active], py[active] = nx, ny
        back = (np.abs(ny - y) <= tol) & (nx >= x0 - slack) & (nx < x1 - slack)
        shift[active[back]] = nx[back] - xs[active[back]]
        active = active[~back]
    return shift


def edge_iet(t: TCEParams, x0: float, x1: float, y: float, samples: int = 2000,
             max_steps: int = 10**5, tol: float = 1e-9, strict: bool = False) -> EdgeIET:
    """Induced 1-D map on the horizontal segment ``[x0, x1) x {y}``.

    The segment must lie on an invariant curve for the answer to be an
    interval exchange.  Samples are grouped into runs of equal translation
    and each change of run is bisected to a breakpoint.  More pieces than two
    are logged (or raised with ``strict``) since only 2-IETs are expected.
    """
    xs = x0 + (x1 - x0) * (np.arange(samples) + 0.5) / samples
    shift = _edge_return(t, xs, y, x0, x1, max_steps, tol)
    lost = int(np.count_nonzero(np.isnan(shift)))
    ok = ~np.isnan(shift)
    xs, shift = xs[ok], shift[ok]
    if not len(xs):
        log.warning("edge y=%s: no sample returned within %d steps", y, max_steps)
        return EdgeIET(float(y), float(x0), float(x1), None, (), (), lost)
    scale = max(1.0, x1 - x0)
    runs = [(xs[0], shift[0])]
    breaks = []
    for i in range(1, len(xs)):
        if abs(shift[i] - runs[-1][1]) > 1e3 * tol * scale:
            lo, hi, s_lo = xs[i - 1], xs[i], runs[-1][1]
            for _ in range(60):
                if hi - lo <= 1e-14 * scale:
                    break
                mid = 0.5 * (lo + hi)
                s = _edge_return(t, np.array([mid]), y, x0, x1, max_steps, tol)[0]
                if abs(s - s_lo) <= 1e3 * tol * scale:
                    lo = mid
                else:
                    hi = mid
            breaks.append(float(0.5 * (lo + hi)))
            runs.append((xs[i], shift[i]))
    trans = tuple(float(s) for _, s in runs)
    cuts = [x0] + breaks + [x1]
    lengths = [b - a for a, b in zip(cuts, cuts[1:])]
    if len(runs) != 2:
        msg = f"edge y={y}: {len(runs)} pieces where a 2-IET was expected"
        if strict:
            raise NotAnIET(msg)
        log.warning(msg)
    try:
        starts = [c + s for c, s in zip(cuts, trans)]
        order = sorted(range(len(starts)), key=lambda i: starts[i])
        perm = [0] * len(order)
        for rank, i in enumerate(order):
            perm[i] = rank
        f = build_iet(x0, lengths, perm)
    except ValueError:
        f = None
    return EdgeIET(float(y), float(x0), float(x1), f, trans, tuple(breaks), lost)


def horizontal_edges(region: Polygon, tol: float = 1e-12) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    """``(x0, x1, y)`` of the bottom and top horizontal edges."""
    v = region.simplified().vertices
    flat = [(min(a.x, b.x), max(a.x, b.x), a.y) for a, b in zip(v, v[1:] + v[:1])
            if abs(a.y - b.y) <= tol]
    if not flat:
        raise ValueError("region has no horizontal edge")
    bottom = min(flat, key=lambda e: e[2])
    top = max(flat, key=lambda e: e[2])
    if len(flat) < 2 or bottom[2] == top[2]:
        raise ValueError("region needs distinct horizontal top and bottom edges")
    return bottom, top


def boundary_edge_iets(t: TCEParams, region, samples: int = 2000, max_steps: int = 10**5,
                       tol: float = 1e-9) -> tuple[EdgeIET, EdgeIET]:
    """Induced maps on the bottom and top edges of a trapezoid.

    ``region`` is a :class:`Polygon` with horizontal bottom and top edges, or
    an explicit pair ``((x0, x1, y_bottom), (x0, x1, y_top))``; a pair with
    equal heights describes a zero-height region.
    """
    if isinstance(region, Polygon):
        bottom, top = horizontal_edges(region)
    else:
        bottom, top = region
    return (edge_iet(t, *bottom, samples=samples, max_steps=max_steps, tol=tol),
            edge_iet(t, *top, samples=samples, max_steps=max_steps, tol=tol))


# -- analytic refinement ------------------------------------------------------


@dataclass
class RefinedCell:
    label: tuple[int, ...]
    polygon: Polygon
    area: float
    convex: bool
    isometry: Isometry = field(repr=False, default=IDENTITY)

    def as_dict(self) -> dict:
        return {"label": list(self.label), "area": self.area, "convex": self.convex,
                "vertices": self.polygon.as_array().tolist()}


@dataclass
class RefinementReport:
    depth: int
    cells: list[RefinedCell]
    unresolved_area: float
    base_area: float

    @property
    def convex_flags(self) -> list[bool]:
        return [c.convex for c in self.cells]

    @property
    def all_convex(self) -> bool:
        return all(self.convex_flags)

    def as_dict(self) -> dict:
        return {"depth": self.depth, "unresolved_area": self.unresolved_area,
                "base_area": self.base_area, "all_convex": self.all_convex,
                "cells": [c.as_dict() for c in self.cells]}


def _to_shapely(p: Polygon) -> ShapelyPolygon:
    return ShapelyPolygon(p.as_array())


def _parts(geom) -> list[ShapelyPolygon]:
    if geom.is_empty:
        return []
    if geom.geom_type == "Polygon":
        return [geom]
    return [g for g in getattr(geom, "geoms", []) if g.geom_type == "Polygon" and not g.is_empty]


def _from_shapely(g: ShapelyPolygon) -> Polygon:
    return Polygon.from_points(list(g.exterior.coords)[:-1])


def _is_convex(g: ShapelyPolygon, tol: float = 1e-9) -> bool:
    if len(g.interiors):
        return False
    return g.convex_hull.area - g.area <= tol * max(g.area, 1e-300)


def _transform(g: ShapelyPolygon, m: Isometry) -> ShapelyPolygon:
    return shapely.affinity.affine_transform(g, [m.cos, -m.sin, m.sin, m.cos, m.beta.x, m.beta.y])


def _cone_polygons(t: TCEParams, radius: float) -> list[ShapelyPolygon]:
    """Cones truncated to a disc-sized box, large enough to contain all cells."""
    part = t.partition
    out = []
    for j in range(len(part)):
        c = part.cone(j)
        angles = np.linspace(c.lower_angle, c.upper_angle, 8)
        ring = [(0.0, 0.0)] + [(radius * math.cos(a), radius * math.sin(a)) for a in angles]
        out.append(ShapelyPolygon(ring))
    return out


def refine(t: TCEParams, base_partition: list[Polygon], depth: int, sliver: float = 1e-12) -> RefinementReport:
    """Dynamical refinement of ``base_partition`` to the given depth.

    A depth-``k`` cell labelled ``(i_0, ..., i_k)`` is the set of points whose
    ``m``-th iterate lies in base cell ``i_m`` for ``m <= k``.  Each cell is
    carried along with the isometry ``F^k`` that acts on it; the next level
    splits ``F^k(cell)`` along the cones, pushes each piece forward and
    intersects the result with every base cell.  Pieces below ``sliver`` area
    and mass that leaves the base partition go to ``unresolved_area``.
    """
    base = [_to_shapely(p) for p in base_partition]
    base_area = float(sum(g.area for g in base))
    radius = 0.0
    for p in base_partition:
        x0, x1, y0, y1 = p.bounds()
        radius = max(radius, abs(x0), abs(x1), abs(y1))
    radius = 4.0 * (radius + 2.0)
    cones = _cone_polygons(t, radius)
    # (label, domain, image under m, m)
    cells = [((i,), g, g, IDENTITY) for i, g in enumerate(base) if not g.is_empty]
    unresolved = 0.0
    for _ in range(depth):
        nxt = []
        for label, dom, img, m in cells:
            for j, cone in enumerate(cones):
                for piece in _parts(img.intersection(cone)):
                    m2 = t.isometry(j).compose(m)
                    moved = _transform(piece, t.isometry(j))
                    covered = 0.0
                    for i, b in enumerate(base):
                        for part in _parts(moved.intersection(b)):
                            covered += part.area
                            if part.area < sliver:
                                unresolved += part.area
                                continue
                            back = _transform(part, m2.inverse())
                            nxt.append((label + (i,), back, part, m2))
                    unresolved += max(0.0, piece.area - covered)
        cells = nxt
    out = []
    for label, dom, _img, m in cells:
        out.append(RefinedCell(label, _from_shapely(dom), float(dom.area), _is_convex(dom), m))
    out.sort(key=lambda c: c.label)
    return RefinementReport(depth, out, unresolved, base_area)


def first_convex_depth(t: TCEParams, base_partition: list[Polygon], max_depth: int = 8) -> int | None:
    """Smallest depth at which every refined cell is convex, if any up to ``max_depth``."""
    for k in range(max_depth + 1):
        if refine(t, base_partition, k).all_convex:
            return k
    return None
