"""Planar primitives: points, isometries, cones, polygons and clipping.

Everything here works in double precision.  Boundary decisions use a
tolerance band (``EPS_GEOM`` by default) instead of exact predicates, and
cone membership is decided with cross products against the boundary rays,
never with ``atan2``.

Boundary convention: cones are half-open, closed on the lower-angle ray.
A point inside the tolerance band of a ray belongs to the cone *above*
that ray, the apex belongs to the cone whose lower angle is 0, and the
last cone of a partition (upper angle pi) also owns the negative real
axis.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

EPS_GEOM = 1e-9
EMPTY_AREA = 1e-18


@dataclass(frozen=True, slots=True)
class PlanarPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    @classmethod
    def from_complex(cls, z: complex) -> "PlanarPoint":
        return cls(z.real, z.imag)

    def to_complex(self) -> complex:
        return complex(self.x, self.y)

    def __iter__(self):
        yield self.x
        yield self.y

    def dist(self, other) -> float:
        other = _as_point(other)
        return math.hypot(self.x - other.x, self.y - other.y)


def _as_point(p) -> PlanarPoint:
    if isinstance(p, PlanarPoint):
        return p
    if isinstance(p, complex):
        return PlanarPoint(p.real, p.imag)
    x, y = p
    return PlanarPoint(float(x), float(y))


@dataclass(frozen=True)
class Isometry:
    """Orientation preserving isometry ``z -> exp(i*angle) * z + beta``."""

    angle: float
    beta: PlanarPoint = PlanarPoint(0.0, 0.0)
    cos: float = field(init=False, repr=False, compare=False)
    sin: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "beta", _as_point(self.beta))
        # angle 0 must stay an exact translation
        object.__setattr__(self, "cos", 1.0 if self.angle == 0 else math.cos(self.angle))
        object.__setattr__(self, "sin", 0.0 if self.angle == 0 else math.sin(self.angle))

    def __call__(self, p):
        return apply_isometry(self, _as_point(p))

    def compose(self, inner: "Isometry") -> "Isometry":
        """Return ``self o inner``."""
        b = apply_isometry(self, inner.beta)
        return Isometry(_wrap_angle(self.angle + inner.angle), b)

    def inverse(self) -> "Isometry":
        rot = Isometry(-self.angle)
        b = apply_isometry(rot, self.beta)
        return Isometry(-self.angle, PlanarPoint(-b.x, -b.y))


def _wrap_angle(a: float) -> float:
    a = math.fmod(a, 2 * math.pi)
    if a <= -math.pi:
        a += 2 * math.pi
    elif a > math.pi:
        a -= 2 * math.pi
    return a


IDENTITY = Isometry(0.0)


def apply_isometry(m: Isometry, p: PlanarPoint) -> PlanarPoint:
    c, s = m.cos, m.sin
    return PlanarPoint(p.x * c - p.y * s + m.beta.x, p.x * s + p.y * c + m.beta.y)


# -- cones --------------------------------------------------------------------


def _cross(ux: float, uy: float, vx: float, vy: float) -> float:
    return ux * vy - uy * vx


@dataclass(frozen=True)
class Cone:
    lower_angle: float
    upper_angle: float
    apex: PlanarPoint = PlanarPoint(0.0, 0.0)

    def __post_init__(self):
        if not (0.0 <= self.lower_angle < self.upper_angle <= math.pi + 1e-15):
            raise ValueError(f"bad cone angles [{self.lower_angle}, {self.upper_angle}]")
        object.__setattr__(self, "apex", _as_point(self.apex))

    @property
    def closed_above(self) -> bool:
        return abs(self.upper_angle - math.pi) < 1e-15

    def lower_ray(self) -> tuple[float, float]:
        return _unit(self.lower_angle)

    def upper_ray(self) -> tuple[float, float]:
        return _unit(self.upper_angle)


def _unit(theta: float) -> tuple[float, float]:
    if theta == 0.0:
        return 1.0, 0.0
    if abs(theta - math.pi) < 1e-15:
        return -1.0, 0.0
    return math.cos(theta), math.sin(theta)


def cone_contains(c: Cone, p, eps: float = EPS_GEOM) -> bool:
    p = _as_point(p)
    vx, vy = p.x - c.apex.x, p.y - c.apex.y
    if vy < -eps:
        raise ValueError(f"point {p} lies below the apex line of {c}")
    if math.hypot(vx, vy) <= eps:
        return c.lower_angle == 0.0
    lx, ly = c.lower_ray()
    if _cross(lx, ly, vx, vy) < -eps:
        return False
    if c.closed_above:
        return True
    ux, uy = c.upper_ray()
    return _cross(ux, uy, vx, vy) < -eps


@dataclass(frozen=True)
class ConePartition:
    """Cones sharing an apex whose angles tile ``[0, pi]``.

    ``angles`` holds the ``k + 1`` boundary angles ``0 = a_0 < ... < a_k = pi``.
    """

    angles: tuple[float, ...]
    apex: PlanarPoint = PlanarPoint(0.0, 0.0)
    _rays: tuple[tuple[float, float], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = tuple(float(v) for v in self.angles)
        if len(a) < 2 or a[0] != 0.0 or abs(a[-1] - math.pi) > 1e-12:
            raise ValueError("partition angles must run from 0 to pi")
        if any(b <= c for c, b in zip(a, a[1:])):
            raise ValueError("partition angles must increase strictly")
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "apex", _as_point(self.apex))
        object.__setattr__(self, "_rays", tuple(_unit(t) for t in a))

    @classmethod
    def from_widths(cls, widths: Sequence[float], apex=(0.0, 0.0)) -> "ConePartition":
        acc = [0.0]
        for w in widths[:-1]:
            acc.append(acc[-1] + w)
        acc.append(math.pi)
        return cls(tuple(acc), _as_point(apex))

    def __len__(self):
        return len(self.angles) - 1

    def cone(self, j: int) -> Cone:
        return Cone(self.angles[j], self.angles[j + 1], self.apex)

    def atom_of(self, p, eps: float = EPS_GEOM) -> int:
        p = _as_point(p)
        vx, vy = p.x - self.apex.x, p.y - self.apex.y
        if math.hypot(vx, vy) <= eps:
            return 0
        rays = self._rays
        last = len(rays) - 2
        for j in range(last):
            ux, uy = rays[j + 1]
            if ux * vy - uy * vx < -eps:
                return j
        return last

    def atoms_of(self, xs: np.ndarray, ys: np.ndarray, eps: float = EPS_GEOM) -> np.ndarray:
        """Vectorised :meth:`atom_of`; bit-for-bit the same decisions."""
        vx = np.asarray(xs, dtype=float) - self.apex.x
        vy = np.asarray(ys, dtype=float) - self.apex.y
        last = len(self.angles) - 2
        out = np.full(vx.shape, last, dtype=np.int64)
        undecided = np.ones(vx.shape, dtype=bool)
        for j in range(last):
            ux, uy = self._rays[j + 1]
            hit = undecided & (ux * vy - uy * vx < -eps)
            out[hit] = j
            undecided &= ~hit
        apex = np.hypot(vx, vy) <= eps
        out[apex] = 0
        return out


# -- polygons -----------------------------------------------------------------


class Location(enum.Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


def signed_area(pts: Sequence[PlanarPoint]) -> float:
    n = len(pts)
    s = 0.0
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        s += a.x * b.y - b.x * a.y
    return 0.5 * s


@dataclass(frozen=True)
class Polygon:
    """Simple polygon with counterclockwise vertices; no vertices means empty."""

    vertices: tuple[PlanarPoint, ...] = ()

    @classmethod
    def from_points(cls, points: Iterable, dedupe_tol: float = 1e-12) -> "Polygon":
        pts = [_as_point(p) for p in points]
        cleaned: list[PlanarPoint] = []
        for p in pts:
            if not cleaned or p.dist(cleaned[-1]) > dedupe_tol:
                cleaned.append(p)
        while len(cleaned) > 1 and cleaned[0].dist(cleaned[-1]) <= dedupe_tol:
            cleaned.pop()
        if len(cleaned) < 3:
            return EMPTY
        a = signed_area(cleaned)
        if abs(a) < EMPTY_AREA:
            return EMPTY
        if a < 0:
            cleaned.reverse()
        return cls(tuple(cleaned))

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    @property
    def area(self) -> float:
        return signed_area(self.vertices) if self.vertices else 0.0

    def __len__(self):
        return len(self.vertices)

    def edges(self):
        v = self.vertices
        for i in range(len(v)):
            yield v[i], v[(i + 1) % len(v)]

    def transformed(self, m: Isometry) -> "Polygon":
        # isometries keep orientation, so no reordering is needed
        return Polygon(tuple(apply_isometry(m, p) for p in self.vertices))

    def centroid(self) -> PlanarPoint:
        a = self.area
        cx = cy = 0.0
        for p, q in self.edges():
            w = p.x * q.y - q.x * p.y
            cx += (p.x + q.x) * w
            cy += (p.y + q.y) * w
        return PlanarPoint(cx / (6 * a), cy / (6 * a))

    def simplified(self, tol: float = 1e-10) -> "Polygon":
        """Drop vertices that are collinear with their neighbours."""
        v = list(self.vertices)
        changed = True
        while changed and len(v) > 3:
            changed = False
            for i in range(len(v)):
                a, b, c = v[i - 1], v[i], v[(i + 1) % len(v)]
                ab = math.hypot(b.x - a.x, b.y - a.y)
                ac = math.hypot(c.x - a.x, c.y - a.y)
                if ac == 0 or ab == 0:
                    del v[i]
                    changed = True
                    break
                cr = _cross(c.x - a.x, c.y - a.y, b.x - a.x, b.y - a.y)
                dot = (b.x - a.x) * (c.x - a.x) + (b.y - a.y) * (c.y - a.y)
                if abs(cr) / ac <= tol and 0 <= dot <= ac * ac:
                    del v[i]
                    changed = True
                    break
        return Polygon.from_points(v)

    def is_convex(self, tol: float = 1e-10) -> bool:
        v = self.simplified(tol).vertices
        n = len(v)
        for i in range(n):
            a, b, c = v[i - 1], v[i], v[(i + 1) % n]
            turn = _cross(b.x - a.x, b.y - a.y, c.x - b.x, c.y - b.y)
            scale = math.hypot(b.x - a.x, b.y - a.y) * math.hypot(c.x - b.x, c.y - b.y)
            if turn < -tol * max(scale, 1e-300):
                return False
        return True

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [p.x for p in self.vertices]
        ys = [p.y for p in self.vertices]
        return min(xs), max(xs), min(ys), max(ys)

    def as_array(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.vertices], dtype=float).reshape(-1, 2)


EMPTY = Polygon(())


def same_polygon(a: Polygon, b: Polygon, tol: float = 1e-12) -> bool:
    """Vertex-set equality after removing collinear points, up to rotation."""
    va, vb = a.simplified().vertices, b.simplified().vertices
    if len(va) != len(vb):
        return False
    if not va:
        return True
    for shift in range(len(vb)):
        if all(p.dist(vb[(i + shift) % len(vb)]) <= tol for i, p in enumerate(va)):
            return True
    return False


def polygon_distance(a: Polygon, b: Polygon) -> float:
    """Largest vertex mismatch between two polygons (inf if shapes differ)."""
    va, vb = a.simplified().vertices, b.simplified().vertices
    if len(va) != len(vb):
        return math.inf
    if not va:
        return 0.0
    best = math.inf
    for shift in range(len(vb)):
        d = max(p.dist(vb[(i + shift) % len(vb)]) for i, p in enumerate(va))
        best = min(best, d)
    return best


@dataclass(frozen=True)
class DirectedLine:
    point: PlanarPoint
    direction: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "point", _as_point(self.point))

    @classmethod
    def through(cls, p, q) -> "DirectedLine":
        p, q = _as_point(p), _as_point(q)
        return cls(p, (q.x - p.x, q.y - p.y))

    def side(self, p: PlanarPoint) -> float:
        dx, dy = self.direction
        n = math.hypot(dx, dy)
        return _cross(dx, dy, p.x - self.point.x, p.y - self.point.y) / n


def clip_polygon_halfplane(poly: Polygon, boundary: DirectedLine, tol: float = 1e-12) -> Polygon:
    """Intersect ``poly`` with the closed half-plane left of ``boundary``."""
    if poly.is_empty:
        return EMPTY
    v = poly.vertices
    sides = [boundary.side(p) for p in v]
    out: list[PlanarPoint] = []
    n = len(v)
    for i in range(n):
        p, q = v[i], v[(i + 1) % n]
        sp, sq = sides[i], sides[(i + 1) % n]
        if sp >= -tol:
            out.append(p)
        if (sp >= -tol) != (sq >= -tol) and (abs(sp) > tol or abs(sq) > tol):
            t = sp / (sp - sq)
            if 0.0 < t < 1.0:
                out.append(PlanarPoint(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)))
    return Polygon.from_points(out)


def clip_to_cone(poly: Polygon, c: Cone) -> Polygon:
    """``poly`` intersected with the closed cone ``c`` (must open at most pi)."""
    lx, ly = c.lower_ray()
    ux, uy = c.upper_ray()
    out = clip_polygon_halfplane(poly, DirectedLine(c.apex, (lx, ly)))
    out = clip_polygon_halfplane(out, DirectedLine(c.apex, (-ux, -uy)))
    return out


def clip_to_convex(poly: Polygon, clip: Polygon) -> Polygon:
    out = poly
    for p, q in clip.edges():
        out = clip_polygon_halfplane(out, DirectedLine.through(p, q))
        if out.is_empty:
            break
    return out


def _segment_distance(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    ll = dx * dx + dy * dy
    if ll == 0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / ll
    t = min(1.0, max(0.0, t))
    return math.hypot(px - ax - t * dx, py - ay - t * dy)


def polygon_contains(poly: Polygon, p, tol: float = EPS_GEOM) -> Location:
    if poly.is_empty:
        return Location.OUTSIDE
    p = _as_point(p)
    inside = False
    for a, b in poly.edges():
        if _segment_distance(p.x, p.y, a.x, a.y, b.x, b.y) <= tol:
            return Location.BOUNDARY
        if (a.y > p.y) != (b.y > p.y):
            xcross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y)
            if p.x < xcross:
                inside = not inside
    return Location.INSIDE if inside else Location.OUTSIDE


INSIDE, BOUNDARY, OUTSIDE = 1, 0, -1


def polygon_contains_many(poly: Polygon, xs, ys, tol: float = EPS_GEOM) -> np.ndarray:
    """Vectorised :func:`polygon_contains` returning +1 / 0 / -1 codes."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if poly.is_empty:
        return np.full(xs.shape, OUTSIDE, dtype=np.int8)
    inside = np.zeros(xs.shape, dtype=bool)
    near = np.zeros(xs.shape, dtype=bool)
    for a, b in poly.edges():
        dx, dy = b.x - a.x, b.y - a.y
        ll = dx * dx + dy * dy
        t = np.clip(((xs - a.x) * dx + (ys - a.y) * dy) / ll, 0.0, 1.0)
        near |= np.hypot(xs - a.x - t * dx, ys - a.y - t * dy) <= tol
        if dy != 0.0:
            crosses = (a.y > ys) != (b.y > ys)
            xcross = a.x + (ys - a.y) * dx / dy
            inside ^= crosses & (xs < xcross)
    out = np.where(inside, INSIDE, OUTSIDE).astype(np.int8)
    out[near] = BOUNDARY
    return out


def location_code(loc: Location) -> int:
    return {Location.INSIDE: INSIDE, Location.BOUNDARY: BOUNDARY, Location.OUTSIDE: OUTSIDE}[loc]


def fit_isometry(src: np.ndarray, dst: np.ndarray) -> tuple[Isometry, float]:
    """Least-squares rotation plus translation taking ``src`` rows to ``dst`` rows.

    Returns the isometry and the largest pointwise residual.
    """
    zs = src[:, 0] + 1j * src[:, 1]
    zd = dst[:, 0] + 1j * dst[:, 1]
    cs, cd = zs.mean(), zd.mean()
    h = np.sum((zd - cd) * np.conj(zs - cs))
    angle = float(np.angle(h)) if abs(h) > 0 else 0.0
    rot = complex(math.cos(angle), math.sin(angle))
    beta = cd - rot * cs
    m = Isometry(angle, PlanarPoint(beta.real, beta.imag))
    fitted = rot * zs + beta
    return m, float(np.max(np.abs(fitted - zd))) if len(zs) else 0.0


def convex_hull(points: np.ndarray) -> Polygon:
    """Andrew's monotone chain; returns a counterclockwise polygon."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=float).tolist())))
    if len(pts) < 3:
        return EMPTY

    def half(seq):
        h: list = []
        for p in seq:
            while len(h) >= 2 and _cross(h[-1][0] - h[-2][0], h[-1][1] - h[-2][1],
                                         p[0] - h[-2][0], p[1] - h[-2][1]) <= 0:
                h.pop()
            h.append(p)
        return h

    lower, upper = half(pts), half(reversed(pts))
    return Polygon.from_points(lower[:-1] + upper[:-1])
