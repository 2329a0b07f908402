"""The three-cone, rotation-free map: attractor, slice maps and trapezium.

With ``d = 1`` and the identity permutation every ``tau_j`` vanishes, so
the map only translates horizontally and each line ``Im z = y`` is
invariant.  On that line it acts as the piecewise translation
``h_y``; restricted to the attractor slice it is a 2- or 3-interval
exchange depending on whether ``y`` is below the critical height ``y*``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadSimplex, CapExceeded, LambdaOutOfRange
from .geometry import EPS_GEOM, Polygon, PlanarPoint, _as_point
from .iet import IET, build_iet
from .tce import TCEParams, flat_tce, step


def _cot(a: float) -> float:
    c = math.cos(a) / math.sin(a)
    return 0.0 if abs(c) < 1e-15 else c


@dataclass(frozen=True)
class FlatParams:
    alpha: tuple[float, float, float]
    lam: float
    eta: float = field(init=False)
    cot0: float = field(init=False, repr=False)
    cot2: float = field(init=False, repr=False)

    def __post_init__(self):
        a = tuple(float(v) for v in self.alpha)
        if len(a) != 3 or any(not 0 < v < math.pi for v in a) or abs(sum(a) - math.pi) > 1e-12:
            raise BadSimplex(f"need three positive angles summing to pi, got {a}")
        if not 0 < self.lam < 1:
            raise LambdaOutOfRange(f"lambda must lie in (0, 1), got {self.lam}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "eta", 1.0 - self.lam)
        object.__setattr__(self, "cot0", _cot(a[0]))
        object.__setattr__(self, "cot2", _cot(a[2]))

    @property
    def tce(self) -> TCEParams:
        return flat_tce(self.alpha, self.lam)

    @property
    def y_star(self) -> float:
        return y_star(self)


def y_star(p: FlatParams) -> float:
    a0, _, a2 = p.alpha
    return p.lam * math.sin(a0) * math.sin(a2) / math.sin(a0 + a2)


def m_contains(p: FlatParams, z, eps: float = EPS_GEOM) -> bool:
    """Membership in the attractor ``((P0 - 1) u (P1 - eta)) n (P2 + lambda)``."""
    z = _as_point(z)
    x, y = z.x, z.y
    if y < -eps:
        return False
    if not x < p.lam - y * p.cot2 + eps:
        return False
    if x > y * p.cot0 - 1.0 - eps:
        return True
    return -p.eta - y * p.cot2 - eps < x < -p.eta + y * p.cot0 + eps


def m_contains_many(p: FlatParams, xs, ys, eps: float = EPS_GEOM) -> np.ndarray:
    """Vectorised :func:`m_contains`."""
    x, y = np.asarray(xs, float), np.asarray(ys, float)
    right = x < p.lam - y * p.cot2 + eps
    upper = x > y * p.cot0 - 1.0 - eps
    middle = (-p.eta - y * p.cot2 - eps < x) & (x < -p.eta + y * p.cot0 + eps)
    return (y >= -eps) & right & (upper | middle)


def h_slice(p: FlatParams, y: float, x: float) -> float:
    """The line map ``h_y``; cases follow the cone boundary convention."""
    if y == 0.0:
        return x - 1.0 if x >= 0.0 else x + p.lam
    if x > y * p.cot0:
        return x - 1.0
    if x <= -y * p.cot2:
        return x + p.lam
    return x - p.eta


class SliceKind(enum.Enum):
    TWO_BOTTOM = "two-bottom"
    THREE = "three"
    TWO_TOP = "two-top"


@dataclass(frozen=True)
class SliceIET:
    y: float
    kind: SliceKind
    iet: IET


def slice_kind(p: FlatParams, y: float, tol: float = 1e-12) -> SliceKind:
    """Decided from the case boundaries, independently of the closed form for y*.

    A right-hand piece shorter than ``tol * lambda`` counts as gone, so the
    rounded value of y* itself gives the two-interval top slice.
    """
    if y == 0:
        return SliceKind.TWO_BOTTOM
    if y * p.cot0 < p.lam - y * p.cot2 - tol * p.lam:
        return SliceKind.THREE
    return SliceKind.TWO_TOP


def slice_iet(p: FlatParams, y: float) -> SliceIET:
    if y < 0:
        raise ValueError("slice height must be non-negative")
    kind = slice_kind(p, y)
    if kind is SliceKind.TWO_BOTTOM:
        f = build_iet(-1.0, (1.0, p.lam), (1, 0))
    elif kind is SliceKind.THREE:
        s = y * (p.cot0 + p.cot2)
        f = build_iet(-1.0 + y * p.cot0, (1.0 - s, s, p.lam - s), (2, 1, 0))
    else:
        f = build_iet(-p.eta - y * p.cot2, (p.eta, p.lam), (1, 0))
    return SliceIET(y, kind, f)


def locate_transition(p: FlatParams, lo: float = 0.0, hi: float | None = None,
                      tol: float = 1e-12) -> float:
    """Bisection for the height where slices stop being 3-IETs."""
    if hi is None:
        hi = 1.0
        while slice_kind(p, hi) is SliceKind.THREE:
            hi *= 2
    lo = max(lo, 1e-300)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if slice_kind(p, mid) is SliceKind.THREE:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def absorb(p: FlatParams, z, cap: int = 10**5, t: TCEParams | None = None) -> tuple[int, PlanarPoint]:
    """Iterate until the orbit enters the attractor; return (steps, landing)."""
    t = t or p.tce
    z = _as_point(z)
    for k in range(cap + 1):
        if m_contains(p, z):
            return k, z
        z = step(t, z)[0]
    raise CapExceeded(f"no absorption within {cap} steps")


def ribbon_index(p: FlatParams, z) -> tuple[int, int]:
    """Predicted ``(atom, n)`` of the ribbon holding ``z``.

    For ``z`` in ``P_0`` the ribbon is ``(P_0 + n) minus (P_0 + n + 1)`` and
    ``F^(n+1) z`` leaves ``P_0``; for ``P_1`` the ribbons are shifted by
    ``eta``; for ``P_2`` by ``-lambda``.
    """
    z = _as_point(z)
    atom = p.tce.partition.atom_of(z)
    x, y = z.x, z.y
    if atom == 0:
        # x - n > y cot0 with n maximal
        return 0, max(0, math.ceil(x - y * p.cot0) - 1)
    if atom == 1:
        return 1, max(0, math.ceil((x + y * p.cot2) / p.eta) - 1)
    # x + n lambda <= -y cot2 with n maximal
    return 2, max(0, math.floor((-y * p.cot2 - x) / p.lam))


@dataclass(frozen=True)
class Strip:
    """Unbounded strip ``left(y) < x < right(y)`` for ``y >= y_min``.

    Lines are ``x = offset - y * slope``; ``divider`` splits the two
    exchanged sub-strips.
    """

    y_min: float
    slope: float
    left: float
    divider: float
    right: float

    def bounds_at(self, y: float) -> tuple[float, float, float]:
        s = y * self.slope
        return self.left - s, self.divider - s, self.right - s


def trapezium_regions(p: FlatParams) -> tuple[Polygon, Strip]:
    ys = y_star(p)
    verts = [
        (-1.0, 0.0),
        (p.lam, 0.0),
        (p.lam - ys * p.cot2, ys),
        (-1.0 + ys * p.cot0, ys),
    ]
    return Polygon.from_points(verts), Strip(ys, p.cot2, -p.eta, 0.0, p.lam)


def m_boundary(p: FlatParams, y_max: float, samples: int = 200) -> dict[str, list[tuple[float, float]]]:
    """Left and right boundary polylines of the attractor up to height ``y_max``.

    Each slice of the attractor is the single interval between
    ``min(-1 + y cot0, -eta - y cot2)`` and ``lambda - y cot2``.
    """
    left, right = [], []
    for i in range(samples + 1):
        y = y_max * i / samples
        left.append((min(-1 + y * p.cot0, -p.eta - y * p.cot2), y))
        right.append((p.lam - y * p.cot2, y))
    return {"left": left, "right": right}
