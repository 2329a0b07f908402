"""Stepped caps, pyramids and invariant layers of the four-cone map.

For ``0 < phi < pi/2`` and ``0 < lambda < 1`` the map with cone angles
``(pi/2 - phi, phi, phi, pi/2 - phi)`` and permutation ``(1 2)`` carries a
family of polygonal invariant curves, the *n-stepped caps*, one for each
``n <= N(lambda, phi)``.  Each cap is a linear embedding of the 4-IET
``f^(n)`` and bounds an invariant polygon, the *n-stepped pyramid*.

Lengths (``eta``, ``l^(n)``, the IET data and the dynamics classifier)
are computed with :class:`fractions.Fraction` whenever both ``lambda`` and
``cos(phi)`` are given exactly; the planar geometry is always float.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import LambdaOutOfRange, NOutOfRange, TCEError
from .geometry import (
    EMPTY,
    EPS_GEOM,
    INSIDE,
    OUTSIDE,
    BOUNDARY,
    Location,
    PlanarPoint,
    Polygon,
    clip_to_cone,
    polygon_contains,
    polygon_contains_many,
    polygon_distance,
)
from .iet import IET, OrbitClassification, Scalar, Verdict, build_iet, classify_2iet, is_exact, scalar
from .tce import TCEParams, cap_tce, sample_box, step_many


@dataclass(frozen=True)
class CapParams:
    phi: float
    lam: Scalar
    cos_phi: Scalar
    eta: Scalar = field(init=False)
    tce: TCEParams = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 < self.phi < math.pi / 2:
            raise TCEError(f"phi must lie in (0, pi/2), got {self.phi}")
        if not 0 < self.lam < 1:
            raise LambdaOutOfRange(f"lambda must lie in (0, 1), got {self.lam}")
        if abs(float(self.cos_phi) - math.cos(self.phi)) > 1e-12:
            raise TCEError(f"cos_phi={self.cos_phi} does not match phi={self.phi}")
        object.__setattr__(self, "eta", 1 - self.lam)
        object.__setattr__(self, "tce", cap_tce(self.phi, float(self.lam)))

    @property
    def exact(self) -> bool:
        return is_exact(self.lam, self.cos_phi)

    @property
    def N(self) -> int:
        return capacity(self)

    def step_const(self) -> Scalar:
        """``2 (1 + cos phi)``, the growth of the cap per step."""
        return 2 * (1 + self.cos_phi)

    def length(self, n: int) -> Scalar:
        """``l^(n) = lambda - 2 n (1 + cos phi) eta``."""
        return self.lam - n * self.step_const() * self.eta

    def domain_length(self, n: int) -> Scalar:
        return 2 * self.length(n) + (4 * n + 1) * self.eta

    def threshold(self, n: int) -> Scalar:
        return threshold(self.cos_phi, n)


def threshold(cos_phi: Scalar, n: int) -> Scalar:
    """Smallest lambda with ``N(lambda, phi) >= n``."""
    return 1 - 1 / (2 * n * (1 + cos_phi) + 1)


def cap_params(phi: float, lam, cos_phi=None) -> CapParams:
    lam = scalar(lam)
    cos_phi = math.cos(phi) if cos_phi is None else scalar(cos_phi)
    return CapParams(float(phi), lam, cos_phi)


def capacity(p: CapParams) -> int:
    """``N = floor(lambda / (2 eta (1 + cos phi)))``."""
    return math.floor(p.lam / (p.eta * p.step_const()))


def _check_n(p: CapParams, n: int, lowest: int = 0) -> None:
    if not lowest <= n <= capacity(p):
        raise NOutOfRange(f"n={n} outside [{lowest}, {capacity(p)}] for phi={p.phi}, lambda={p.lam}")


# -- caps ---------------------------------------------------------------------


@dataclass(frozen=True)
class Cap:
    n: int
    vertices: tuple[PlanarPoint, ...]
    breakpoints: tuple[Scalar, ...]
    length: Scalar
    degenerate: bool = False

    @property
    def domain_length(self) -> Scalar:
        return self.breakpoints[-1]

    def complex_vertices(self) -> list[complex]:
        return [v.to_complex() for v in self.vertices]

    def polyline(self) -> list[PlanarPoint]:
        """Vertices with exact duplicates (from a zero-length end step) collapsed."""
        out: list[PlanarPoint] = []
        for v in self.vertices:
            if not out or v.dist(out[-1]) > 1e-15:
                out.append(v)
        return out


def vertex_sequence(p: CapParams, n: int) -> list[complex]:
    """Run the vertex recurrence ``a_0 .. a_{4n+3}`` in complex arithmetic."""
    eta = float(p.eta)
    c = float(p.cos_phi)
    l = float(p.length(n))
    up, down = eta * cmath.exp(1j * p.phi), eta * cmath.exp(-1j * p.phi)
    a = [complex(n * eta * (1 + c) - 1, n * eta * (1 + c) / math.tan(p.phi))]
    a.append(a[0] + l)
    for k in range(1, 4 * n + 2):
        if k % 2 == 1:
            a.append(a[k] + eta)
        elif k <= 2 * n + 1:
            a.append(a[k] + up)
        else:
            a.append(a[k] + down)
    a.append(a[4 * n + 2] + l)
    return a


def cap_vertices(p: CapParams, n: int) -> Cap:
    _check_n(p, n)
    a = vertex_sequence(p, n)
    l = p.length(n)
    t = [scalar(0) if p.exact else 0.0]
    for k in range(1, 4 * n + 3):
        t.append(l + (k - 1) * p.eta)
    t.append(2 * l + (4 * n + 1) * p.eta)
    return Cap(n, tuple(PlanarPoint.from_complex(z) for z in a), tuple(t), l, l == 0)


def gamma(c: Cap, t: float) -> PlanarPoint:
    """Arc-length parametrised point on the cap."""
    tf = [float(v) for v in c.breakpoints]
    if not 0 <= t < tf[-1]:
        from .errors import OutOfDomain
        raise OutOfDomain(f"t={t} outside [0, {tf[-1]})")
    z = gamma_many(c, np.array([float(t)]))[0]
    return PlanarPoint(float(z.real), float(z.imag))


def gamma_many(c: Cap, ts: np.ndarray) -> np.ndarray:
    tf = np.array([float(v) for v in c.breakpoints])
    a = np.array(c.complex_vertices())
    k = np.searchsorted(tf, ts, side="right") - 1
    k = np.clip(k, 0, len(tf) - 2)
    gap = tf[k + 1] - tf[k]
    # zero-length segments only occur at the ends of a degenerate cap
    frac = np.divide(ts - tf[k], gap, out=np.zeros_like(ts, dtype=float), where=gap > 0)
    return a[k] + frac * (a[k + 1] - a[k])


# -- induced interval exchange ------------------------------------------------


def induced_iet(p: CapParams, n: int) -> IET:
    """The 4-IET ``f^(n)`` carried by the n-stepped cap.

    For ``n = 0`` the two middle intervals vanish and the baseline 2-IET
    with lengths ``(1, lambda)`` is returned on ``[0, 1 + lambda)``.
    Zero-length intervals of a degenerate cap are dropped likewise.
    """
    _check_n(p, n)
    l, eta = p.length(n), p.eta
    if n == 0:
        return build_iet(scalar(0) if p.exact else 0.0, (1 if p.exact else 1.0, p.lam), (1, 0))
    lengths = [l + eta, 2 * n * eta, 2 * n * eta, l]
    shifts = [l + 4 * n * eta, (2 * n - 1) * eta, -(2 * n + 1) * eta, -l - (4 * n + 1) * eta]
    starts = [0, l + eta, l + (2 * n + 1) * eta, l + (4 * n + 1) * eta]
    keep = [j for j in range(4) if lengths[j] > 0]
    images = sorted(keep, key=lambda j: starts[j] + shifts[j])
    perm = tuple(images.index(j) for j in keep)
    zero = scalar(0) if p.exact else 0.0
    return build_iet(zero, [lengths[j] for j in keep], perm)


def iet_translations(p: CapParams, n: int) -> tuple[Scalar, ...]:
    """Translations of ``f^(n)`` written out in closed form."""
    l, eta = p.length(n), p.eta
    return (l + 4 * n * eta, (2 * n - 1) * eta, -(2 * n + 1) * eta, -l - (4 * n + 1) * eta)


# -- verification -------------------------------------------------------------


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def as_dict(self) -> dict:
        return {"identity": self.name, "residual": float(self.residual),
                "tolerance": self.tolerance, "passed": self.passed}


@dataclass
class InvarianceReport:
    n: int
    checks: list[Check]
    degenerate: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def max_residual(self, prefix: str) -> float:
        vals = [c.residual for c in self.checks if c.name.startswith(prefix)]
        return max(vals) if vals else 0.0

    def as_dict(self) -> dict:
        return {"n": self.n, "degenerate": self.degenerate, "passed": self.passed,
                "checks": [c.as_dict() for c in self.checks]}


def vertex_identities(p: CapParams, n: int) -> dict[str, float]:
    """Largest residual of every vertex identity used in the invariance proof."""
    a = vertex_sequence(p, n)
    eta, lam, phi = float(p.eta), float(p.lam), p.phi
    c, s = float(p.cos_phi), math.sin(phi)
    rot_m, rot_p = cmath.exp(-1j * phi), cmath.exp(1j * phi)
    radius = n * eta * (1 + c) / s
    res = {
        "end_left": abs(a[0] - (a[4 * n + 2] - 1)),
        "end_right": abs(a[4 * n + 3] - (a[2] + lam)),
        "a1_shift": abs(a[1] - (a[4 * n + 3] - 1)),
        "a4n1_shift": abs(a[4 * n + 1] - (a[0] + lam)),
        "closed_a2": abs(a[2] - radius * cmath.exp(1j * (phi + math.pi / 2))),
        "closed_a2n2": abs(a[2 * n + 2] - 1j * radius),
        "closed_a4n2": abs(a[4 * n + 2] - radius * cmath.exp(1j * (math.pi / 2 - phi))),
        "comparison": abs(a[2 * n + 2] - rot_m * a[2]),
        "shift_minus": max(abs(rot_m * a[k + 1] - eta - a[2 * n + k]) for k in range(1, 2 * n + 2)),
        "shift_plus": max(abs(rot_p * a[k + 1] - eta - a[k - 2 * n]) for k in range(2 * n + 1, 4 * n + 2)),
    }
    return res


def semiconjugacy_residual(p: CapParams, n: int, samples: int, rng_seed: int = 0,
                           margin: float = 1e-7) -> float:
    """Max of ``|F(gamma(t)) - gamma(f(t))|`` over random ``t`` off the breakpoints."""
    cap = cap_vertices(p, n)
    f = induced_iet(p, n)
    total = float(cap.domain_length)
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    ts = rng.random(samples) * total
    bps = np.array([float(v) for v in cap.breakpoints])
    dist = np.min(np.abs(ts[:, None] - bps[None, :]), axis=1)
    ts = ts[dist > margin * max(total, 1.0)]
    z = gamma_many(cap, ts)
    fx, fy, _ = step_many(p.tce, z.real, z.imag)
    fb = np.array([float(v) for v in f.breaks])
    tau = np.array([float(v) for v in f.tau])
    j = np.clip(np.searchsorted(fb, ts, side="right") - 1, 0, len(tau) - 1)
    w = gamma_many(cap, ts + tau[j])
    if len(ts) == 0:
        return 0.0
    return float(np.max(np.abs((fx + 1j * fy) - w)))


def verify_cap_invariance(p: CapParams, n: int, tol: float = 1e-11, conj_tol: float | None = None,
                          samples: int = 1000, rng_seed: int = 0) -> InvarianceReport:
    _check_n(p, n)
    conj_tol = 10 * tol if conj_tol is None else conj_tol
    checks = [Check(name, r, tol) for name, r in vertex_identities(p, n).items()]
    # exact closed forms of the induced map
    f = induced_iet(p, n)
    if n > 0 and len(f.lengths) == 4:
        want = iet_translations(p, n)
        checks.append(Check("iet_translations", max(abs(float(a - b)) for a, b in zip(f.tau, want)), tol))
    checks.append(Check("iet_total_length", abs(float(f.total - p.domain_length(n))), tol))
    checks.append(Check("semiconjugacy", semiconjugacy_residual(p, n, samples, rng_seed), conj_tol))
    if n >= 1:
        checks.extend(pyramid_checks(p, n, tol))
    return InvarianceReport(n, checks, p.length(n) == 0)


# -- pyramids -----------------------------------------------------------------


@dataclass(frozen=True)
class Pyramid:
    n: int
    polygon: Polygon
    atoms: tuple[Polygon, ...]

    @property
    def is_empty(self) -> bool:
        return self.polygon.is_empty


def pyramid(p: CapParams, n: int) -> Pyramid:
    """``Y^(n)`` and its atoms ``Q_j = Y^(n) n P_j``; ``n = 0`` gives the empty pyramid."""
    _check_n(p, n)
    if n == 0:
        return Pyramid(0, EMPTY, (EMPTY,) * 4)
    cap = cap_vertices(p, n)
    pts = [(-1.0, 0.0)] + list(cap.vertices) + [(float(p.lam), 0.0)]
    poly = Polygon.from_points(pts)
    atoms = tuple(clip_to_cone(poly, p.tce.partition.cone(j)) for j in range(4))
    return Pyramid(n, poly, atoms)


def expected_atoms(p: CapParams, n: int) -> tuple[list[complex], ...]:
    """Vertex lists of ``Q_0 .. Q_3`` as written out in the invariance proof."""
    a = vertex_sequence(p, n)
    lam = float(p.lam)
    return (
        [0, a[4 * n + 2], a[4 * n + 3], lam],
        [0] + a[2 * n + 2: 4 * n + 3],
        [0] + a[2: 2 * n + 3],
        [-1, a[0], a[2], 0],
    )


def expected_images(p: CapParams, n: int) -> tuple[list[complex], ...]:
    """Vertex lists of ``F(Q_0) .. F(Q_3)``."""
    a = vertex_sequence(p, n)
    eta, lam = float(p.eta), float(p.lam)
    return (
        [-1, a[0], a[1], -eta],
        [-eta] + a[1: 2 * n + 2],
        [-eta] + a[2 * n + 1: 4 * n + 2],
        [-eta, a[4 * n + 1], a[4 * n + 3], lam],
    )


def _poly(zs) -> Polygon:
    return Polygon.from_points([(complex(z).real, complex(z).imag) for z in zs])


def pyramid_checks(p: CapParams, n: int, tol: float) -> list[Check]:
    pyr = pyramid(p, n)
    t = p.tce
    checks = []
    area = pyr.polygon.area
    checks.append(Check("atoms_tile_area", abs(area - sum(q.area for q in pyr.atoms)) / area, tol))
    for j, (q, want) in enumerate(zip(pyr.atoms, expected_atoms(p, n))):
        checks.append(Check(f"atom_Q{j}", polygon_distance(q, _poly(want)), 1e3 * tol))
    images = [q.transformed(t.isometry(j)) for j, q in enumerate(pyr.atoms)]
    for j, (img, want) in enumerate(zip(images, expected_images(p, n))):
        checks.append(Check(f"image_FQ{j}", polygon_distance(img, _poly(want)), 1e3 * tol))
    checks.append(Check("images_tile_area", abs(area - sum(q.area for q in images)) / area, tol))
    worst = 0.0
    for img in images:
        for v in img.vertices:
            if polygon_contains(pyr.polygon, v, 1e-9) is Location.OUTSIDE:
                worst = max(worst, _outside_distance(pyr.polygon, v))
    checks.append(Check("images_inside_pyramid", worst, tol))
    return checks


def _outside_distance(poly: Polygon, v: PlanarPoint) -> float:
    from .geometry import _segment_distance
    return min(_segment_distance(v.x, v.y, a.x, a.y, b.x, b.y) for a, b in poly.edges())


# -- layers -------------------------------------------------------------------


def layer_contains(p: CapParams, n: int, z, tol: float = EPS_GEOM) -> Location:
    """Closed layer ``Y^(n)`` minus ``Y^(n-1)`` with a ``tol`` boundary band."""
    _check_n(p, n, lowest=1)
    outer = polygon_contains(pyramid(p, n).polygon, z, tol)
    inner = polygon_contains(pyramid(p, n - 1).polygon, z, tol) if n > 1 else Location.OUTSIDE
    if outer is Location.OUTSIDE or inner is Location.INSIDE:
        return Location.OUTSIDE
    if outer is Location.BOUNDARY or inner is Location.BOUNDARY:
        return Location.BOUNDARY
    return Location.INSIDE


def layer_codes(p: CapParams, xs, ys, tol: float = EPS_GEOM, top: int | None = None) -> np.ndarray:
    """Layer index of each point: ``k`` for the open layer ``k``, ``top + 1``
    outside ``Y^(top)``, and ``-1`` inside any cap's boundary band."""
    top = capacity(p) if top is None else top
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    out = np.full(xs.shape, top + 1, dtype=np.int64)
    band = np.zeros(xs.shape, dtype=bool)
    for k in range(top, 0, -1):
        code = polygon_contains_many(pyramid(p, k).polygon, xs, ys, tol)
        out[code == INSIDE] = k
        band |= code == BOUNDARY
    out[band] = -1
    return out


def sample_layer(p: CapParams, n: int, count: int, rng_seed: int, margin: float = 1e-6) -> np.ndarray:
    """Rejection-sample points well inside layer ``n``."""
    _check_n(p, n, lowest=1)
    outer = pyramid(p, n).polygon
    x0, x1, y0, y1 = outer.bounds()
    got: list[np.ndarray] = []
    have = 0
    seed = rng_seed
    while have < count:
        pts = sample_box((x0, x1, y0, y1), 4 * count, seed)
        codes = layer_codes(p, pts[:, 0], pts[:, 1], margin, top=n)
        good = pts[codes == n]
        got.append(good)
        have += len(good)
        seed += 1_000_003
    return np.concatenate(got)[:count]


@dataclass
class ConfinementResult:
    layer: int
    seeds: int
    iterates: int
    escapes: int
    boundary_visits: int


def confinement(p: CapParams, n: int, seeds: int, iterates: int, tol: float = 1e-8,
                rng_seed: int = 0) -> ConfinementResult:
    """Iterate seeds from the interior of layer ``n`` and count layer escapes.

    An escape is any iterate that lands strictly inside another layer or
    outside ``Y^(n)`` (beyond the ``tol`` band); visits to the band are
    counted separately.
    """
    pts = sample_layer(p, n, seeds, rng_seed)
    xs, ys = pts[:, 0].copy(), pts[:, 1].copy()
    outer = pyramid(p, n).polygon
    inner = pyramid(p, n - 1).polygon if n > 1 else EMPTY
    escapes = visits = 0
    for _ in range(iterates):
        xs, ys, _a = step_many(p.tce, xs, ys)
        co = polygon_contains_many(outer, xs, ys, tol)
        ci = polygon_contains_many(inner, xs, ys, tol)
        escapes += int(np.count_nonzero((co == OUTSIDE) | (ci == INSIDE)))
        visits += int(np.count_nonzero((co == BOUNDARY) | (ci == BOUNDARY)))
    return ConfinementResult(n, seeds, iterates, escapes, visits)


def count_crossings(p: CapParams, xs: np.ndarray, ys: np.ndarray, seed_ids: np.ndarray,
                    tol: float = 1e-8, top: int | None = None) -> int:
    """Number of consecutive record pairs of one seed that sit in different layers."""
    codes = layer_codes(p, xs, ys, tol, top)
    same_seed = seed_ids[1:] == seed_ids[:-1]
    a, b = codes[:-1], codes[1:]
    clean = (a >= 0) & (b >= 0)
    return int(np.count_nonzero(same_seed & clean & (a != b)))


# -- dynamics on the caps -----------------------------------------------------


@dataclass(frozen=True)
class CapClassification:
    n: int
    ratio: Scalar
    result: OrbitClassification
    witness_lambda: Scalar | None = None

    @property
    def verdict(self) -> Verdict:
        return self.result.verdict

    def as_dict(self) -> dict:
        d = self.result.as_dict()
        d["n"] = self.n
        d["ratio"] = str(self.ratio) if isinstance(self.ratio, Fraction) else float(self.ratio)
        if self.witness_lambda is not None:
            wl = self.witness_lambda
            d["witness_lambda"] = str(wl) if isinstance(wl, Fraction) else float(wl)
        return d


def witness_lambda(p: CapParams, n: int, pq: tuple[int, int]) -> Scalar:
    """``(p + K q) / (p + (1 + K) q)`` with ``K = 2 n (1 + cos phi)``."""
    a, b = pq
    k = n * p.step_const()
    return (a + k * b) / (a + (1 + k) * b)


def classify_cap_dynamics(p: CapParams, n: int, qmax: int = 10**6, tol: float = 1e-12) -> CapClassification:
    """Dense or periodic orbits on the n-stepped cap.

    Orbits on the cap are governed by the first return of ``f^(n)`` to its
    first interval, the swap of lengths ``(l^(n), eta)``.
    """
    _check_n(p, n)
    l, eta = p.length(n), p.eta
    if l == 0:
        res = OrbitClassification(Verdict.PERIODIC, 1, (0, 1), p.exact, True)
        return CapClassification(n, l / eta, res, witness_lambda(p, n, (0, 1)))
    res = classify_2iet((l, eta), qmax, tol)
    wl = witness_lambda(p, n, res.witness) if res.verdict is Verdict.PERIODIC else None
    return CapClassification(n, l / eta, res, wl)
