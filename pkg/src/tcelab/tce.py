"""Translated cone exchanges on the closed upper half-plane.

The cones ``P_0 .. P_{d+1}`` share the origin as apex and have opening
angles ``alpha``.  The middle cones are rotated by ``tau_j`` and shifted
by ``-eta``; the end cones are only translated, ``P_0`` by ``-1`` and
``P_{d+1}`` by ``+lambda``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadPermutation, BadSimplex, BelowBaseline, LambdaOutOfRange, OrbitDiverged
from .geometry import EPS_GEOM, ConePartition, Isometry, PlanarPoint, _as_point
from .iet import parse_cycles, translations

DIVERGENCE_BOUND = 1e6


@dataclass(frozen=True)
class TCEParams:
    d: int
    alpha: tuple[float, ...]
    sigma: tuple[int, ...]
    lam: float
    eps: float = EPS_GEOM
    eta: float = field(init=False)
    tau: tuple[float, ...] = field(init=False)
    beta: tuple[float, ...] = field(init=False)
    partition: ConePartition = field(init=False, repr=False)
    _cos: np.ndarray = field(init=False, repr=False, compare=False)
    _sin: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        set_ = object.__setattr__
        eta = 1.0 - self.lam
        tau = tuple(float(t) for t in translations(self.alpha, self.sigma))
        # tau of the end cones is exactly zero because sigma fixes them
        tau = (0.0,) + tau[1:-1] + (0.0,)
        beta = (-1.0,) + (-eta,) * self.d + (self.lam,)
        set_(self, "eta", eta)
        set_(self, "tau", tau)
        set_(self, "beta", beta)
        set_(self, "partition", ConePartition.from_widths(self.alpha))
        set_(self, "_cos", np.array([1.0 if t == 0 else math.cos(t) for t in tau]))
        set_(self, "_sin", np.array([0.0 if t == 0 else math.sin(t) for t in tau]))

    @property
    def n_atoms(self) -> int:
        return self.d + 2

    def isometry(self, j: int) -> Isometry:
        return Isometry(self.tau[j], PlanarPoint(self.beta[j], 0.0))


def build_tce(d: int, alpha: Sequence[float], sigma, lam: float, eps: float = EPS_GEOM) -> TCEParams:
    """Validate parameters and return the map.

    ``sigma`` is either an image list or cycle notation such as ``"(1 2)"``.
    """
    if d < 1:
        raise BadSimplex(f"d must be at least 1, got {d}")
    alpha = tuple(float(a) for a in alpha)
    if len(alpha) != d + 2:
        raise BadSimplex(f"expected {d + 2} cone angles, got {len(alpha)}")
    if any(not (0.0 < a < math.pi) for a in alpha):
        raise BadSimplex(f"cone angles must lie in (0, pi): {alpha}")
    if abs(sum(alpha) - math.pi) > 1e-12:
        raise BadSimplex(f"cone angles sum to {sum(alpha)}, not pi")
    if isinstance(sigma, str):
        try:
            sigma = parse_cycles(sigma, d + 2)
        except ValueError as exc:
            raise BadPermutation(str(exc)) from exc
    sigma = tuple(int(s) for s in sigma)
    if len(sigma) != d + 2 or sorted(sigma) != list(range(d + 2)):
        raise BadPermutation(f"{sigma} is not a permutation of 0..{d + 1}")
    if sigma[0] != 0 or sigma[-1] != d + 1:
        raise BadPermutation(f"sigma must fix 0 and {d + 1}: {sigma}")
    if not (0.0 < lam < 1.0):
        raise LambdaOutOfRange(f"lambda must lie in (0, 1), got {lam}")
    return TCEParams(d, alpha, sigma, float(lam), eps)


def cap_tce(phi: float, lam: float) -> TCEParams:
    """The four-cone map with angles ``(pi/2 - phi, phi, phi, pi/2 - phi)``."""
    half = math.pi / 2 - phi
    return build_tce(2, (half, phi, phi, math.pi - half - 2 * phi), (0, 2, 1, 3), lam)


def flat_tce(alpha: Sequence[float], lam: float) -> TCEParams:
    """Three cones, identity permutation: a pure piecewise translation."""
    a0, a1, _ = alpha
    return build_tce(1, (a0, a1, math.pi - a0 - a1), (0, 1, 2), lam)


def step(t: TCEParams, p) -> tuple[PlanarPoint, int]:
    p = _as_point(p)
    if p.y < -t.eps:
        raise BelowBaseline(f"{p} is below the real axis")
    j = t.partition.atom_of(p, t.eps)
    c, s = t._cos[j], t._sin[j]
    return PlanarPoint(p.x * c - p.y * s + t.beta[j], p.x * s + p.y * c), j


def step_many(t: TCEParams, xs: np.ndarray, ys: np.ndarray):
    """Vectorised :func:`step`; returns ``(x', y', atom)``."""
    j = t.partition.atoms_of(xs, ys, t.eps)
    c, s = t._cos[j], t._sin[j]
    beta = np.asarray(t.beta)[j]
    return xs * c - ys * s + beta, xs * s + ys * c, j


def iterate(t: TCEParams, p, n: int) -> list[PlanarPoint]:
    out = [_as_point(p)]
    for _ in range(n):
        out.append(step(t, out[-1])[0])
    return out


@dataclass
class OrbitBatch:
    """Records of a batch run, ordered by (seed, step).

    Columns are numpy arrays of equal length: ``seed``, ``step``, ``x``,
    ``y`` and ``atom`` (atom of the recorded point).
    """

    seeds: np.ndarray
    transient: int
    iterates: int
    seed: np.ndarray
    step: np.ndarray
    x: np.ndarray
    y: np.ndarray
    atom: np.ndarray

    def __len__(self):
        return len(self.x)


def num_threads() -> int:
    raw = os.environ.get("TCE_NUM_THREADS", "0").strip() or "0"
    n = int(raw)
    return n if n > 0 else (os.cpu_count() or 1)


def sample_box(box, n: int, rng_seed: int) -> np.ndarray:
    """One independent sub-stream per seed point, all derived from ``rng_seed``."""
    children = np.random.SeedSequence(rng_seed).spawn(n)
    x0, x1, y0, y1 = box
    out = np.empty((n, 2))
    for i, ss in enumerate(children):
        u = np.random.Generator(np.random.PCG64(ss)).random(2)
        out[i] = (x0 + (x1 - x0) * u[0], y0 + (y1 - y0) * u[1])
    return out


def _run_chunk(t: TCEParams, pts: np.ndarray, transient: int, iterates: int):
    xs, ys = pts[:, 0].copy(), pts[:, 1].copy()
    m = len(xs)
    rx = np.empty((m, iterates + 1))
    ry = np.empty((m, iterates + 1))
    ra = np.empty((m, iterates + 1), dtype=np.int64)
    for k in range(transient + iterates + 1):
        if np.any(ys < -t.eps):
            raise BelowBaseline("orbit left the closed upper half-plane")
        if np.any(np.abs(xs) > DIVERGENCE_BOUND):
            raise OrbitDiverged(f"|x| exceeded {DIVERGENCE_BOUND:g} at step {k}")
        nx, ny, j = step_many(t, xs, ys)
        if k >= transient:
            col = k - transient
            rx[:, col], ry[:, col], ra[:, col] = xs, ys, j
        xs, ys = nx, ny
    return rx, ry, ra


def run_batch(t: TCEParams, box, n_seeds: int, transient: int, iterates: int,
              rng_seed: int, seeds: np.ndarray | None = None) -> OrbitBatch:
    """Iterate seeds drawn uniformly from ``box = (x0, x1, y0, y1)``.

    Records ``iterates + 1`` points per seed, starting after ``transient``
    discarded steps; the step column is the absolute iterate number.
    """
    if n_seeds <= 0 or transient < 0 or iterates < 0:
        raise ValueError("counts must be positive")
    if box[2] < 0:
        raise BelowBaseline("sampling box reaches below the real axis")
    pts = sample_box(box, n_seeds, rng_seed) if seeds is None else np.asarray(seeds, float)
    workers = min(num_threads(), max(1, n_seeds // 256))
    chunks = np.array_split(np.arange(n_seeds), workers)
    if workers == 1:
        parts = [_run_chunk(t, pts, transient, iterates)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda idx: _run_chunk(t, pts[idx], transient, iterates), chunks))
    rx = np.concatenate([p[0] for p in parts])
    ry = np.concatenate([p[1] for p in parts])
    ra = np.concatenate([p[2] for p in parts])
    cols = iterates + 1
    return OrbitBatch(
        seeds=pts,
        transient=transient,
        iterates=iterates,
        seed=np.repeat(np.arange(n_seeds), cols),
        step=np.tile(np.arange(transient, transient + cols), n_seeds),
        x=rx.ravel(),
        y=ry.ravel(),
        atom=ra.ravel(),
    )
