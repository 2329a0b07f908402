"""Interval exchange transformations.

Lengths and points are *scalars*: either :class:`fractions.Fraction`
(exact mode) or ``float``.  Python's numeric tower already gives the
demotion rule we want: ``Fraction op Fraction`` stays exact and any
``float`` operand turns the result into a float.

Intervals are half-open, ``[x_j, x_{j+1})``, and the right end of the
domain is outside it.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

from .errors import NonPositiveLength, NotAPermutation, OutOfDomain, ReturnTimeExceeded

Scalar = Union[Fraction, float]

FLOAT_TOL = 1e-12
DEFAULT_RETURN_CAP = 10**6
PERIOD_CAP = 10**7


def scalar(v) -> Scalar:
    """Coerce ints and Fractions to Fraction, everything else to float."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    return float(v)


def is_exact(*vals) -> bool:
    return all(isinstance(v, Fraction) for v in vals)


def _close(a: Scalar, b: Scalar, tol: float) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return abs(a - b) <= tol * max(1.0, abs(float(a)), abs(float(b)))


def parse_cycles(text: str, size: int) -> tuple[int, ...]:
    """Turn cycle notation such as ``"(0 3)(1 2)"`` into an image list.

    Singletons may be omitted.  ``perm[j]`` is the image of ``j``.
    """
    perm = list(range(size))
    text = text.strip()
    if not text:
        return tuple(perm)
    body = text.replace(",", " ")
    if not body.startswith("("):
        raise NotAPermutation(f"cycle notation expected, got {text!r}")
    seen: set[int] = set()
    for chunk in body.split(")"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if not chunk.startswith("("):
            raise NotAPermutation(f"malformed cycle in {text!r}")
        items = [int(t) for t in chunk[1:].split()]
        for a in items:
            if a in seen or not 0 <= a < size:
                raise NotAPermutation(f"bad element {a} in {text!r}")
            seen.add(a)
        for a, b in zip(items, items[1:] + items[:1]):
            perm[a] = b
    return tuple(perm)


def check_permutation(perm: Sequence[int], size: int) -> tuple[int, ...]:
    perm = tuple(int(p) for p in perm)
    if len(perm) != size or sorted(perm) != list(range(size)):
        raise NotAPermutation(f"{perm} is not a permutation of 0..{size - 1}")
    return perm


def translations(lengths: Sequence[Scalar], perm: Sequence[int]) -> tuple[Scalar, ...]:
    """``tau_j = sum_{perm[k] < perm[j]} len_k - sum_{k < j} len_k``."""
    out = []
    for j in range(len(lengths)):
        after = sum((lengths[k] for k in range(len(lengths)) if perm[k] < perm[j]), Fraction(0))
        before = sum(lengths[:j], Fraction(0))
        out.append(after - before)
    return tuple(out)


@dataclass(frozen=True)
class IET:
    base: Scalar
    lengths: tuple[Scalar, ...]
    perm: tuple[int, ...]
    tau: tuple[Scalar, ...] = field(init=False)
    breaks: tuple[Scalar, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tau", translations(self.lengths, self.perm))
        pts = [self.base]
        for a in self.lengths:
            pts.append(pts[-1] + a)
        object.__setattr__(self, "breaks", tuple(pts))

    @property
    def d(self) -> int:
        return len(self.lengths)

    @property
    def total(self) -> Scalar:
        return self.breaks[-1] - self.base

    @property
    def end(self) -> Scalar:
        return self.breaks[-1]

    @property
    def exact(self) -> bool:
        return is_exact(self.base, *self.lengths)

    def discontinuities(self) -> tuple[Scalar, ...]:
        return self.breaks[1:-1]

    def interval_index(self, x: Scalar) -> int:
        if not (self.base <= x < self.end):
            raise OutOfDomain(f"{x} outside [{self.base}, {self.end})")
        return bisect.bisect_right(self.breaks, x) - 1

    def __call__(self, x):
        return apply(self, x)

    def inverse(self) -> "IET":
        inv = [0] * self.d
        for j, p in enumerate(self.perm):
            inv[p] = j
        lengths = tuple(self.lengths[inv[p]] for p in range(self.d))
        return IET(self.base, lengths, tuple(inv))

    def image_intervals(self) -> list[tuple[Scalar, Scalar]]:
        return [(self.breaks[j] + self.tau[j], self.breaks[j + 1] + self.tau[j]) for j in range(self.d)]

    def translated(self, shift: Scalar) -> "IET":
        return IET(self.base + shift, self.lengths, self.perm)

    def as_dict(self) -> dict:
        return {
            "base": _jsonable(self.base),
            "lengths": [_jsonable(a) for a in self.lengths],
            "perm": list(self.perm),
            "translations": [_jsonable(t) for t in self.tau],
            "exact": self.exact,
        }


def _jsonable(v: Scalar):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    return float(v)


def build_iet(x0, lengths: Sequence, perm: Sequence[int]) -> IET:
    lengths = tuple(scalar(a) for a in lengths)
    if not lengths:
        raise NonPositiveLength("an IET needs at least one interval")
    for a in lengths:
        if not a > 0:
            raise NonPositiveLength(f"length {a} is not positive")
    perm = check_permutation(perm, len(lengths))
    return IET(scalar(x0), lengths, perm)


def apply(f: IET, x: Scalar) -> Scalar:
    j = f.interval_index(x)
    return x + f.tau[j]


def apply_inverse(f: IET, y: Scalar) -> Scalar:
    return apply(f.inverse(), y)


def orbit(f: IET, x: Scalar, n: int) -> list[Scalar]:
    out = [x]
    f.interval_index(x)
    for _ in range(n):
        x = apply(f, x)
        out.append(x)
    return out


def first_return(f: IET, a: Scalar, b: Scalar, cap: int = DEFAULT_RETURN_CAP) -> IET:
    """Induced map of ``f`` on ``[a, b)``.

    Pieces of ``[a, b)`` are pushed forward as whole intervals; each push
    splits a piece at the discontinuities of ``f`` and at the ends of
    ``[a, b)``.  Returned pieces are merged when their origin intervals and
    translations line up, so the result has no spurious breakpoints.
    """
    if not (f.base <= a < b <= f.end):
        raise OutOfDomain(f"[{a}, {b}) not inside [{f.base}, {f.end})")
    # (origin_left, length, current_left, steps)
    active = [(a, b - a, a, 0)]
    done: list[tuple[Scalar, Scalar, Scalar]] = []
    while active:
        o, ln, c, k = active.pop()
        if k >= cap:
            raise ReturnTimeExceeded(o, cap)
        for o2, ln2, c2 in _push(f, o, ln, c):
            for o3, ln3, c3, inside in _split(o2, ln2, c2, a, b):
                if inside:
                    done.append((o3, ln3, c3))
                else:
                    active.append((o3, ln3, c3, k + 1))
    done.sort(key=lambda t: t[0])
    merged: list[list] = []
    for o, ln, c in done:
        if merged:
            po, pln, pc = merged[-1]
            if _close(po + pln, o, FLOAT_TOL) and _close(pc + pln, c, FLOAT_TOL):
                merged[-1][1] = pln + ln
                continue
        merged.append([o, ln, c])
    order = sorted(range(len(merged)), key=lambda i: merged[i][2])
    perm = [0] * len(merged)
    for rank, i in enumerate(order):
        perm[i] = rank
    return IET(a, tuple(m[1] for m in merged), tuple(perm))


def _push(f: IET, o, ln, c):
    """Apply ``f`` to the interval ``[c, c + ln)`` originating at ``o``."""
    out = []
    lo, hi = c, c + ln
    j = f.interval_index(lo)
    while True:
        right = f.breaks[j + 1]
        if hi <= right or _close(hi, right, FLOAT_TOL):
            out.append((o + (lo - c), hi - lo, lo + f.tau[j]))
            return out
        out.append((o + (lo - c), right - lo, lo + f.tau[j]))
        lo = right
        j += 1


def _split(o, ln, c, a, b):
    lo, hi = c, c + ln
    cuts = [lo]
    for e in (a, b):
        if lo < e < hi and not _close(e, lo, FLOAT_TOL) and not _close(e, hi, FLOAT_TOL):
            cuts.append(e)
    cuts.append(hi)
    for s, t in zip(cuts, cuts[1:]):
        mid = s + (t - s) / 2
        yield o + (s - c), t - s, s, a <= mid < b


class KeaneResult:
    """Outcome of :func:`keane_check`."""

    def __init__(self, violated: bool, orbit=None, steps=None, max_iters=0):
        self.violated = violated
        self.orbit = list(orbit or [])
        self.steps = steps
        self.max_iters = max_iters

    @property
    def satisfied(self) -> bool:
        return not self.violated

    def __repr__(self):
        if self.violated:
            return f"Violated(steps={self.steps}, orbit={self.orbit})"
        return f"Satisfied(up to {self.max_iters})"


def keane_check(f: IET, max_iters: int, tol: float = FLOAT_TOL) -> KeaneResult:
    """Look for a forward discontinuity orbit landing on a discontinuity.

    All discontinuities are iterated in lockstep, so the reported
    connection is the shortest one; ties go to the leftmost start.
    """
    disc = list(f.discontinuities())
    if not disc:
        return KeaneResult(False, max_iters=max_iters)
    exact = f.exact
    paths = [[x] for x in disc]
    for step in range(1, max_iters + 1):
        for path in paths:
            y = apply(f, path[-1])
            path.append(y)
            if exact:
                hit = y in disc
            else:
                i = bisect.bisect_left(disc, y)
                hit = any(0 <= k < len(disc) and _close(disc[k], y, tol) for k in (i - 1, i))
            if hit:
                return KeaneResult(True, path, step, max_iters)
    return KeaneResult(False, max_iters=max_iters)


# -- two-interval classification ----------------------------------------------


class Verdict(enum.Enum):
    DENSE = "dense"
    PERIODIC = "periodic"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class OrbitClassification:
    verdict: Verdict
    period: int | None = None
    witness: tuple[int, int] | None = None
    exact: bool = False
    verified: bool = False

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "period": self.period,
            "witness": list(self.witness) if self.witness else None,
            "exact": self.exact,
            "verified": self.verified,
        }


def convergents(r: float, qmax: int, depth: int = 64):
    """Continued-fraction convergents ``(p, q)`` of ``r`` with ``q <= qmax``."""
    h0, h1, k0, k1 = 0, 1, 1, 0
    x = r
    for _ in range(depth):
        a = math.floor(x)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > qmax:
            return
        yield h1, k1
        frac = x - a
        if frac == 0:
            return
        x = 1.0 / frac


def two_iet(lengths: tuple[Scalar, Scalar], base: Scalar = 0) -> IET:
    return build_iet(base, lengths, (1, 0))


def _iterate_period(f: IET, cap: int, tol: float) -> int | None:
    x0 = f.breaks[1]
    x = x0
    for k in range(1, cap + 1):
        x = apply(f, x)
        if _close(x, x0, tol):
            return k
    return None


def classify_2iet(lengths, qmax: int = 10**6, tol: float = 1e-12,
                  period_cap: int = PERIOD_CAP) -> OrbitClassification:
    """Classify the swap of two intervals as periodic or dense.

    The swap of lengths ``(a, b)`` is a rotation, periodic exactly when
    ``a / b`` is rational.  Exact input gives a proof.  Float input is
    matched against continued-fraction convergents ``p/q`` (``q <= qmax``)
    by the orbit closing error ``|q r - p|``; when more than one
    convergent closes within ``tol`` the answer is ``UNKNOWN``.
    """
    a, b = (scalar(v) for v in lengths)
    if not (a > 0 and b > 0):
        raise NonPositiveLength(f"lengths {lengths} must be positive")
    f = two_iet((a, b))
    if is_exact(a, b):
        r = a / b
        p, q = r.numerator, r.denominator
        expected = p + q
        period = _iterate_period(f, min(period_cap, expected), 0.0) if expected <= period_cap else None
        return OrbitClassification(Verdict.PERIODIC, period or expected, (p, q), True, period == expected)
    r = float(a) / float(b)
    scale = max(1.0, abs(r))
    fits = [(p, q) for p, q in convergents(r, qmax) if abs(q * r - p) <= tol * scale]
    if not fits:
        return OrbitClassification(Verdict.DENSE)
    if len(fits) > 1:
        return OrbitClassification(Verdict.UNKNOWN, witness=fits[0])
    p, q = fits[0]
    g = math.gcd(p, q)
    p, q = p // g, q // g
    expected = p + q
    period = None
    if expected <= period_cap:
        period = _iterate_period(f, expected, 1e-9)
    return OrbitClassification(Verdict.PERIODIC, expected, (p, q), False, period == expected)
