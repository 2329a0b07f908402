import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcelab.errors import BadSimplex, CapExceeded
from tcelab.flat import (
    FlatParams,
    SliceKind,
    absorb,
    h_slice,
    locate_transition,
    m_boundary,
    m_contains,
    m_contains_many,
    ribbon_index,
    slice_iet,
    slice_kind,
    trapezium_regions,
    y_star,
)
from tcelab.geometry import Location, polygon_contains
from tcelab.iet import build_iet, first_return
from tcelab.tce import step

SYM = FlatParams((math.pi / 4, math.pi / 2, math.pi / 4), 0.5)
TRAP = FlatParams((math.pi / 2, 1.0, math.pi / 2 - 1.0), math.sqrt(2) / 2)
TILTED = FlatParams((math.pi / 2 - 0.9, 1.0, math.pi / 2 - 0.1), math.sqrt(2) / 2)

# values from direct evaluation of the closed form and of the inequalities
TRAP_Y_STAR = 0.45402804287697457


def test_bad_angles():
    with pytest.raises(BadSimplex):
        FlatParams((1.0, 1.0, 1.0), 0.5)


def test_y_star_values():
    assert y_star(SYM) == pytest.approx(0.25, abs=1e-15)
    assert y_star(TRAP) == pytest.approx(TRAP_Y_STAR, abs=1e-15)
    assert y_star(FlatParams((0.5, 1.0, math.pi - 1.5), 1e-9)) < 1e-8


def test_m_contains_examples():
    assert m_contains(SYM, (-0.5, 0.0))
    assert not m_contains(SYM, (0.6, 0.0))
    assert m_contains(TILTED, (0.0, 1.4))
    assert not m_contains(TILTED, (0.9, 1.4))


def test_h_slice_examples():
    assert h_slice(SYM, 0.0, 0.3) == pytest.approx(-0.7)
    assert h_slice(SYM, 0.1, -0.2) == pytest.approx(0.3)
    assert h_slice(SYM, 1e6, 0.5) == pytest.approx(0.5 - SYM.eta)


def test_slice_kinds_and_breakpoints():
    assert slice_kind(SYM, 0.0) is SliceKind.TWO_BOTTOM
    assert slice_kind(SYM, 0.1) is SliceKind.THREE
    assert slice_kind(SYM, 0.25) is SliceKind.TWO_TOP
    s = slice_iet(SYM, 0.1)
    assert s.iet.breaks == pytest.approx((-0.9, -0.1, 0.1, 0.4), abs=1e-15)
    assert s.iet.perm == (2, 1, 0)
    assert slice_iet(SYM, 0.0).iet.lengths == (1.0, 0.5)
    top = slice_iet(SYM, y_star(SYM)).iet
    assert top.lengths == pytest.approx((SYM.eta, SYM.lam))


def test_slice_iet_agrees_with_line_map():
    rng = np.random.default_rng(5)
    for y in (0.0, 0.05, 0.2, 0.3, 1.0):
        f = slice_iet(SYM, y).iet
        xs = rng.uniform(float(f.base), float(f.end), 200)
        for x in xs:
            assert f(float(x)) == pytest.approx(h_slice(SYM, y, float(x)), abs=1e-12)


def test_transition_located_at_y_star():
    assert locate_transition(TRAP) == pytest.approx(TRAP_Y_STAR, abs=1e-10)


def test_top_slice_is_induced_baseline():
    lam = TRAP.lam
    g = first_return(build_iet(-1.0, (1.0, lam), (1, 0)), -1.0, 0.0)
    top = slice_iet(TRAP, y_star(TRAP)).iet
    assert g.perm == top.perm
    assert g.lengths == pytest.approx(top.lengths, abs=1e-12)


def test_trapezium_vertices():
    T, strip = trapezium_regions(SYM)
    want = [(-1, 0), (0.5, 0), (0.25, 0.25), (-0.75, 0.25)]
    assert T.as_array() == pytest.approx(np.array(want), abs=1e-15)
    T2, _ = trapezium_regions(TRAP)
    assert T2.as_array()[3] == pytest.approx((-1.0, TRAP_Y_STAR), abs=1e-15)
    assert strip.bounds_at(1.0)[2] == pytest.approx(SYM.lam - 1.0)


def test_m_boundary_encloses_sampled_points():
    b = m_boundary(SYM, 1.0, 10)
    for (xl, y), (xr, _) in zip(b["left"], b["right"]):
        if y > 0:
            assert m_contains(SYM, (0.5 * (xl + xr), y))
            assert not m_contains(SYM, (xr + 1e-6, y))


def test_absorb_examples():
    k, z = absorb(SYM, (3.2, 0.1))
    assert k == 3 and z.x == pytest.approx(0.2, abs=1e-12) and z.y == 0.1
    k, z = absorb(SYM, (-5.0, 0.05))
    assert k == 9 and z.x == pytest.approx(-0.5, abs=1e-12)
    assert absorb(SYM, (-0.5, 0.0)) == (0, (-0.5, 0.0)) or absorb(SYM, (-0.5, 0.0))[0] == 0


def test_absorb_cap():
    with pytest.raises(CapExceeded):
        absorb(SYM, (50.0, 0.1), cap=3)


@pytest.mark.parametrize("z", [(3.2, 0.1), (7.7, 0.4), (-5.0, 0.05), (-9.3, 0.7)])
def test_ribbon_index_predicts_exit_time(z):
    t = SYM.tce
    atom, n = ribbon_index(SYM, z)
    w = z
    for _ in range(n + 1):
        w, j = step(t, w)
        assert j == atom
    assert t.partition.atom_of(w) != atom


@settings(max_examples=40)
@given(st.floats(-1.0, 0.7), st.floats(0.0, 2.0))
def test_attractor_is_invariant(x, y):
    if not m_contains(TILTED, (x, y), 0.0):
        return
    q, _ = step(TILTED.tce, (x, y))
    assert m_contains(TILTED, q)


def test_vectorised_membership_matches_scalar():
    rng = np.random.default_rng(0)
    xs, ys = rng.uniform(-2, 2, 3000), rng.uniform(0, 2, 3000)
    want = [m_contains(TILTED, (x, y)) for x, y in zip(xs, ys)]
    assert m_contains_many(TILTED, xs, ys).tolist() == want


def test_trapezium_is_inside_attractor():
    T, _ = trapezium_regions(TRAP)
    c = T.centroid()
    assert polygon_contains(T, c) is Location.INSIDE and m_contains(TRAP, c)


def test_exact_slice_of_rational_baseline():
    g = first_return(build_iet(Fr(-1), (Fr(1), Fr(1, 2)), (1, 0)), Fr(-1), Fr(0))
    assert g.lengths == (Fr(1, 2), Fr(1, 2))
