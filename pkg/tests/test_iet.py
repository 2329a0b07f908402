import math
from fractions import Fraction as Fr

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcelab.errors import NonPositiveLength, NotAPermutation, OutOfDomain
from tcelab.iet import (
    Verdict,
    apply,
    apply_inverse,
    build_iet,
    classify_2iet,
    convergents,
    first_return,
    keane_check,
    orbit,
    parse_cycles,
)

# 1/sqrt(2) + 0.1 on the first cap at phi = pi/3: (l, eta) ratio, computed independently
DENSE_RATIO = 1.1842154231824091


def baseline(lam):
    return build_iet(-1 if isinstance(lam, Fr) else -1.0, (1, lam), (1, 0))


def test_validation():
    with pytest.raises(NonPositiveLength):
        build_iet(0, (1, 0), (1, 0))
    with pytest.raises(NotAPermutation):
        build_iet(0, (1, 1), (0, 0))
    with pytest.raises(OutOfDomain):
        apply(baseline(Fr(1, 2)), Fr(1, 2))


def test_cycle_notation():
    assert parse_cycles("(0 3)(1 2)", 4) == (3, 2, 1, 0)
    assert parse_cycles("(1 2)", 4) == (0, 2, 1, 3)
    assert parse_cycles("", 3) == (0, 1, 2)


def test_translations_of_swap():
    f = build_iet(0, (Fr(2, 5), Fr(2, 5), Fr(2, 5), Fr(1, 5)), (3, 2, 1, 0))
    assert f.tau == (Fr(1), Fr(1, 5), Fr(-3, 5), Fr(-6, 5))


def test_baseline_orbit_exact():
    f = baseline(Fr(1, 2))
    assert orbit(f, Fr(1, 4), 4) == [Fr(1, 4), Fr(-3, 4), Fr(-1, 4), Fr(1, 4), Fr(-3, 4)]


def test_half_open_intervals():
    f = baseline(Fr(1, 2))
    assert apply(f, Fr(0)) == -1
    assert apply(f, Fr(-1)) == Fr(-1, 2)


@settings(max_examples=60)
@given(st.lists(st.fractions(Fr(1, 50), 3), min_size=2, max_size=6), st.randoms(use_true_random=False))
def test_inverse_roundtrip_exact(lengths, rnd):
    perm = list(range(len(lengths)))
    rnd.shuffle(perm)
    f = build_iet(0, lengths, perm)
    x = f.base + f.total * Fr(rnd.randrange(1000), 1000)
    assert apply_inverse(f, apply(f, x)) == x


@settings(max_examples=60)
@given(st.lists(st.fractions(Fr(1, 50), 3), min_size=2, max_size=5), st.randoms(use_true_random=False))
def test_image_intervals_tile_domain(lengths, rnd):
    perm = list(range(len(lengths)))
    rnd.shuffle(perm)
    f = build_iet(0, lengths, perm)
    imgs = sorted(f.image_intervals())
    assert imgs[0][0] == 0 and imgs[-1][1] == f.total
    assert all(a[1] == b[0] for a, b in zip(imgs, imgs[1:]))


@pytest.mark.parametrize("lam", [Fr(1, 2), Fr(4, 5), Fr(2, 7)])
def test_first_return_of_baseline_to_left_interval(lam):
    g = first_return(baseline(lam), Fr(-1), Fr(0))
    assert g.lengths == (1 - lam, lam)
    assert g.perm == (1, 0)
    assert sum(g.lengths) == 1


def test_first_return_float_matches_exact():
    gf = first_return(baseline(0.8), -1.0, 0.0)
    assert gf.lengths == pytest.approx((0.2, 0.8), abs=1e-12)


@settings(max_examples=40)
@given(st.lists(st.fractions(Fr(1, 20), 2), min_size=2, max_size=4), st.randoms(use_true_random=False))
def test_first_return_preserves_length(lengths, rnd):
    perm = list(range(len(lengths)))
    rnd.shuffle(perm)
    f = build_iet(0, lengths, perm)
    b = f.total * Fr(rnd.randrange(1, 10), 10)
    g = first_return(f, Fr(0), b)
    assert g.total == b
    x = b * Fr(rnd.randrange(100), 100)
    # pointwise agreement with brute-force iteration
    y = apply(f, x)
    while not (0 <= y < b):
        y = apply(f, y)
    assert apply(g, x) == y


def test_keane_rational_rotation_connects():
    f = baseline(Fr(1, 2))
    k = keane_check(f, 10)
    assert k.violated and not k.satisfied


def test_keane_irrational_rotation_has_no_connection():
    f = baseline(math.sqrt(2) - 1)
    assert keane_check(f, 200).satisfied


def test_convergents_of_golden_ratio():
    phi = (1 + 5 ** 0.5) / 2
    pq = list(convergents(phi, 100))
    assert pq[:6] == [(1, 1), (2, 1), (3, 2), (5, 3), (8, 5), (13, 8)]


def test_classify_exact_periodic():
    c = classify_2iet((Fr(1, 5), Fr(1, 5)))
    assert c.verdict is Verdict.PERIODIC and c.witness == (1, 1) and c.period == 2 and c.verified


def test_classify_exact_reduces_witness():
    c = classify_2iet((Fr(6, 10), Fr(4, 10)))
    assert c.witness == (3, 2) and c.period == 5 and c.exact


def test_classify_dense_float():
    c = classify_2iet((DENSE_RATIO, 1.0))
    assert c.verdict is Verdict.DENSE


def test_classify_float_periodic():
    c = classify_2iet((0.75, 0.25))
    assert c.verdict is Verdict.PERIODIC and c.witness == (3, 1) and c.verified


def test_classify_tiny_tolerance_loose_gives_unknown():
    # with a loose tolerance several convergents of an irrational ratio fit
    c = classify_2iet((DENSE_RATIO, 1.0), qmax=10**6, tol=1e-3)
    assert c.verdict is Verdict.UNKNOWN
