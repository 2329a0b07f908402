import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcelab.errors import BadPermutation, BadSimplex, BelowBaseline, LambdaOutOfRange, OrbitDiverged
from tcelab.flat import FlatParams, h_slice
from tcelab.iet import apply, build_iet
from tcelab.tce import build_tce, cap_tce, flat_tce, iterate, run_batch, step, step_many

PHI = math.pi / 3
# a_2 of the first cap at phi = pi/3, lambda = 4/5 and its rotation by -phi (complex oracle)
A2 = (-0.3, 0.17320508075688779)
ROT_A2 = (2.7755575615628914e-17, 0.34641016151377546)


def test_cap_map_rotation_angles():
    t = cap_tce(PHI, 0.8)
    assert t.tau[0] == 0.0 and t.tau[3] == 0.0
    assert t.tau[1] == pytest.approx(PHI, abs=1e-15)
    assert t.tau[2] == pytest.approx(-PHI, abs=1e-15)


def test_identity_permutation_has_no_rotation():
    t = flat_tce((0.3, 2.0, math.pi - 2.3), 0.4)
    assert t.tau == (0.0, 0.0, 0.0)


def test_cycle_notation_for_sigma():
    a = (math.pi / 6, math.pi / 3, math.pi / 3, math.pi / 6)
    assert build_tce(2, a, "(1 2)", 0.8).sigma == (0, 2, 1, 3)


@pytest.mark.parametrize("args, exc", [
    ((2, (1.0, 1.0, 1.0, 1.0), (0, 2, 1, 3), 0.5), BadSimplex),
    ((2, (0.5, 0.5, 0.5, math.pi - 1.5), (1, 0, 2, 3), 0.5), BadPermutation),
    ((2, (0.5, 0.5, 0.5, math.pi - 1.5), (0, 2, 1, 3), 1.0), LambdaOutOfRange),
    ((1, (0.5, 0.5, 0.5, math.pi - 1.5), (0, 1, 2), 0.5), BadSimplex),
])
def test_build_errors(args, exc):
    with pytest.raises(exc):
        build_tce(*args)


def test_step_translates_rightmost_cone():
    t = flat_tce((math.pi / 4, math.pi / 2, math.pi / 4), 0.5)
    p, j = step(t, (2.0, 0.01))
    assert j == 0 and p.x == pytest.approx(1.0, abs=1e-15) and p.y == 0.01


def test_step_on_baseline():
    t = cap_tce(PHI, 0.8)
    p, j = step(t, (0.3, 0.0))
    assert j == 0 and p.x == pytest.approx(-0.7) and p.y == 0.0
    p, j = step(t, (-0.5, 0.0))
    assert j == 3 and p.x == pytest.approx(0.3)


def test_vertex_on_shared_ray_belongs_to_upper_cone():
    t = cap_tce(PHI, 0.8)
    p, j = step(t, A2)
    assert j == 3
    assert p.x == pytest.approx(A2[0] + 0.8, abs=1e-15) and p.y == A2[1]


def test_rotation_of_a2_by_middle_cone_isometry():
    t = cap_tce(PHI, 0.8)
    img = t.isometry(2)(A2)
    assert img.x == pytest.approx(ROT_A2[0] - 0.2, abs=1e-15)
    assert img.y == pytest.approx(ROT_A2[1], abs=1e-15)


def test_below_baseline_rejected():
    t = cap_tce(PHI, 0.8)
    with pytest.raises(BelowBaseline):
        step(t, (0.0, -0.1))


@settings(max_examples=30)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(0, 3)), min_size=1, max_size=50))
def test_step_many_bit_identical_to_step(pts):
    t = cap_tce(math.pi / 5, 0.9)
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    nx, ny, j = step_many(t, xs, ys)
    for k, p in enumerate(pts):
        q, a = step(t, p)
        assert (q.x, q.y, a) == (nx[k], ny[k], j[k])


@settings(max_examples=50)
@given(st.floats(0.05, 1.5), st.floats(0.05, 1.5), st.floats(0.0, 0.3), st.floats(0.0, 0.3))
def test_piecewise_isometry(r, s, dr, ds):
    t = cap_tce(math.pi / 4, 0.9)
    # two points inside the middle cone P_1 = [pi/4, pi/2)
    th1, th2 = math.pi / 4 + 0.1 + dr, math.pi / 4 + 0.1 + ds
    p = (r * math.cos(th1), r * math.sin(th1))
    q = (s * math.cos(th2), s * math.sin(th2))
    (fp, a), (fq, b) = step(t, p), step(t, q)
    assert a == b == 1
    assert abs(fp.dist(fq) - math.dist(p, q)) <= 1e-12


def test_baseline_conjugacy():
    lam = 0.8
    t = cap_tce(PHI, lam)
    f = build_iet(-1.0, (1.0, lam), (1, 0))
    rng = np.random.default_rng(1)
    xs = rng.uniform(-1, lam, 10_000)
    xs = xs[np.abs(xs) > 1e-8]
    nx, ny, _ = step_many(t, xs, np.zeros_like(xs))
    assert np.all(ny == 0.0)
    assert max(abs(nx[i] - apply(f, float(x))) for i, x in enumerate(xs)) <= 1e-15


def test_flat_map_preserves_heights_and_matches_slice_map():
    fp = FlatParams((0.6, 1.3, math.pi - 1.9), 0.65)
    t = fp.tce
    rng = np.random.default_rng(2)
    for x, y in zip(rng.uniform(-3, 3, 500), rng.uniform(0, 2, 500)):
        q, _ = step(t, (x, y))
        assert q.y == y
        assert q.x == pytest.approx(h_slice(fp, y, x), abs=1e-12)


def test_iterate_length():
    t = cap_tce(PHI, 0.8)
    assert len(iterate(t, (0.1, 0.1), 5)) == 6


def test_run_batch_single_seed_zero_iterates():
    t = cap_tce(PHI, 0.8)
    b = run_batch(t, (-1, 0.8, 0, 1), 1, 0, 0, rng_seed=3)
    assert len(b) == 1 and b.step.tolist() == [0]
    assert (b.x[0], b.y[0]) == tuple(b.seeds[0])


def test_run_batch_is_deterministic_and_thread_independent(monkeypatch):
    t = cap_tce(math.pi / 4, 0.9)
    box = (-1, 0.9, 0, 1)
    monkeypatch.setenv("TCE_NUM_THREADS", "1")
    a = run_batch(t, box, 600, 10, 20, rng_seed=7)
    monkeypatch.setenv("TCE_NUM_THREADS", "4")
    b = run_batch(t, box, 600, 10, 20, rng_seed=7)
    for col in ("seed", "step", "x", "y", "atom"):
        assert np.array_equal(getattr(a, col), getattr(b, col))
    assert a.step.min() == 10 and a.step.max() == 30
    assert len(a) == 600 * 21


def test_seed_streams_do_not_depend_on_batch_size():
    t = cap_tce(math.pi / 4, 0.9)
    a = run_batch(t, (-1, 0.9, 0, 1), 5, 0, 0, rng_seed=11)
    b = run_batch(t, (-1, 0.9, 0, 1), 9, 0, 0, rng_seed=11)
    # SeedSequence.spawn gives each seed its own stream, so prefixes agree
    assert np.array_equal(a.seeds, b.seeds[:5])


def test_divergence_guard():
    # escape to the right is impossible, but a seed far away trips the guard at once
    t = cap_tce(PHI, 0.8)
    with pytest.raises(OrbitDiverged):
        run_batch(t, (0, 1, 0, 1), 1, 0, 1, 0, seeds=np.array([[2e6, 0.5]]))


def test_box_below_axis_rejected():
    with pytest.raises(BelowBaseline):
        run_batch(cap_tce(PHI, 0.8), (0, 1, -1, 1), 2, 0, 0, 0)
