import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcelab.geometry import (
    BOUNDARY,
    INSIDE,
    OUTSIDE,
    Cone,
    ConePartition,
    Isometry,
    Location,
    PlanarPoint,
    Polygon,
    apply_isometry,
    clip_to_cone,
    clip_to_convex,
    cone_contains,
    convex_hull,
    fit_isometry,
    location_code,
    polygon_contains,
    polygon_contains_many,
    polygon_distance,
    same_polygon,
)

coord = st.floats(-50, 50, allow_nan=False)
angle = st.floats(-math.pi, math.pi, allow_nan=False)


def test_point_rejects_non_finite():
    with pytest.raises(ValueError):
        PlanarPoint(math.nan, 0.0)
    with pytest.raises(ValueError):
        PlanarPoint(0.0, math.inf)


def test_isometry_zero_angle_is_exact_translation():
    m = Isometry(0.0, (-0.2, 0.0))
    assert m((0.1, 0.3)) == PlanarPoint(0.1 - 0.2, 0.3)


@given(angle, coord, coord, angle, coord, coord, coord, coord)
def test_isometry_compose_and_inverse(a1, bx, by, a2, cx, cy, px, py):
    f, g = Isometry(a1, (bx, by)), Isometry(a2, (cx, cy))
    p = PlanarPoint(px, py)
    assert f.compose(g)(p).dist(f(g(p))) < 1e-9
    assert f.inverse()(f(p)).dist(p) < 1e-9


def test_cone_boundary_ray_belongs_to_upper_cone():
    part = ConePartition.from_widths([math.pi / 3, math.pi / 3, math.pi / 3])
    on_ray = (math.cos(math.pi / 3), math.sin(math.pi / 3))
    assert part.atom_of(on_ray) == 1
    assert not cone_contains(part.cone(0), on_ray)
    assert cone_contains(part.cone(1), on_ray)


def test_apex_and_negative_axis():
    part = ConePartition.from_widths([1.0, 1.0, math.pi - 2.0])
    assert part.atom_of((0.0, 0.0)) == 0
    assert part.atom_of((-3.0, 0.0)) == 2
    assert part.atom_of((3.0, 0.0)) == 0
    assert cone_contains(part.cone(2), (-3.0, 0.0))


def test_epsilon_band_goes_to_higher_cone():
    part = ConePartition.from_widths([math.pi / 2, math.pi / 2])
    assert part.atom_of((1e-10, 1.0)) == 1
    assert part.atom_of((2e-9, 1.0)) == 0


def test_cone_rejects_point_below_apex():
    with pytest.raises(ValueError):
        cone_contains(Cone(0.0, 1.0), (1.0, -1.0))


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(0, 3)), min_size=1, max_size=40))
def test_vectorised_atoms_match_scalar(pts):
    part = ConePartition.from_widths([0.7, 0.4, 1.1, math.pi - 2.2])
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    assert list(part.atoms_of(xs, ys)) == [part.atom_of(p) for p in pts]


def test_polygon_orientation_and_area():
    cw = Polygon.from_points([(0, 0), (0, 1), (1, 1), (1, 0)])
    assert cw.area == pytest.approx(1.0)
    assert Polygon.from_points([(0, 0), (1, 0), (2, 0)]).is_empty


def test_clip_square_by_cone():
    sq = Polygon.from_points([(-1, 0), (1, 0), (1, 1), (-1, 1)])
    right = clip_to_cone(sq, Cone(0.0, math.pi / 2))
    assert right.area == pytest.approx(1.0)
    diag = clip_to_cone(sq, Cone(math.pi / 4, 3 * math.pi / 4))
    # triangle with apex at the origin and top edge from (-1,1) to (1,1)
    assert diag.area == pytest.approx(1.0)


def test_clip_to_convex_triangle():
    sq = Polygon.from_points([(0, 0), (2, 0), (2, 2), (0, 2)])
    tri = Polygon.from_points([(1, -1), (3, 1), (1, 3)])
    # the triangle covers the whole right half of the square
    assert clip_to_convex(sq, tri).area == pytest.approx(2.0)


def test_polygon_contains_bands():
    sq = Polygon.from_points([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert polygon_contains(sq, (0.5, 0.5)) is Location.INSIDE
    assert polygon_contains(sq, (1.0, 0.5)) is Location.BOUNDARY
    assert polygon_contains(sq, (1.5, 0.5)) is Location.OUTSIDE
    assert location_code(Location.BOUNDARY) == BOUNDARY


@settings(max_examples=40)
@given(st.lists(st.tuples(st.floats(-1, 2), st.floats(-1, 2)), min_size=1, max_size=30))
def test_vectorised_containment_matches_scalar(pts):
    poly = Polygon.from_points([(0, 0), (1, 0), (1.3, 0.7), (0.5, 0.4), (0, 1)])
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    codes = polygon_contains_many(poly, xs, ys)
    assert list(codes) == [location_code(polygon_contains(poly, p)) for p in pts]
    assert set(codes) <= {INSIDE, BOUNDARY, OUTSIDE}


def test_same_polygon_ignores_collinear_vertices_and_rotation():
    a = Polygon.from_points([(0, 0), (0.5, 0), (1, 0), (1, 1), (0, 1)])
    b = Polygon.from_points([(1, 1), (0, 1), (0, 0), (1, 0)])
    assert same_polygon(a, b)
    assert polygon_distance(a, b) == 0.0


def test_convexity_flag():
    assert Polygon.from_points([(0, 0), (1, 0), (1, 1), (0, 1)]).is_convex()
    assert not Polygon.from_points([(0, 0), (2, 0), (1, 0.5), (2, 2), (0, 2)]).is_convex()


@given(angle, coord, coord)
def test_fit_isometry_recovers_rigid_motion(a, bx, by):
    m = Isometry(a, (bx, by))
    src = np.array([[0.0, 0.0], [1.0, 0.2], [0.3, 0.9], [-0.5, 0.4]])
    dst = np.array([list(apply_isometry(m, PlanarPoint(*p))) for p in src])
    fitted, res = fit_isometry(src, dst)
    assert res < 1e-9
    assert fitted((0.7, -0.1)).dist(m((0.7, -0.1))) < 1e-9


def test_convex_hull():
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]])
    hull = convex_hull(pts)
    assert len(hull) == 4 and hull.area == pytest.approx(1.0)
