import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chainfold.geom import (AxisLine, Segment, circle_intersection, dihedral_angle, dist_point_segment,
                            dist_segment_segment, point, rotate_about_axis, rotation_matrix)
from oracles import brute_point_segment, brute_segment_segment, rodrigues

coord = st.floats(-10, 10, allow_nan=False)
vec3 = st.tuples(coord, coord, coord)


def test_point_promotes_2d_and_rejects_nan():
    assert point(1, 2).tolist() == [1.0, 2.0, 0.0]
    with pytest.raises(ValueError):
        point(1, float("nan"), 0)
    with pytest.raises(ValueError):
        point(1)


@pytest.mark.parametrize("p,a,b,want", [
    ((0, 0, 0), (2, 0, 0), (2, 2, 0), 2.0),
    ((0, 0, 0), (1, 1, 0), (2, 1, 0), math.sqrt(2)),
    ((0.3, 0.7, 0), (0, 0, 0), (1, 0, 0), 0.7),
])
def test_point_segment_examples(p, a, b, want):
    assert dist_point_segment(p, Segment(a, b)) == pytest.approx(want, abs=1e-12)
    assert brute_point_segment(p, a, b) == pytest.approx(want, abs=1e-5)


@pytest.mark.parametrize("s1,s2,want", [
    (((0, 0, 0), (1, 0, 0)), ((0, 0, 1), (1, 0, 1)), 1.0),
    (((0, 0, 0), (1, 0, 0)), ((0.5, -1, 0), (0.5, 1, 0)), 0.0),
    (((0, 0, 0), (1, 0, 0)), ((2, 1, 0), (3, 1, 0)), math.sqrt(2)),
])
def test_segment_segment_examples(s1, s2, want):
    assert dist_segment_segment(Segment(*s1), Segment(*s2)) == pytest.approx(want, abs=1e-12)
    assert brute_segment_segment(*s1, *s2) == pytest.approx(want, abs=1e-3)


@given(vec3, vec3, vec3, vec3)
def test_segment_distance_matches_sampling(a1, b1, a2, b2):
    if np.allclose(a1, b1) or np.allclose(a2, b2):
        return
    d = dist_segment_segment(Segment(a1, b1), Segment(a2, b2))
    brute = brute_segment_segment(a1, b1, a2, b2, 301)
    assert d <= brute + 1e-9
    # sampling overestimates by at most half a sample step on each segment
    step = (np.linalg.norm(np.subtract(b1, a1)) + np.linalg.norm(np.subtract(b2, a2))) / 300
    assert brute - d <= step + 1e-9


def test_rotation_examples():
    z = AxisLine((0, 0, 0), (0, 0, 1))
    np.testing.assert_allclose(rotate_about_axis((1, 0, 0), z, math.pi / 2), (0, 1, 0), atol=1e-15)
    np.testing.assert_allclose(rotate_about_axis((0, 0, 3), z, 1.234), (0, 0, 3), atol=1e-15)
    np.testing.assert_allclose(rotate_about_axis((1, 0, 0), z, math.pi / 3),
                               (math.cos(math.pi / 3), math.sin(math.pi / 3), 0), atol=1e-15)


@given(vec3, vec3, vec3, st.floats(-7, 7))
def test_rotation_matches_rodrigues(p, o, d, ang):
    if np.linalg.norm(d) < 1e-3:
        return
    got = rotate_about_axis(p, AxisLine(o, d), ang)
    np.testing.assert_allclose(got, rodrigues(p, np.array(o, float), d, ang), atol=1e-9)


@given(st.lists(vec3, min_size=2, max_size=5), vec3, vec3, st.floats(-7, 7))
def test_rotation_preserves_distances(pts, o, d, ang):
    if np.linalg.norm(d) < 1e-3:
        return
    ax = AxisLine(o, d)
    P = np.array(pts, float)
    Q = np.array([rotate_about_axis(p, ax, ang) for p in P])
    D0 = np.linalg.norm(P[:, None] - P[None], axis=2)
    D1 = np.linalg.norm(Q[:, None] - Q[None], axis=2)
    np.testing.assert_allclose(D1, D0, atol=1e-9 * max(1.0, D0.max()))


def test_rotation_matrix_is_orthonormal():
    R = rotation_matrix((1, 2, 3), 0.7)
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-15)
    assert np.linalg.det(R) == pytest.approx(1.0)


def test_dihedral_examples():
    assert dihedral_angle((1, 0, 0), (0, 1, 0)) == pytest.approx(math.pi / 2)
    assert dihedral_angle((0, 0, 1), (0, 0, 1)) == pytest.approx(math.pi)
    # regular tetrahedron: outward normals of two faces from explicit coordinates
    V = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float)
    c = V.mean(axis=0)

    def normal(f):
        n = np.cross(V[f[1]] - V[f[0]], V[f[2]] - V[f[0]])
        n /= np.linalg.norm(n)
        return n if n @ (V[f[0]] - c) > 0 else -n

    assert dihedral_angle(normal([0, 1, 2]), normal([0, 1, 3])) == pytest.approx(math.acos(1 / 3), abs=1e-12)


def test_axis_rejects_zero_direction():
    with pytest.raises(ValueError):
        AxisLine((0, 0, 0), (0, 0, 0))


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0.1, 5), st.sampled_from([1.0, -1.0]))
def test_circle_intersection_radii(r1, r2, d, side):
    if not abs(r1 - r2) < d < r1 + r2:
        return
    x = np.array(circle_intersection((0.0, 0.0), r1, (d, 0.0), r2, side))
    assert np.hypot(*x) == pytest.approx(r1, rel=1e-9, abs=1e-12)
    assert np.hypot(x[0] - d, x[1]) == pytest.approx(r2, rel=1e-9, abs=1e-12)
    assert np.sign(x[1]) in (side, 0.0)


def test_circle_intersection_keeps_short_radius_exact():
    # very short second radius against unit-scale coordinates
    c1, c2 = (0.0, 0.0), (1.0, 0.0)
    x = np.array(circle_intersection(c1, 1.0000001, c2, 5e-4, 1.0))
    assert abs(np.hypot(x[0] - 1.0, x[1]) / 5e-4 - 1) < 1e-12
