"""Property tests for the invariants every module promises."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainfold.chain import Chain, SurfaceChain, freeze_collinear, is_simple
from chainfold.clearance import perturbed_angle, polygon_bundle, vertex_clearances
from chainfold.convexify import Quadrilateral, convexify_planar_run, line_track_straighten
from chainfold.generators import random_box_chain, random_projection_chain, random_simple_polygon
from chainfold.geom import Segment, dist_segment_segment, segments_intersect_2d
from chainfold.locked import NeedleParams, knitting_needles
from chainfold.motion import verify_trace
from chainfold.straighten import straighten_on_polytope, straighten_projection_run
from oracles import vertex_edge_clearances

seeds = st.integers(0, 2**31 - 1)
small = st.floats(-1, 1, allow_nan=False)


@settings(max_examples=500)
@given(st.lists(small, min_size=8, max_size=8))
def test_zero_distance_iff_crossing(c):
    a, b, p, q = np.array(c).reshape(4, 2)
    if min(np.linalg.norm(b - a), np.linalg.norm(q - p)) < 1e-6:
        return
    d = dist_segment_segment(Segment(a, b), Segment(p, q))
    crossing = segments_intersect_2d(a, b, p, q)
    if d > 1e-12:
        assert not crossing
    elif crossing is False:
        # touching only at a tolerance-level distance: an endpoint grazes the other segment
        assert d < 1e-12


@given(st.lists(small, min_size=12, max_size=12))
def test_predicates_deterministic(c):
    a, b, p, q = np.array(c).reshape(4, 3)
    if np.allclose(a, b) or np.allclose(p, q):
        return
    x = dist_segment_segment(Segment(a, b), Segment(p, q))
    y = dist_segment_segment(Segment(a.copy(), b.copy()), Segment(p.copy(), q.copy()))
    assert x.hex() == y.hex()


@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(-5, 5)), min_size=3, max_size=10, unique=True))
def test_freeze_collinear_idempotent_and_length_preserving(pts):
    try:
        c = Chain(pts)
    except ValueError:
        return
    f, keep = freeze_collinear(c)
    g, keep2 = freeze_collinear(f)
    assert g == f and keep2 == list(range(len(f)))
    if is_simple(c).simple:
        assert sum(f.lengths) == pytest.approx(sum(c.lengths), abs=1e-9)


@settings(max_examples=20)
@given(st.integers(3, 16), seeds)
def test_straighten_invariants(n, seed):
    c = random_projection_chain(n, seed)
    res = straighten_projection_run(c)
    tr = res.trace
    assert res.stage1_moves + res.stage2_moves <= 3 * n
    rep = verify_trace(tr)
    assert rep.passed and rep.min_clearance > 0
    np.testing.assert_allclose(tr.replay().vertices, tr.final, atol=1e-9)
    # cylinders around the projected vertices never touch
    P = c.vertices[:, :2]
    D = np.linalg.norm(P[:, None] - P[None], axis=2) + np.diag(np.full(n, np.inf))
    assert D.min() > 2 * res.r
    # the packed prefix only travels along the shadow of the link it hangs from
    V = np.array(c.vertices)
    for k, m in enumerate(tr.moves[: res.stage1_moves]):
        i = k // 2
        X = m.positions(V, np.linspace(0, 1, 9))
        a, b = P[i], P[i + 1]
        seg = b - a
        t = np.clip(((X[:, : i + 1, :2] - a) @ seg) / (seg @ seg), 0, 1)
        off = np.linalg.norm(X[:, : i + 1, :2] - (a + t[..., None] * seg), axis=2)
        assert off.max() <= res.r * (1 + 1e-9)
        if k % 2 == 0 and i > 0:
            # move (a) drags v0..v_{i-1} rigidly
            Q = X[:, :i]
            d = np.linalg.norm(Q[:, :, None] - Q[:, None], axis=3)
            np.testing.assert_allclose(d, np.broadcast_to(d[0], d.shape), atol=1e-9)
        V = X[-1]


@settings(max_examples=10)
@given(st.integers(4, 10), seeds)
def test_disk_emptiness(n, seed):
    p = random_simple_polygon(n, seed)
    r = vertex_clearances(p)
    brute = vertex_edge_clearances(np.array(p.vertices), True)
    assert np.all(brute >= r - 1e-4 * max(1.0, r.max()))


@settings(max_examples=15)
@given(st.integers(4, 12), seeds, seeds)
def test_sigma_is_a_true_lower_bound(n, seed, seed2):
    p = random_simple_polygon(n, seed)
    b = polygon_bundle(freeze_collinear(p)[0])
    rng = np.random.default_rng(seed2)
    V = np.array(freeze_collinear(p)[0].vertices)[:, :2]
    for _ in range(20):
        ang = rng.uniform(0, 2 * math.pi, len(V))
        rad = b.delta_perturb * np.sqrt(rng.uniform(0, 1, len(V)))
        W = V + np.c_[np.cos(ang), np.sin(ang)] * rad[:, None]
        D = np.linalg.norm(W[:, None] - W[None], axis=2) + np.diag(np.full(len(W), np.inf))
        assert D.min() >= b.sigma - 1e-12


@settings(max_examples=300)
@given(st.floats(0.1, 2), st.floats(0.1, 2), st.floats(0.05, 1.5), seeds)
def test_perturbed_triangle_never_straightens(ell, extra, beta, seed):
    # triangle ABC with |BA|, |BC| >= ell and angle at B in [beta, pi - beta]
    rng = np.random.default_rng(seed)
    ang = rng.uniform(beta, math.pi - beta) if beta < math.pi / 2 else math.pi / 2
    beta = min(beta, math.pi / 2)
    B = np.zeros(2)
    A = np.array([ell + extra * rng.uniform(), 0.0])
    C = (ell + extra * rng.uniform()) * np.array([math.cos(ang), math.sin(ang)])
    delta = 0.5 * ell * math.sin(beta / 2)
    for _ in range(10):
        moves = rng.normal(size=(3, 2))
        moves *= (delta * rng.uniform(0, 1, 3) * (1 - 1e-12) / np.linalg.norm(moves, axis=1))[:, None]
        A2, B2, C2 = A + moves[0], B + moves[1], C + moves[2]
        assert perturbed_angle(A, B, C, A2, B2, C2) < math.pi


@settings(max_examples=40)
@given(st.floats(0.3, 2), st.floats(0.3, 2), st.floats(0.05, 0.95), st.floats(0.1, 0.9))
def test_line_tracking_opens_all_joints(a, b, x, h):
    # v0 at the origin, v2 reflex on the +x axis between v1 above and v3 below
    v1, v3 = (a, h * a + 0.3), (b, -h * b - 0.3)
    v2 = (x * min(a, b), 0.0)
    try:
        q = Quadrilateral([(0, 0), v1, v2, v3])
    except ValueError:
        return
    if q.reflex != 2:
        return
    tr = line_track_straighten(q)
    X = tr.moves[0].positions(np.array(tr.initial.vertices), np.linspace(0, 1, 129))
    P = X[:, :, :2]

    def interior(k):
        u = P[:, k - 1] - P[:, k]
        w = P[:, (k + 1) % 4] - P[:, k]
        return np.arctan2(np.abs(u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0]), np.einsum("ij,ij->i", u, w))

    for k in (0, 1, 3):
        assert np.all(np.diff(interior(k)) >= -1e-9)
    ext2 = 2 * math.pi - (2 * math.pi - interior(2))
    assert np.all(np.diff(ext2) >= -1e-9)
    assert interior(2)[-1] == pytest.approx(math.pi, abs=1e-9)
    d02 = np.linalg.norm(P[:, 2] - P[:, 0], axis=1)
    d13 = np.linalg.norm(P[:, 3] - P[:, 1], axis=1)
    assert np.all(np.diff(d02) >= -1e-12) and np.all(np.diff(d13) >= -1e-12)


@settings(max_examples=12)
@given(st.integers(4, 16), seeds)
def test_convexify_invariants(n, seed):
    p = random_simple_polygon(n, seed)
    r = convexify_planar_run(p)
    rep = verify_trace(r.trace)
    assert rep.passed and rep.min_clearance > 0
    assert r.audits_ok
    assert r.barb_moves <= n + 2 * r.steps
    np.testing.assert_allclose(r.trace.replay().vertices, r.trace.final, atol=1e-9)


@settings(max_examples=10)
@given(st.integers(2, 12), seeds)
def test_pickup_stays_outside(n, seed):
    c, box = random_box_chain(n, seed)
    tr = straighten_on_polytope(SurfaceChain(c, box))
    V = np.array(c.vertices)
    for k, m in enumerate(tr.moves):
        X = m.positions(V, np.linspace(0, 1, 17))
        for x in X:
            assert min(box.signed_distance(p) for p in x) >= -1e-9
        V = X[-1]


def test_needles_deterministic():
    p = NeedleParams(1.0, 1.5, 0.8, 0.4, 0.1)
    assert knitting_needles(p) == knitting_needles(p)
