import math

import numpy as np
import pytest

from chainfold.chain import Chain, Convexity, is_convex_polygon, is_simple
from chainfold.convexify import (BarbedPolygon, Quadrilateral, convexify_barbed, convexify_planar,
                                 convexify_planar_run, line_track_straighten, make_strictly_convex,
                                 pocket_flip_convexify, pocket_flip_run, quad_open_with_attachment,
                                 s0_init, s1_lift, s2_flatten_arch, strictify_edge)
from chainfold.generators import random_simple_polygon, thin_dart
from chainfold.motion import verify_trace

DENTED = Chain([(0, 0), (1, 0), (1, 1), (0.5, 0.6), (0, 1)], closed=True)
KITE = [(0, 0), (1, 1), (0.8, 0), (1, -1)]


def pentagon_barb():
    """Regular pentagon with an extra vertex hooked over one corner; reflex joint at index 0."""
    P = [np.array((math.cos(2 * math.pi * k / 5), math.sin(2 * math.pi * k / 5))) for k in range(5)]
    mid = (P[0] + P[1]) / 2
    along = (P[1] - P[0]) / np.linalg.norm(P[1] - P[0])
    apex = P[1] + 0.3 * mid / np.linalg.norm(mid) + 0.5 * along
    V = [P[1], P[2], P[3], P[4], P[0], apex]
    return Chain(V, closed=True)


def turns(V):
    V = np.asarray(V)[:, :2]
    a = V - np.roll(V, 1, axis=0)
    b = np.roll(V, -1, axis=0) - V
    area = np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1])
    return np.sign(area) * np.arctan2(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0], np.einsum("ij,ij->i", a, b))


def test_quadrilateral_detects_reflex():
    assert Quadrilateral(KITE).reflex == 2
    assert Quadrilateral([(0, 0), (1, 0), (1, 1), (0, 1)]).reflex is None
    with pytest.raises(ValueError):
        Quadrilateral([(0, 0), (1, 1), (1, 0), (0, 1)])


def test_line_track_kite_endpoint():
    tr = line_track_straighten(Quadrilateral(KITE))
    V = tr.replay().vertices
    np.testing.assert_allclose(V[0], 0, atol=1e-15)
    assert V[2, 1] == pytest.approx(0, abs=1e-15)
    assert V[2, 0] == pytest.approx(math.sqrt(0.96), abs=1e-12)
    assert verify_trace(tr).passed


def test_line_track_angles_open_monotonically():
    tr = line_track_straighten(Quadrilateral(KITE))
    m = tr.moves[0]
    X = m.positions(np.array(tr.initial.vertices), np.linspace(0, 1, 201))
    ext = np.array([np.abs(turns(x)) for x in X])
    # convex joints lose turning (open up) and the reflex joint's exterior turning shrinks to zero
    assert np.all(np.diff(ext, axis=0) <= 1e-12)
    assert ext[-1, 2] == pytest.approx(0.0, abs=1e-9)


def test_line_track_weakly_simple_start():
    q = Quadrilateral([(0, 0), (2, 2), (1, 1), (2, -0.5)])
    assert q.weakly_simple
    tr = line_track_straighten(q)
    V0 = np.array(tr.initial.vertices)
    for x in tr.moves[0].positions(V0, np.linspace(0.01, 1, 60)):
        assert is_simple(Chain(x, closed=True)).simple
    assert turns(tr.replay().vertices)[2] == pytest.approx(0.0, abs=1e-9)


def test_convex_quad_needs_no_motion():
    assert line_track_straighten(Quadrilateral([(0, 0), (1, 0), (1, 1), (0, 1)])).moves == []


def test_quad_open_matches_line_track_up_to_rigid_motion():
    q = Quadrilateral(KITE)
    a = line_track_straighten(q).replay().vertices
    b = quad_open_with_attachment(q).replay().vertices
    da = np.linalg.norm(a[:, None] - a[None], axis=2)
    db = np.linalg.norm(b[:, None] - b[None], axis=2)
    np.testing.assert_allclose(da, db, atol=1e-12)


def test_quad_open_with_attachment_keeps_right_of_fixed_edge():
    # reflex at v1; attachment is a triangle cap on the far side of v3 v0
    q = Quadrilateral([(0, 0), (0.9, 0.3), (2, 1.2), (2, 0)])
    att = [(1.0, -0.8)]
    tr = quad_open_with_attachment(q, att)
    rep = verify_trace(tr)
    assert rep.passed
    V0 = np.array(tr.initial.vertices)
    a, b = V0[3, :2], V0[0, :2]

    def side(p):
        return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])

    s0 = np.sign(side(V0[1, :2]))
    for x in tr.moves[0].positions(V0, np.linspace(0, 1, 65)):
        np.testing.assert_allclose(x[[3, 4, 0]], V0[[3, 4, 0]], atol=1e-12)
        assert min(s0 * side(p) for p in x[[1, 2], :2]) >= -1e-12
    assert turns(tr.replay().vertices)[1] == pytest.approx(0.0, abs=1e-9)


def test_quad_open_rejects_bad_attachment():
    q = Quadrilateral([(0, 0), (0.9, 0.3), (2, 1.2), (2, 0)])
    with pytest.raises(ValueError):
        quad_open_with_attachment(q, [(1.0, 0.5)])


def test_make_strictly_convex():
    q = Quadrilateral([(0, 0), (0, 1), (1, 0.5), (2, 0)])
    att = [(1.0, -0.7)]
    tr = make_strictly_convex(q, att)
    V0 = np.array(tr.initial.vertices)
    for x in tr.moves[0].positions(V0, np.linspace(0, 1, 65)[1:]):
        t = turns(x)
        assert np.all(t > 0) and np.all(t < math.pi)
    assert is_convex_polygon(tr.replay()) == Convexity.STRICT
    assert verify_trace(tr).passed
    assert make_strictly_convex(q, att, bend_fraction=0).moves == []


def test_make_strictly_convex_needs_straight_v2():
    with pytest.raises(ValueError):
        make_strictly_convex(Quadrilateral([(0, 0), (0, 1), (1.2, 0.7), (2, 0)]))


def test_convexify_barbed_cases():
    tr = convexify_barbed(BarbedPolygon(Chain(KITE, closed=True), 1))
    assert len(tr.moves) == 1 and verify_trace(tr).passed
    b = BarbedPolygon(pentagon_barb(), 5)
    tr = convexify_barbed(b)
    assert len(tr.moves) >= 1 and verify_trace(tr).passed
    assert is_convex_polygon(tr.replay()) != Convexity.NONCONVEX
    sq = Chain([(0, 0), (1, 0), (1.2, 0.5), (1, 1), (0, 1)], closed=True)
    assert convexify_barbed(BarbedPolygon(sq, 2)).moves == []


def test_barbed_polygon_validation():
    with pytest.raises(ValueError):
        BarbedPolygon(DENTED.with_vertices(np.array(DENTED.vertices)), 0)


def test_strictify_edge():
    sq = Chain([(0, 0), (1, 0), (1, 1), (0, 1)], closed=True)
    assert strictify_edge(sq, 0).moves == []
    sub = Chain([(0, 0), (1, 0), (1, 0.5), (1, 1), (0, 1)], closed=True)
    tr = strictify_edge(sub, 1)
    assert len(tr.moves) == 1
    out = tr.replay()
    assert verify_trace(tr).passed
    t = turns(out.vertices)
    assert t[1] > 1e-6 and t[2] > 1e-6
    V0 = np.array(sub.vertices)
    for x in tr.moves[0].positions(V0, np.linspace(0, 1, 33)):
        assert is_convex_polygon(Chain(x, closed=True)) != Convexity.NONCONVEX


def test_dented_square():
    r = convexify_planar_run(DENTED)
    assert verify_trace(r.trace).passed
    assert is_convex_polygon(r.trace.replay()) != Convexity.NONCONVEX
    assert r.n_moves <= 7 * len(DENTED) and r.audits_ok


def test_convex_input_short_circuits():
    tri = Chain([(0, 0), (1, 0), (0.5, 0.8)], closed=True)
    assert convexify_planar(tri).moves == []
    assert convexify_planar(Chain([(0, 0), (1, 0), (1, 1), (0, 1)], closed=True)).moves == []


def test_random_12gon_audits():
    r = convexify_planar_run(random_simple_polygon(12, 3))
    assert r.audits_ok and verify_trace(r.trace).passed
    assert max(r.lift_offsets) <= r.bundle.delta_perturb


def test_s0_on_square_and_rotation_counts():
    sq = Chain([(0, 0), (1, 0), (1, 1), (0, 1)], closed=True)
    st, moves = s0_init(sq)
    assert len(moves) == 4 and all(m.n_rotations <= 2 for m in moves)
    assert all(st.audit().values())


def test_first_lift_is_vertical_circle():
    st, moves = s0_init(DENTED)
    rot = moves[0].rotations[0]
    assert rot.axis.direction[2] == 0.0
    # vertical circle: the lift angle is exactly the one that gains height eps
    V = np.array(DENTED.vertices)
    w = V[rot.carried[0]] - rot.axis.origin
    d = rot.axis.direction
    rad = np.linalg.norm(w - (w @ d) * d)
    assert abs(math.sin(rot.angle)) == pytest.approx(st.eps / rad, rel=1e-9)


def test_s2_orderings():
    st, _ = s0_init(random_simple_polygon(9, 2))
    st, _ = s1_lift(st)
    i, W = st.i, st.W
    w0, wa, wi = W[0], W[i - 1], W[i]
    base = st.V[wa] - st.V[w0]
    # forbidden: v'_i before v'_0 on the base line
    bad = st.V.copy()
    bad[wi] = st.V[w0] - 0.3 * base
    st_bad = type(st)(st.i, bad, st.W, set(st.frozen), st.bundle, st.origin, st.z0, st.tol)
    with pytest.raises(AssertionError):
        s2_flatten_arch(st_bad)
    ok = st.V.copy()
    ok[wi] = st.V[w0] + 0.5 * base
    st_ok = type(st)(st.i, ok, st.W, set(st.frozen), st.bundle, st.origin, st.z0, st.tol)
    s2_flatten_arch(st_ok)


def test_raise_keeps_arch_above_plane():
    r = convexify_planar_run(random_simple_polygon(10, 5))
    V = np.array(r.trace.initial.vertices)
    z0 = V[0, 2]
    eps = r.bundle.epsilon
    for m in r.trace.moves:
        if m.tag.startswith("S4"):
            rot = m.rotations[0]
            lifted = [k for k in rot.carried]
            X = m.positions(V, np.linspace(0, 1, 17)[1:])
            base = {rot.joint}
            high = [k for k in lifted if k not in base]
            assert np.min(X[:, high, 2]) > z0 + eps * (1 - 1e-9)
        V = m.positions(V, [1.0])[0]


def test_nonplanar_input_rejected():
    V = np.array(DENTED.vertices)
    V[2, 2] = 0.1
    with pytest.raises(ValueError):
        convexify_planar(Chain(V, closed=True))


def test_pocket_flip_basics():
    r = pocket_flip_run(DENTED)
    assert r.flips == 1 and r.convex
    assert verify_trace(r.trace).passed
    sq = Chain([(0, 0), (1, 0), (1, 1), (0, 1)], closed=True)
    assert pocket_flip_run(sq).flips == 0
    assert pocket_flip_convexify(sq).moves == []


def test_pocket_flip_cap():
    r = pocket_flip_run(thin_dart(0.001), max_flips=10)
    assert r.flips == 10 and not r.convex


def test_thin_dart_flip_counts_grow():
    counts = [pocket_flip_run(thin_dart(t)).flips for t in (0.05, 0.01, 0.002)]
    assert counts[0] < counts[1] < counts[2]
