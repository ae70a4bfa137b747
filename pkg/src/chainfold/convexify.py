"""Convexifying planar polygons through 3D.

The arch method lifts the polygon one vertex at a time into a convex arch
standing on a plane just above the input. Each step flattens the arch, makes
the resulting barbed polygon convex with four-bar moves, and stands it back
up. The quadrilateral and barbed-polygon routines are exposed on their own,
together with the pocket-flipping baseline.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import fourbar
from .chain import Chain, Convexity, freeze_collinear, is_convex_polygon, is_simple
from .clearance import ClearanceBundle, polygon_bundle
from .geom import DEFAULT_TOL, AxisLine, Tolerance, orient2d, segments_intersect_2d
from .motion import FourBarMove, JointRotation, RotationMove, Trace

HALF_PI = 0.5 * math.pi
EVENT_SCAN = 64
BISECT_STEPS = 60


def _turn2(a, b, c) -> float:
    u = b[:2] - a[:2]
    w = c[:2] - b[:2]
    return math.atan2(u[0] * w[1] - u[1] * w[0], u[0] * w[0] + u[1] * w[1])


def _area2(P) -> float:
    P = np.asarray(P)[:, :2]
    return float(np.sum(P[:, 0] * np.roll(P[:, 1], -1) - np.roll(P[:, 0], -1) * P[:, 1]))


def _check_horizontal(p: Chain, tol: Tolerance) -> float:
    z = p.vertices[:, 2]
    if np.ptp(z) > tol.eps_len * p.scale * 10:
        raise ValueError("polygon must lie in a horizontal plane (constant z)")
    return float(z[0])


class _Ring:
    """Cyclic vertex order of a planar sub-polygon and its live joints.

    ``fixed`` names one ring edge (u, next u) that has to stay put; four-bar
    moves ground the bar containing it.
    """

    def __init__(self, ring, joints, fixed=None):
        self.ring = [int(v) for v in ring]
        self.at = {v: k for k, v in enumerate(self.ring)}
        self.joints = sorted((int(v) for v in joints), key=self.at.__getitem__)
        self.fixed = fixed

    def offset(self, p, q) -> int:
        return (self.at[q] - self.at[p]) % len(self.ring)

    def between(self, p, q) -> list:
        N = len(self.ring)
        k = self.at[p]
        return [self.ring[(k + s) % N] for s in range(1, self.offset(p, q))]

    def orientation(self, V) -> float:
        return 1.0 if _area2(V[self.ring]) > 0 else -1.0

    def turn(self, V, j) -> float:
        k = self.joints.index(j)
        a, c = self.joints[k - 1], self.joints[(k + 1) % len(self.joints)]
        return _turn2(V[a], V[j], V[c])

    def ground_for(self, piv) -> int:
        if self.fixed is None:
            return max(range(4), key=lambda k: self.offset(piv[k], piv[(k + 1) % 4]))
        u = self.fixed[0]
        for k in range(4):
            if self.offset(piv[k], u) < self.offset(piv[k], piv[(k + 1) % 4]):
                return k
        raise AssertionError("fixed edge not found on the four-bar")


def _make_fourbar(V, R: _Ring, piv, diag, D1, tag, frame=None) -> FourBarMove:
    bodies = [R.between(piv[k], piv[(k + 1) % 4]) for k in range(4)]
    g = R.ground_for(piv)
    want = set(diag)
    driver = next(d for d in (0, 1) if set(fourbar.diagonal_pair(g, d)) == want)
    P = V[list(piv)]
    signs = fourbar.initial_signs(P, g, driver)
    a, b = fourbar.diagonal_pair(g, driver)
    d0 = math.dist(P[a][:2], P[b][:2])
    return FourBarMove(piv, bodies, g, driver, d0, D1, signs, frame, tag)


def _straight_diagonal(P, r, o) -> float:
    """Length of diagonal r-o once the joint at slot r lies straight between its neighbours."""
    n1, n2 = (r + 1) % 4, (r - 1) % 4
    l1, l2 = math.dist(P[r][:2], P[n1][:2]), math.dist(P[r][:2], P[n2][:2])
    m1, m2 = math.dist(P[o][:2], P[n1][:2]), math.dist(P[o][:2], P[n2][:2])
    sq = (l2 * m1 * m1 + l1 * m2 * m2) / (l1 + l2) - l1 * l2
    return math.sqrt(max(sq, 0.0))


def _refine_straight(P0, mv: FourBarMove, r, o) -> float:
    """Polish the driver length at which slot r turns straight; the closed form
    alone can leave a residual bend well above rounding."""
    def f(D):
        try:
            P = fourbar.solve(P0, mv.ground, mv.driver, D, mv.signs)
        except ValueError:
            return math.inf
        return o * fourbar.signed_turns(P)[r]

    D1 = mv.d1
    step = 1e-9 * max(1.0, abs(D1))
    lo, hi = D1 - step, D1 + step
    if not (f(lo) <= 0 <= f(hi)):
        return D1
    for _ in range(BISECT_STEPS * 2):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


def _straighten_move(V, R: _Ring, piv, r, opp, tag, frame=None) -> FourBarMove:
    P0 = V[list(piv)]
    mv = _make_fourbar(V, R, piv, (r, opp), _straight_diagonal(P0, r, opp), tag, frame)
    o = 1.0 if _area2(P0) > 0 else -1.0
    return dataclasses.replace(mv, d1=_refine_straight(P0, mv, r, o))


# barbed polygons ---------------------------------------------------------------

def _barb_step(V, R: _Ring, apex, tol, tag):
    J = R.joints
    if len(J) <= 3:
        return None
    k = J.index(apex)
    a, c = J[k - 1], J[(k + 1) % len(J)]
    o = R.orientation(V)
    if o * R.turn(V, c) < -tol.eps_ang:
        piv, r, opp = (a, apex, c, J[(k + 2) % len(J)]), 2, 0
    elif o * R.turn(V, a) < -tol.eps_ang:
        piv, r, opp = (J[k - 2], a, apex, c), 1, 3
    else:
        return None
    mv = _straighten_move(V, R, piv, r, opp, tag)
    return mv, mv.positions(V, [1.0])[0], piv[r]


def _barbed_core(V, R: _Ring, apex, tol, prefix):
    """Straighten and freeze reflex barb neighbours until the polygon is convex."""
    moves, frozen = [], []
    for k in range(len(R.joints)):
        res = _barb_step(V, R, apex, tol, f"{prefix}-{k}")
        if res is None:
            break
        mv, V, r = res
        moves.append(mv)
        frozen.append(r)
        R.joints.remove(r)
    return V, moves, frozen


# strictification ---------------------------------------------------------------

def _strict_joints(V, R, tol):
    o = R.orientation(V)
    return [j for j in R.joints if o * R.turn(V, j) > tol.eps_ang]


def _bend_move(V, R: _Ring, piv, tag, fraction=0.5):
    """Four-bar move bending the straight pivot piv[1] outward by ``fraction``
    of the bend at which the first other angle event happens."""
    o = R.orientation(V)
    tmp = _make_fourbar(V, R, piv, (1, 3), 0.0, tag)
    g, drv, signs, D0 = tmp.ground, tmp.driver, tmp.signs, tmp.d0
    P0 = V[list(piv)]
    base = np.array([o * R.turn(V, v) for v in piv])
    q0 = o * fourbar.signed_turns(P0)

    def turns(D):
        P = fourbar.solve(P0, g, drv, D, signs)
        return base + o * fourbar.signed_turns(P) - q0, fourbar.interior_angles(P)

    def ok(D):
        try:
            t, ia = turns(D)
        except ValueError:
            return False
        return t[[0, 2, 3]].min() > 0 and ia.min() > 1e-12 and t[1] > 0

    d = lambda i, j: math.dist(P0[i][:2], P0[j][:2])  # noqa: E731
    top = min(d(1, 0) + d(0, 3), d(1, 2) + d(2, 3))
    grid = D0 + (top - D0) * np.linspace(0.0, 1.0, EVENT_SCAN + 1)[1:]
    lo, hi = D0, None
    for D in grid:
        if ok(D):
            lo = D
        else:
            hi = D
            break
    if hi is not None:
        for _ in range(BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
    if lo <= D0:
        raise ValueError("no room to bend the straight vertex")
    target = fraction * turns(lo)[0][1]
    a, b = D0, lo
    for _ in range(BISECT_STEPS):
        mid = 0.5 * (a + b)
        if turns(mid)[0][1] < target:
            a = mid
        else:
            b = mid
    return dataclasses.replace(tmp, d1=0.5 * (a + b))


def _strictify_core(V, R: _Ring, s, tol, tag):
    strict = _strict_joints(V, R, tol)
    if s in strict:
        return None, V
    if len(strict) < 3:
        raise ValueError("fewer than three strictly convex vertices")
    after = sorted(strict, key=lambda v: R.offset(s, v))
    piv = (after[-1], s, after[0], after[1])
    mv = _bend_move(V, R, piv, tag)
    return mv, mv.positions(V, [1.0])[0]


# quadrilaterals ---------------------------------------------------------------

@dataclass
class Quadrilateral:
    """Four planar points with at most one reflex joint."""

    vertices: np.ndarray
    reflex: int | None = None
    weakly_simple: bool = False

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.shape[1] == 2:
            v = np.hstack([v, np.zeros((4, 1))])
        if v.shape != (4, 3):
            raise ValueError("a quadrilateral needs four points")
        self.vertices = v
        o = 1.0 if _area2(v) > 0 else -1.0
        t = np.array([o * _turn2(v[k - 1], v[k], v[(k + 1) % 4]) for k in range(4)])
        simple = not (segments_intersect_2d(v[0], v[1], v[2], v[3]) or segments_intersect_2d(v[1], v[2], v[3], v[0]))
        if not simple:
            # v_r lying on an edge at the opposite vertex is the one tolerated collapse
            for r in range(4):
                o2 = (r + 2) % 4
                for nb in ((o2 + 1) % 4, (o2 - 1) % 4):
                    if nb != r and abs(orient2d(v[o2], v[nb], v[r])) <= 1e-12 * max(1.0, np.ptp(v)) ** 2:
                        self.reflex, self.weakly_simple = r, True
            if not self.weakly_simple:
                raise ValueError("quadrilateral is not weakly simple")
            return
        reflex = [k for k in range(4) if t[k] < -1e-12]
        if len(reflex) > 1:
            raise ValueError("quadrilateral has more than one reflex joint")
        self.reflex = reflex[0] if reflex else None

    def chain(self) -> Chain:
        return Chain(self.vertices, closed=True)


def line_track_straighten(q: Quadrilateral, tol: Tolerance = DEFAULT_TOL, samples_per_move: int = 16) -> Trace:
    """Open every joint of q by pushing the reflex joint away from the opposite
    one along their common line, until the reflex joint is straight."""
    c = q.chain()
    if q.reflex is None:
        return Trace(c, [], samples_per_move, final=np.array(c.vertices))
    r = q.reflex
    o = (r + 2) % 4
    piv = tuple(range(4))
    R = _Ring(range(4), range(4))
    V = np.array(c.vertices)
    mv = _straighten_move(V, R, piv, r, o, "line-track", frame=(o, r))
    return Trace(c, [mv], samples_per_move, final=mv.positions(V, [1.0])[0])


def _glued(q: Quadrilateral, attachment):
    att = np.zeros((0, 3)) if attachment is None else np.array(attachment, dtype=float)
    if att.ndim == 2 and att.shape[1] == 2:
        att = np.hstack([att, np.zeros((len(att), 1))])
    v = q.vertices
    if len(att):
        lid = Chain(np.vstack([v[3], att, v[0]]), closed=True)
        if is_convex_polygon(lid) == Convexity.NONCONVEX:
            raise ValueError("attachment is not convex")
        s_q = [orient2d(v[0], v[3], v[k]) for k in (1, 2)]
        s_a = [orient2d(v[0], v[3], a) for a in att]
        if max(s_q) * min(s_q) < 0 or max(s_a) * min(s_a) < 0 or s_q[0] * s_a[0] > 0:
            raise ValueError("quadrilateral and attachment must lie on opposite sides of v0 v3")
    return Chain(np.vstack([v, att]), closed=True)


def quad_open_with_attachment(q: Quadrilateral, attachment=None, tol: Tolerance = DEFAULT_TOL,
                              samples_per_move: int = 16) -> Trace:
    """Line tracking seen from the bar v3 v0, which carries a fixed convex attachment."""
    c = _glued(q, attachment)
    V = np.array(c.vertices)
    if q.reflex is None:
        return Trace(c, [], samples_per_move, final=V)
    if q.reflex in (0, 3):
        raise ValueError("the reflex joint must be v1 or v2 when v3 v0 is held fixed")
    r = q.reflex
    o = (r + 2) % 4
    R = _Ring(range(len(V)), range(4), fixed=(3, 4 % len(V)))
    mv = _straighten_move(V, R, (0, 1, 2, 3), r, o, "quad-open")
    return Trace(c, [mv], samples_per_move, final=mv.positions(V, [1.0])[0])


def make_strictly_convex(q: Quadrilateral, attachment=None, bend_fraction: float = 0.5,
                         tol: Tolerance = DEFAULT_TOL, samples_per_move: int = 16) -> Trace:
    """Bend the straight joint v2 of q outward, holding the attachment on v3 v0 fixed."""
    c = _glued(q, attachment)
    V = np.array(c.vertices)
    if bend_fraction == 0:
        return Trace(c, [], samples_per_move, final=V)
    if not 0 < bend_fraction < 1:
        raise ValueError("bend fraction must lie in (0, 1)")
    v = q.vertices
    scale = max(1.0, c.scale)
    if abs(orient2d(v[1], v[2], v[3])) > tol.eps_len * scale ** 2 or (v[1] - v[2])[:2] @ (v[3] - v[2])[:2] >= 0:
        raise ValueError("v2 must lie straight between v1 and v3")
    if abs(orient2d(v[0], v[1], v[3])) <= tol.eps_len * scale ** 2:
        raise ValueError("triangle v0 v1 v3 is degenerate")
    R = _Ring(range(len(V)), range(len(V)), fixed=(3, 4 % len(V)))
    o = R.orientation(V)
    for k in (0, 3):
        if o * R.turn(V, k) <= tol.eps_ang:
            raise ValueError(f"v{k} is not strictly convex in the glued polygon")
    mv = _bend_move(V, R, (1, 2, 3, 0), "strict", bend_fraction)
    return Trace(c, [mv], samples_per_move, final=mv.positions(V, [1.0])[0])


@dataclass
class BarbedPolygon:
    """Closed planar polygon that turns convex once the apex joint is deleted."""

    chain: Chain
    apex: int

    def __post_init__(self):
        n = len(self.chain)
        if not self.chain.closed or n < 3:
            raise ValueError("a barbed polygon is a closed chain with at least three vertices")
        self.apex %= n
        if n > 3:
            rest = np.delete(np.asarray(self.chain.vertices), self.apex, axis=0)
            if is_convex_polygon(Chain(rest, closed=True)) == Convexity.NONCONVEX:
                raise ValueError("deleting the apex does not leave a convex polygon")

    @property
    def neighbours(self):
        n = len(self.chain)
        return (self.apex - 1) % n, (self.apex + 1) % n


def convexify_barbed(b: BarbedPolygon, tol: Tolerance = DEFAULT_TOL, samples_per_move: int = 16,
                     fixed_edge=None) -> Trace:
    """Convexify a barbed polygon, one straightened (and frozen) reflex joint per move."""
    c = b.chain
    V = np.array(c.vertices)
    n = len(V)
    R = _Ring(range(n), range(n), fixed=fixed_edge)
    V, moves, _ = _barbed_core(V, R, b.apex, tol, "barb")
    return Trace(c, moves, samples_per_move, final=V)


def strictify_edge(c: Chain, e: int, tol: Tolerance = DEFAULT_TOL, samples_per_move: int = 16) -> Trace:
    """Make both endpoints of edge e strictly convex, keeping e itself fixed."""
    if not c.closed:
        raise ValueError("strictify_edge needs a closed polygon")
    if is_convex_polygon(c, tol) == Convexity.NONCONVEX:
        raise ValueError("polygon is not convex")
    V = np.array(c.vertices)
    n = len(V)
    u, w = e % n, (e + 1) % n
    R = _Ring(range(n), range(n), fixed=(u, w))
    moves = []
    for s in (u, w):
        mv, V = _strictify_core(V, R, s, tol, f"strict-{s}")
        if mv is not None:
            moves.append(mv)
    return Trace(c, moves, samples_per_move, final=V)


# the arch ---------------------------------------------------------------------

@dataclass
class ArchState:
    """Working state between steps; ``W[k]`` is the input index playing v_k."""

    i: int
    V: np.ndarray
    W: list
    frozen: set
    bundle: ClearanceBundle
    origin: np.ndarray
    z0: float
    tol: Tolerance = DEFAULT_TOL

    @property
    def eps(self) -> float:
        return self.bundle.epsilon

    @property
    def delta(self) -> float:
        return self.bundle.delta_perturb

    @property
    def n(self) -> int:
        return len(self.V)

    def seg(self, u, w) -> list:
        """Input indices strictly between u and w, walking forward."""
        n = self.n
        return [(u + s) % n for s in range(1, (w - u) % n)]

    def carried_link_pair(self, k) -> list:
        """v_k with the frozen vertices on both of its links."""
        m = len(self.W)
        W = self.W
        return [W[k]] + self.seg(W[k - 1], W[k]) + self.seg(W[k], W[(k + 1) % m])

    def arch(self) -> list:
        return [self.W[0]] + self.seg(self.W[0], self.W[self.i]) + [self.W[self.i]]

    def suffix(self) -> list:
        m = len(self.W)
        if self.i + 1 > m - 1:
            return []
        a, b = self.W[self.i + 1], self.W[m - 1]
        return [a] + self.seg(a, b) + ([b] if b != a else [])

    def audit(self) -> dict:
        """H1..H5, each as a bool."""
        V, W, i = self.V, self.W, self.i
        atol = 10 * self.tol.eps_len * max(1.0, float(np.ptp(self.origin[:, :2], axis=0).max()))
        zt = self.z0 + self.eps
        w0, wi = W[0], W[i]
        inner = self.seg(w0, wi)
        suf = self.suffix()
        h1 = (abs(V[w0, 2] - zt) <= atol and abs(V[wi, 2] - zt) <= atol
              and all(V[v, 2] > zt + atol for v in inner)
              and all(abs(V[v, 2] - self.z0) <= atol for v in suf))
        arch = self.arch()
        base = V[wi, :2] - V[w0, :2]
        u = base / np.linalg.norm(base)
        rel = V[arch, :2] - V[w0, :2]
        planar = bool(np.all(np.abs(rel[:, 0] * u[1] - rel[:, 1] * u[0]) <= atol))
        flat = np.stack([rel @ u, V[arch, 2]], axis=1)
        t = np.array([_turn2(flat[k - 1], flat[k], flat[(k + 1) % len(flat)]) for k in range(len(flat))])
        sgn = 1.0 if _area2(flat) > 0 else -1.0
        convex = bool(np.all(sgn * t > -self.tol.eps_ang))
        h3 = all(np.linalg.norm(V[v, :2] - self.origin[v, :2]) <= self.delta + atol for v in (w0, wi))
        m = len(W)
        h4 = True
        if i < m - 1:
            h4 = (abs(V[W[i + 1], 2] - self.z0) <= atol and abs(V[W[m - 1], 2] - self.z0) <= atol
                  and abs(V[wi, 2] - zt) <= atol and abs(V[w0, 2] - zt) <= atol)
        h5 = bool(np.allclose(V[suf], self.origin[suf], rtol=0, atol=atol)) if suf else True
        return {"H1": bool(h1), "H2": planar and convex, "H3": bool(h3), "H4": bool(h4), "H5": h5}


def _lift_angle(X, o, q, target_z=None) -> float:
    """Smallest upward rotation of X about line oq reaching height target_z
    (or the top of its circle when target_z is None)."""
    a = (q - o) / np.linalg.norm(q - o)
    c = o + ((X - o) @ a) * a
    r = X - c
    s = np.cross(a, r)
    rad = math.hypot(r[2], s[2])
    phi0 = math.atan2(s[2], r[2])
    if target_z is None:
        return phi0
    if rad == 0 or (target_z - c[2]) / rad >= 1.0:
        raise ValueError("the lifting circle does not reach the target plane")
    alpha = math.acos((target_z - c[2]) / rad)
    return phi0 - alpha if phi0 > 0 else phi0 + alpha


def _lift_move(st: ArchState, k: int, o_idx: int, q_idx: int, tag: str, to_top=False) -> RotationMove:
    V = st.V
    v = st.W[k]
    o, q = V[o_idx], V[q_idx]
    theta = _lift_angle(V[v], o, q, None if to_top else st.z0 + st.eps)
    carried = tuple(sorted(st.carried_link_pair(k)))
    return RotationMove([JointRotation(o_idx, AxisLine(o, q - o), theta, carried)], tag)


def _apply(st: ArchState, mv) -> None:
    st.V = mv.positions(st.V, [1.0])[0]


def _prepare(p: Chain, tol: Tolerance):
    if not p.closed or len(p) < 3:
        raise ValueError("convexification needs a closed polygon")
    z0 = _check_horizontal(p, tol)
    rep = is_simple(p, tol)
    if not rep.simple:
        raise ValueError(f"polygon is not simple (links {rep.pair}, folded joint {rep.folded_joint})")
    reduced, kept = freeze_collinear(p, tol)
    bundle = polygon_bundle(reduced, tol)
    rv = reduced.vertices
    o = 1.0 if _area2(rv) > 0 else -1.0
    m = len(rv)
    turns = [o * _turn2(rv[k - 1], rv[k], rv[(k + 1) % m]) for k in range(m)]
    cand = [k for k in range(m) if turns[k] > tol.eps_ang]
    if not cand:
        raise ValueError("no strictly convex vertex")
    k1 = max(cand, key=lambda k: bundle.r_i[k])
    W = [kept[(k1 - 1 + j) % m] for j in range(m)]
    return ArchState(2, np.array(p.vertices), W, set(), bundle, np.array(p.vertices), z0, tol)


def s0_init(p: Chain, tol: Tolerance = DEFAULT_TOL):
    """Relabel, then lift v1, v0, v2 to the plane at height eps and stand v1 up."""
    st = _prepare(p, tol)
    W = st.W
    m = len(W)
    moves = []
    for tag, k, o, q, top in (("S0-1", 1, W[0], W[2], False), ("S0-2", 0, W[m - 1], W[1], False),
                              ("S0-3", 2, W[1], W[3 % m], False), ("S0-4", 1, W[0], W[2], True)):
        mv = _lift_move(st, k, o, q, tag, to_top=top)
        _apply(st, mv)
        moves.append(mv)
    return st, moves


def s1_lift(st: ArchState):
    """Start step i+1: lift v_{i+1} about the line through v'_i and v_{i+2} up to the plane at eps."""
    st.i += 1
    i, W = st.i, st.W
    m = len(W)
    mv = _lift_move(st, i, W[i - 1], W[(i + 1) % m], f"S1-{i}")
    _apply(st, mv)
    return st, mv


def s2_flatten_arch(st: ArchState):
    """Lay the arch v'_0..v'_{i-1} down into the plane at eps, away from v'_i."""
    i, W, V = st.i, st.W, st.V
    w0, wa, wi = W[0], W[i - 1], W[i]
    base = V[wa] - V[w0]
    scale = float(np.linalg.norm(base))
    side = orient2d(V[w0], V[wa], V[wi])
    if abs(side) <= 1e-12 * scale * scale:
        t = (V[wi, :2] - V[w0, :2]) @ base[:2] / scale ** 2
        if t < 0:
            raise AssertionError("v'_i precedes v'_0 on the arch base line")
        land = 1.0
    else:
        land = -1.0 if side > 0 else 1.0
    # rotating +90 degrees about the base carries "up" to its right-hand side
    theta = HALF_PI if land < 0 else -HALF_PI
    carried = tuple(sorted(st.seg(w0, wa)))
    mv = RotationMove([JointRotation(w0, AxisLine(V[w0], base), theta, carried)], f"S2-{i}")
    _apply(st, mv)
    return st, mv


def _arch_ring(st: ArchState):
    i, W = st.i, st.W
    w0, wi = W[0], W[i]
    ring = st.arch()
    fixed = (wi, w0)
    if i == len(W) - 1:
        ring = ring + st.seg(wi, w0)
        fixed = None
    live = set(W) - st.frozen
    return ring, [v for v in ring if v in live], fixed


def s3_convexify(st: ArchState):
    """Convexify the flattened barbed polygon, then make its base endpoints strictly convex."""
    i, W = st.i, st.W
    ring, joints, fixed = _arch_ring(st)
    R = _Ring(ring, joints, fixed)
    st.V, moves, fz = _barbed_core(st.V, R, W[i], st.tol, f"S3-{i}")
    st.frozen |= set(fz) - {W[0], W[i]}
    barb = len(moves)
    if i < len(W) - 1:
        ring, joints, fixed = _arch_ring(st)
        R = _Ring(ring, joints, fixed)
        for s in (W[0], W[i]):
            mv, st.V = _strictify_core(st.V, R, s, st.tol, f"strict-{i}-{s}")
            if mv is not None:
                moves.append(mv)
    return st, moves, barb


def s4_raise_arch(st: ArchState):
    """Stand the convex polygon on base v'_0 v'_i back up into the vertical plane."""
    i, W, V = st.i, st.W, st.V
    w0, wi = W[0], W[i]
    ring, joints, fixed = _arch_ring(st)
    R = _Ring(ring, joints, fixed)
    strict = _strict_joints(V, R, st.tol)
    if w0 not in strict or wi not in strict:
        raise ValueError("arch base endpoints must be strictly convex before raising")
    carried = st.seg(w0, wi)
    a = V[wi] - V[w0]
    a = a / np.linalg.norm(a)
    q = V[carried].mean(axis=0) - V[w0]
    q = q - (q @ a) * a
    theta = HALF_PI if np.cross(a, q)[2] > 0 else -HALF_PI
    mv = RotationMove([JointRotation(w0, AxisLine(V[w0], a), theta, tuple(sorted(carried)))], f"S4-{i}")
    _apply(st, mv)
    return st, mv


@dataclass
class ConvexifyResult:
    trace: Trace
    bundle: ClearanceBundle | None
    audits: list = field(default_factory=list)
    lift_offsets: list = field(default_factory=list)
    barb_moves: int = 0
    strict_moves: int = 0
    steps: int = 0
    frozen: int = 0

    @property
    def n_moves(self) -> int:
        return len(self.trace.moves)

    @property
    def constant(self) -> float:
        """Moves per vertex."""
        return self.n_moves / len(self.trace.initial)

    @property
    def audits_ok(self) -> bool:
        return all(all(a.values()) for _, a in self.audits)


def convexify_planar_run(p: Chain, tol: Tolerance = DEFAULT_TOL, samples_per_move: int = 16) -> ConvexifyResult:
    if not p.closed:
        raise ValueError("convexification needs a closed polygon")
    _check_horizontal(p, tol)
    rep = is_simple(p, tol)
    if not rep.simple:
        raise ValueError(f"polygon is not simple (links {rep.pair}, folded joint {rep.folded_joint})")
    if is_convex_polygon(p, tol) != Convexity.NONCONVEX:
        return ConvexifyResult(Trace(p, [], samples_per_move, final=np.array(p.vertices)), None)
    st, moves = s0_init(p, tol)
    res = ConvexifyResult(None, st.bundle)
    res.audits.append((2, st.audit()))
    m = len(st.W)
    while st.i < m - 1:
        i = st.i + 1
        res.steps += 1
        before = st.origin[st.W[i], :2]
        st, mv = s1_lift(st)
        moves.append(mv)
        res.lift_offsets.append(float(np.linalg.norm(st.V[st.W[i], :2] - before)))
        st, mv = s2_flatten_arch(st)
        moves.append(mv)
        st, mvs, barb = s3_convexify(st)
        moves.extend(mvs)
        res.barb_moves += barb
        res.strict_moves += len(mvs) - barb
        if i == m - 1:
            break
        st, mv = s4_raise_arch(st)
        moves.append(mv)
        res.audits.append((i, st.audit()))
    res.frozen = len(st.frozen)
    res.trace = Trace(p, moves, samples_per_move, final=st.V)
    return res


def convexify_planar(p: Chain, tol: Tolerance = DEFAULT_TOL, samples_per_move: int = 16) -> Trace:
    """Convexify a simple polygon lying in a horizontal plane."""
    return convexify_planar_run(p, tol, samples_per_move).trace


# pocket flipping ----------------------------------------------------------------

@dataclass
class FlipResult:
    trace: Trace
    flips: int
    convex: bool


def _pockets(V):
    from scipy.spatial import ConvexHull

    n = len(V)
    hull = sorted(int(h) for h in ConvexHull(V[:, :2]).vertices)
    out = []
    for k, u in enumerate(hull):
        w = hull[(k + 1) % len(hull)]
        if (w - u) % n > 1:
            out.append((u, w))
    return out


def pocket_flip_run(p: Chain, max_flips: int = 1000, tol: Tolerance = DEFAULT_TOL,
                    samples_per_move: int = 16) -> FlipResult:
    """Reflect pockets across their hull lids, by half turns in 3D, until convex."""
    if not p.closed:
        raise ValueError("pocket flipping needs a closed polygon")
    _check_horizontal(p, tol)
    rep = is_simple(p, tol)
    if not rep.simple:
        raise ValueError(f"polygon is not simple (links {rep.pair})")
    V = np.array(p.vertices)
    n = len(V)
    moves = []
    convex = False
    while True:
        if is_convex_polygon(p.with_vertices(V), tol) != Convexity.NONCONVEX:
            convex = True
            break
        if len(moves) >= max_flips:
            break
        flipped = False
        for u, w in _pockets(V):
            inner = [(u + s) % n for s in range(1, (w - u) % n)]
            off = [abs(orient2d(V[u], V[w], V[v])) for v in inner]
            if max(off) <= tol.eps_len * p.scale ** 2:
                continue
            mv = RotationMove([JointRotation(u, AxisLine(V[u], V[w] - V[u]), math.pi, tuple(sorted(inner)))],
                              f"flip-{len(moves)}")
            V = mv.positions(V, [1.0])[0]
            V[:, 2] = p.vertices[0, 2]
            moves.append(mv)
            flipped = True
            break
        if not flipped:
            break
    return FlipResult(Trace(p, moves, samples_per_move, final=V), len(moves), convex)


def pocket_flip_convexify(p: Chain, max_flips: int = 1000, tol: Tolerance = DEFAULT_TOL) -> Trace:
    return pocket_flip_run(p, max_flips, tol).trace
