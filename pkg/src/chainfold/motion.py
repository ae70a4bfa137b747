"""Moves, traces, replay and the sampled trace verifier.

A move is a bounded set of simultaneous joint rotations executed over a unit
time parameter. Two concrete kinds exist:

``RotationMove``
    Up to four rotations, each about an axis given in world coordinates at
    the start of the move, applied to an explicit set of carried vertices.
    A rotation listed later whose carried set lies inside an earlier one's has
    its axis carried along by that earlier rotation, so one point can be
    pushed through a small kinematic tree. Angles grow linearly in t.

``FourBarMove``
    A closed planar four-bar (possibly with rigid bodies hanging off its bars)
    driven by one diagonal whose length grows linearly in t. The four pivot
    angles follow from closure, which linear angle interpolation could not
    keep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, fourbar
from .chain import Chain, nonadjacent_pairs
from .geom import DEFAULT_TOL, AxisLine, Tolerance

MAX_ROTATIONS = 4


@dataclass(frozen=True)
class JointRotation:
    joint: int
    axis: AxisLine
    angle: float
    carried: tuple
    parent: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "carried", tuple(sorted(int(i) for i in self.carried)))
        object.__setattr__(self, "angle", float(self.angle))


@dataclass
class RotationMove:
    rotations: list
    tag: str = ""
    kind = "rotations"

    def __post_init__(self):
        for k, r in enumerate(self.rotations):
            if r.parent is not None:
                if not 0 <= r.parent < k:
                    raise ValueError(f"rotation {k}: parent must precede it")
                if not set(r.carried) <= set(self.rotations[r.parent].carried):
                    raise ValueError(f"rotation {k}: carried set escapes its parent")

    @property
    def n_rotations(self) -> int:
        return len(self.rotations)

    def swept_angle(self) -> float:
        return max((abs(r.angle) for r in self.rotations), default=0.0)

    def positions(self, V: np.ndarray, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        X = np.repeat(V[None, :, :], len(ts), axis=0)
        for r in reversed(self.rotations):
            if not r.carried or r.angle == 0.0:
                continue
            idx = np.asarray(r.carried)
            R = _rotations(r.axis.direction, r.angle * ts)
            o = r.axis.origin
            X[:, idx] = np.einsum("sij,skj->ski", R, X[:, idx] - o) + o
        return X

    def applied_angles(self, V, ts) -> np.ndarray:
        return np.outer(np.atleast_1d(ts), [r.angle for r in self.rotations])

    def rigid_groups(self, n: int) -> np.ndarray:
        key = np.zeros(n, dtype=np.int64)
        for k, r in enumerate(self.rotations):
            if r.carried and r.angle != 0.0:
                key[np.asarray(r.carried)] |= 1 << k
        return key

    def touched(self) -> set:
        return {i for r in self.rotations if r.angle != 0.0 for i in r.carried}


@dataclass
class FourBarMove:
    pivots: tuple
    bodies: tuple
    ground: int
    driver: int
    d0: float
    d1: float
    signs: tuple
    frame: tuple | None = None
    tag: str = ""
    kind = "fourbar"

    def __post_init__(self):
        self.pivots = tuple(int(p) for p in self.pivots)
        self.bodies = tuple(tuple(int(i) for i in b) for b in self.bodies)
        if len(self.pivots) != 4 or len(self.bodies) != 4 or len(set(self.pivots)) != 4:
            raise ValueError("a four-bar move needs four distinct pivots and four body lists")
        self.signs = tuple(float(s) for s in self.signs)
        if self.frame is not None:
            self.frame = tuple(int(i) for i in self.frame)

    @property
    def n_rotations(self) -> int:
        return 4

    def rotations_summary(self, V):
        """Per-pivot angle change over the move, as (joint, radians) pairs."""
        A = self.applied_angles(V, [0.0, 1.0])
        return [(p, float(A[1, k] - A[0, k])) for k, p in enumerate(self.pivots)]

    def _pivot_positions(self, V, ts):
        P0 = V[list(self.pivots)]
        out = []
        for t in np.atleast_1d(ts):
            D = self.d0 + (self.d1 - self.d0) * t
            out.append(fourbar.solve(P0, self.ground, self.driver, D, self.signs))
        return P0, np.array(out)

    def positions(self, V: np.ndarray, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        P0, Ps = self._pivot_positions(V, ts)
        X = np.repeat(V[None, :, :], len(ts), axis=0)
        piv = list(self.pivots)
        g = self.ground % 4
        everyone = np.asarray(sorted(self.members()), dtype=np.int64)
        for s in range(len(ts)):
            P = Ps[s]
            for k in range(4):
                body = self.bodies[k]
                if not body or k == g:
                    continue
                R, tr = fourbar.rigid_2d(P0[k], P0[(k + 1) % 4], P[k], P[(k + 1) % 4])
                idx = np.asarray(body)
                X[s, idx, :2] = V[idx, :2] @ R.T + tr
            X[s, piv, :2] = P[:, :2]
            if self.frame is not None:
                fa, fb = self.frame
                R, tr = fourbar.rigid_2d(X[s, fa], X[s, fb], V[fa], V[fb])
                X[s, everyone, :2] = X[s, everyone, :2] @ R.T + tr
        return X

    def bar_members(self):
        return [set(self.bodies[k]) | {self.pivots[k], self.pivots[(k + 1) % 4]} for k in range(4)]

    def members(self) -> set:
        s = set(self.pivots)
        for b in self.bodies:
            s.update(b)
        return s

    def moving_set(self) -> set:
        """Vertices whose position can change during the move."""
        if self.frame is not None:
            return self.members()
        return self.members() - self.bar_members()[self.ground % 4]

    def applied_angles(self, V, ts) -> np.ndarray:
        _, Ps = self._pivot_positions(V, ts)
        return np.array([fourbar.interior_angles(P) for P in Ps])

    def edge_groups(self, edges: np.ndarray, n: int) -> np.ndarray:
        """Bar index each edge moves rigidly with; 4 for static edges, -1 otherwise."""
        members = self.bar_members()
        moving = self.moving_set()
        g = np.full(len(edges), -1, dtype=np.int64)
        for e, (u, w) in enumerate(edges):
            if u not in moving and w not in moving:
                g[e] = 4
                continue
            for k in range(4):
                if u in members[k] and w in members[k]:
                    g[e] = k
                    break
        return g

    def touched(self) -> set:
        return self.moving_set()


def _rotations(direction, angles) -> np.ndarray:
    k = np.asarray(direction, dtype=float)
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    c = np.cos(angles)[:, None, None]
    s = np.sin(angles)[:, None, None]
    return np.eye(3) * c + s * kx + (1.0 - c) * np.outer(k, k)


def apply_move(c: Chain, m, t: float) -> Chain:
    """Configuration of ``c`` at parameter ``t`` of move ``m``; t = 0 returns c."""
    if t == 0.0:
        return c
    return c.with_vertices(m.positions(np.asarray(c.vertices), [t])[0])


@dataclass
class Trace:
    initial: Chain
    moves: list = field(default_factory=list)
    samples_per_move: int = 16
    max_step_angle: float = 0.01
    final: np.ndarray | None = None

    def replay(self, upto: int | None = None) -> Chain:
        V = np.array(self.initial.vertices)
        for m in self.moves[:upto]:
            V = m.positions(V, [1.0])[0]
        return self.initial.with_vertices(V)

    def keyframes(self):
        """Configuration after each move, starting with the initial one."""
        V = np.array(self.initial.vertices)
        out = [V]
        for m in self.moves:
            V = m.positions(V, [1.0])[0]
            out.append(V)
        return out

    def extend(self, moves):
        self.moves.extend(moves)
        return self

    def transformed(self, R: np.ndarray, shift: np.ndarray) -> "Trace":
        """Same motion after the rigid map x -> R x + shift."""
        moves = []
        for m in self.moves:
            if not isinstance(m, RotationMove):
                raise TypeError("only rotation moves can be re-framed in 3D")
            rots = [JointRotation(r.joint, AxisLine(R @ r.axis.origin + shift, R @ r.axis.direction),
                                  r.angle, r.carried, r.parent) for r in m.rotations]
            moves.append(RotationMove(rots, m.tag))
        init = self.initial.with_vertices(self.initial.vertices @ R.T + shift)
        fin = None if self.final is None else self.final @ R.T + shift
        return Trace(init, moves, self.samples_per_move, self.max_step_angle, fin)


def count_moves(tr: Trace, tag_prefix: str | None = None) -> int:
    if tag_prefix is None:
        return len(tr.moves)
    return sum(1 for m in tr.moves if m.tag.startswith(tag_prefix))


@dataclass
class VerificationReport:
    simple_at_all_samples: bool
    min_clearance: float
    max_length_drift: float
    move_count: int
    max_rotations_per_move: int
    monotone: list
    samples: int
    min_clearance_at: tuple | None = None
    final_matches: bool | None = None
    violations: list = field(default_factory=list)
    length_tolerance: float = DEFAULT_TOL.eps_len

    @property
    def rotations_ok(self) -> bool:
        return self.max_rotations_per_move <= MAX_ROTATIONS

    @property
    def passed(self) -> bool:
        return (self.simple_at_all_samples and self.max_length_drift <= self.length_tolerance
                and self.rotations_ok and all(self.monotone) and self.final_matches is not False)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "simple_at_all_samples": self.simple_at_all_samples,
            "min_clearance": self.min_clearance,
            "min_clearance_at": list(self.min_clearance_at) if self.min_clearance_at else None,
            "max_length_drift": self.max_length_drift,
            "move_count": self.move_count,
            "max_rotations_per_move": self.max_rotations_per_move,
            "monotone": list(self.monotone),
            "samples": self.samples,
            "final_matches": self.final_matches,
            "violations": list(self.violations),
        }


def sample_params(V, m, samples_per_move: int = 16, max_step: float = 0.01) -> np.ndarray:
    """Sample parameters in [0, 1] with every joint turning at most ``max_step`` between samples."""
    if isinstance(m, RotationMove):
        S = max(samples_per_move, math.ceil(m.swept_angle() / max_step))
        return np.linspace(0.0, 1.0, S + 1)
    ts = np.linspace(0.0, 1.0, samples_per_move + 1)
    A = m.applied_angles(V, ts)
    for _ in range(40):
        jumps = np.abs(np.diff(A, axis=0)).max(axis=1)
        bad = np.nonzero(jumps > max_step)[0]
        if not len(bad):
            break
        mids = 0.5 * (ts[bad] + ts[bad + 1])
        A_mid = m.applied_angles(V, mids)
        ts = np.insert(ts, bad + 1, mids)
        A = np.insert(A, bad + 1, A_mid, axis=0)
    return ts


def _dynamic_pairs(m, edges, all_pairs, n):
    if isinstance(m, RotationMove):
        key = m.rigid_groups(n)
        ku, kw = key[edges[:, 0]], key[edges[:, 1]]
        g = np.where(ku == kw, ku, -1)
    else:
        g = m.edge_groups(edges, n)
    g1, g2 = g[all_pairs[:, 0]], g[all_pairs[:, 1]]
    same = (g1 == g2) & (g1 >= 0)
    return all_pairs[~same]


def verify_trace(tr: Trace, tol: Tolerance = DEFAULT_TOL, samples_per_move: int | None = None,
                 max_step: float | None = None) -> VerificationReport:
    """Replay ``tr`` and check simplicity, link lengths, rotation counts and monotonicity.

    Simplicity is checked at every sampled parameter of every move; pairs of
    links that move rigidly together are only checked at move starts.
    """
    spm = samples_per_move or tr.samples_per_move
    step = max_step or tr.max_step_angle
    c = tr.initial
    n = len(c)
    edges = c.edges.astype(np.int64)
    L0 = c.lengths
    all_pairs = nonadjacent_pairs(c.n_edges, c.closed)
    V = np.array(c.vertices)

    min_clear, at = math.inf, None
    drift = 0.0
    monotone = []
    violations = []
    max_rot = 0
    samples = 0

    def scan(X, pairs, move_idx, ts):
        nonlocal min_clear, at
        if not len(pairs) or not len(X):
            return
        d, s, k = _kernels.min_pair_clearance(X, edges, pairs)
        if d < min_clear:
            min_clear = float(d)
            at = (move_idx, float(ts[s]), int(pairs[k, 0]), int(pairs[k, 1]))

    def joints_ok(X, move_idx):
        P = X[:, edges[:, 0]]
        Q = X[:, edges[:, 1]]
        d = Q - P
        if c.closed:
            a, b = -np.roll(d, 1, axis=1), d
        else:
            a, b = -d[:, :-1], d[:, 1:]
        if a.shape[1] == 0:
            return
        cr = np.linalg.norm(np.cross(a, b), axis=2)
        ang = np.arctan2(cr, np.einsum("sij,sij->si", a, b))
        if ang.min() <= tol.eps_ang:
            violations.append(f"move {move_idx}: adjacent links overlap")

    scan(V[None], all_pairs, -1, [0.0])
    joints_ok(V[None], -1)
    for mi, m in enumerate(tr.moves):
        max_rot = max(max_rot, m.n_rotations)
        idx = np.asarray(sorted(m.touched()), dtype=np.int64)
        if np.any(idx < 0) or np.any(idx >= n):
            raise ValueError(f"move {mi} references a vertex outside the chain")
        ts = sample_params(V, m, spm, step)
        X = m.positions(V, ts)
        samples += len(ts) - 1
        if not np.all(np.isfinite(X)):
            violations.append(f"move {mi}: non-finite coordinates")
            monotone.append(False)
            break
        ends = X[:, edges[:, 1]] - X[:, edges[:, 0]]
        rel = np.abs(np.linalg.norm(ends, axis=2) - L0) / L0
        drift = max(drift, float(rel.max()))
        A = m.applied_angles(V, ts)
        dA = np.diff(A, axis=0)
        mono = bool(np.all((dA >= -1e-9).all(axis=0) | (dA <= 1e-9).all(axis=0)))
        monotone.append(mono)
        if not mono:
            violations.append(f"move {mi}: joint rotation reverses")
        scan(X[1:], _dynamic_pairs(m, edges, all_pairs, n), mi, ts[1:])
        joints_ok(X[1:], mi)
        V = X[-1]
        scan(V[None], all_pairs, mi, [1.0])

    simple = min_clear > tol.eps_clear and not any("overlap" in v for v in violations)
    if min_clear <= tol.eps_clear:
        violations.append(f"clearance {min_clear:.3g} at {at}")
    if drift > tol.eps_len:
        violations.append(f"link length drift {drift:.3g}")
    if max_rot > MAX_ROTATIONS:
        violations.append(f"a move rotates {max_rot} joints")
    final_ok = None
    if tr.final is not None:
        final_ok = bool(np.allclose(V, tr.final, rtol=0, atol=tol.eps_len * c.scale))
        if not final_ok:
            violations.append("replayed final configuration differs from the recorded one")
    return VerificationReport(simple, min_clear, drift, len(tr.moves), max_rot, monotone, samples,
                              at, final_ok, violations, tol.eps_len)
