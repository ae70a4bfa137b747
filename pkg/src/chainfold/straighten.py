"""Straightening open chains: the accordion method for chains with a simple
orthogonal projection, and the normal-ray pick-up for chains drawn on the
surface of a convex polytope."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import Chain, SurfaceChain, VerticalPlane, is_monotone_in_vertical_plane, is_simple
from .clearance import cylinder_params, vertex_clearances
from .geom import DEFAULT_TOL, AxisLine, Tolerance, rotation_matrix, signed_angle_2d
from .motion import JointRotation, RotationMove, Trace

STOP_FACTOR = 1.0 - 1e-6
Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ProjectionPlane:
    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if n.shape != (3,) or np.linalg.norm(n) == 0:
            raise ValueError("projection plane needs a nonzero 3D normal")
        object.__setattr__(self, "normal", n / np.linalg.norm(n))
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))


XY = ProjectionPlane(np.zeros(3), Z)


def frame_to_xy(normal) -> np.ndarray:
    """Rotation taking ``normal`` to +z."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    axis = np.cross(n, Z)
    s = np.linalg.norm(axis)
    if s < 1e-15:
        return np.eye(3) if n[2] > 0 else np.diag([1.0, -1.0, -1.0])
    return rotation_matrix(axis, math.atan2(s, float(n @ Z)))


@dataclass
class AccordionState:
    step: int
    chain: Chain
    plane: VerticalPlane
    axes: np.ndarray
    r: float
    delta: float

    @property
    def axis_xy(self) -> np.ndarray:
        """Horizontal position of the axis of the cylinder the prefix is packed into."""
        return self.axes[self.step]

    def drift(self) -> float:
        """Horizontal distance from v0 to the current cylinder axis."""
        return float(np.linalg.norm(self.chain.vertices[0, :2] - self.axis_xy))

    def check(self, tol: Tolerance = DEFAULT_TOL) -> dict:
        """Step invariants: prefix in the plane and monotone, v0 within step * delta of the axis."""
        k = self.step
        prefix = Chain(self.chain.vertices[: k + 2])
        try:
            mono = is_monotone_in_vertical_plane(prefix, self.plane, tol)
            planar = True
        except ValueError:
            mono, planar = False, False
        return {"planar": planar, "monotone": mono,
                "drift_ok": self.drift() <= k * self.delta + tol.eps_len * self.chain.scale}


def _horizontal(v):
    h = np.array([v[0], v[1], 0.0])
    n = np.linalg.norm(h)
    return h / n if n > 0 else h


def _lift_rotations(V, i, target_elev, drag=True):
    """Rotate link (v_i, v_{i+1}) about v_{i+1} in its vertical plane to the
    given elevation, translating v_0..v_{i-1} along with v_i."""
    pivot = V[i + 1]
    w = V[i] - pivot
    h = _horizontal(w)
    elev = math.atan2(w[2], float(w @ h))
    theta = target_elev - elev
    axis_dir = np.cross(h, Z)
    rots = [JointRotation(i + 1, AxisLine(pivot, axis_dir), theta, tuple(range(i + 1)))]
    if drag and i > 0:
        rots.append(JointRotation(i, AxisLine(V[i], axis_dir), -theta, tuple(range(i)), parent=0))
    return rots


def stage1_step(s: AccordionState, tol: Tolerance = DEFAULT_TOL):
    """One accordion step: pack the prefix into the next cylinder, then swing it into the next plane."""
    i = s.step
    V = np.array(s.chain.vertices)
    n = len(V)
    if i > n - 3:
        raise ValueError("no accordion step left")
    inv = s.check(tol)
    if not all(inv.values()):
        raise ValueError(f"accordion invariant broken on entry to step {i}: {inv}")
    ell = s.chain.lengths[i]
    stop = s.delta * STOP_FACTOR
    up = V[i, 2] >= V[i + 1, 2]
    target = math.acos(min(1.0, stop / ell)) * (1 if up else -1)
    ma = RotationMove(_lift_rotations(V, i, target), f"stage1-{i}a")
    V = ma.positions(V, [1.0])[0]

    d = V[i, :2] - V[i + 1, :2]
    u = V[i + 2, :2] - V[i + 1, :2]
    phi = signed_angle_2d(d, -u)
    mb = RotationMove([JointRotation(i + 1, AxisLine(V[i + 1], Z), phi, tuple(range(i + 1)))], f"stage1-{i}b")
    V = mb.positions(V, [1.0])[0]
    plane = VerticalPlane(V[i + 1], np.append(u, 0.0))
    nxt = AccordionState(i + 1, s.chain.with_vertices(V), plane, s.axes, s.r, s.delta)
    return nxt, [ma, mb]


def stage2_unfold(s: AccordionState, tol: Tolerance = DEFAULT_TOL, lay_down: bool = True):
    """Straighten a chain that is monotone in one vertical plane, one joint at a time from v0."""
    V = np.array(s.chain.vertices)
    n = len(V)
    if n >= 3 and not is_monotone_in_vertical_plane(s.chain, s.plane, tol):
        raise ValueError("stage 2 needs a chain monotone in a vertical plane")
    normal = s.plane.normal
    moves = []
    for j in range(1, n - 1):
        a = V[j - 1] - V[j]
        b = V[j] - V[j + 1]
        # signed angle from a to b about the plane normal
        ang = math.atan2(float(np.cross(a, b) @ normal), float(a @ b))
        m = RotationMove([JointRotation(j, AxisLine(V[j], normal), ang, tuple(range(j)))], f"stage2-{j}")
        V = m.positions(V, [1.0])[0]
        moves.append(m)
    if lay_down and n >= 2:
        w = V[0] - V[n - 1]
        h = _horizontal(w)
        if np.linalg.norm(h) == 0:
            h = s.plane.direction
        elev = math.atan2(w[2], float(w @ h))
        axis = AxisLine(V[n - 1], np.cross(h, Z))
        moves.append(RotationMove([JointRotation(n - 1, axis, -elev, tuple(range(n - 1)))], "stage2-lay"))
    return moves


def _is_straight(c: Chain, tol: Tolerance) -> bool:
    return len(c) < 3 or bool(np.all(c.joint_angles() >= math.pi - tol.eps_ang))


@dataclass
class StraightenResult:
    trace: Trace
    states: list
    r: float
    delta: float
    stage1_moves: int
    stage2_moves: int


def straighten_projection_run(c: Chain, plane: ProjectionPlane | None = None,
                              tol: Tolerance = DEFAULT_TOL, samples_per_move: int = 16) -> StraightenResult:
    if c.closed:
        raise ValueError("straightening needs an open chain")
    plane = plane or XY
    rep = is_simple(c, tol)
    if not rep.simple:
        raise ValueError(f"chain is not simple (links {rep.pair}, folded joint {rep.folded_joint})")
    if _is_straight(c, tol):
        return StraightenResult(Trace(c, [], samples_per_move, final=np.array(c.vertices)), [], math.inf, math.inf, 0, 0)
    R = frame_to_xy(plane.normal)
    V0 = c.vertices @ R.T
    work = c.with_vertices(V0)
    r_i = vertex_clearances(work, tol)
    n = len(c)
    r, delta = cylinder_params(r_i, n)
    axes = V0[:, :2].copy()
    state = AccordionState(0, work, VerticalPlane(V0[0], V0[1] - V0[0]), axes, r, delta)
    states = [state]
    moves = []
    for _ in range(n - 2):
        state, mv = stage1_step(state, tol)
        states.append(state)
        moves.extend(mv)
    s1 = len(moves)
    moves.extend(stage2_unfold(state, tol))
    tr = Trace(work, moves, samples_per_move)
    tr = tr.transformed(R.T, np.zeros(3))
    tr.initial = c
    tr.final = tr.replay().vertices.copy()
    return StraightenResult(tr, states, r, delta, s1, len(moves) - s1)


def straighten_projection(c: Chain, plane: ProjectionPlane | None = None,
                          tol: Tolerance = DEFAULT_TOL, samples_per_move: int = 16) -> Trace:
    """Straighten an open chain whose orthogonal projection onto ``plane`` is simple."""
    return straighten_projection_run(c, plane, tol, samples_per_move).trace


def straighten_on_polytope(sc: SurfaceChain, tol: Tolerance = DEFAULT_TOL, samples_per_move: int = 16) -> Trace:
    """Pick a surface chain up into the outward normal ray, one link at a time.

    Each link is lifted about its far end until it points along the normal of
    its face, with the already straightened prefix translated along. Where
    consecutive links lie in different faces the straight prefix is swivelled
    from one face normal to the next about their common perpendicular.
    """
    c = sc.chain
    rep = is_simple(c, tol)
    if not rep.simple:
        raise ValueError(f"chain is not simple (links {rep.pair})")
    V = np.array(c.vertices)
    normals = sc.polytope.normals
    moves = []
    for i in range(c.n_edges):
        nf = normals[sc.edge_faces[i]]
        pivot = V[i + 1]
        w = V[i] - pivot
        h = w - (w @ nf) * nf
        h /= np.linalg.norm(h)
        elev = math.atan2(float(w @ nf), float(w @ h))
        theta = math.pi / 2 - elev
        axis_dir = np.cross(h, nf)
        rots = [JointRotation(i + 1, AxisLine(pivot, axis_dir), theta, tuple(range(i + 1)))]
        if i > 0:
            rots.append(JointRotation(i, AxisLine(V[i], axis_dir), -theta, tuple(range(i)), parent=0))
        m = RotationMove(rots, f"lift-{i}")
        V = m.positions(V, [1.0])[0]
        moves.append(m)
        if i + 1 < c.n_edges:
            ng = normals[sc.edge_faces[i + 1]]
            if sc.edge_faces[i + 1] != sc.edge_faces[i]:
                ax = np.cross(nf, ng)
                ang = math.atan2(float(np.linalg.norm(ax)), float(nf @ ng))
                if np.linalg.norm(ax) > 0:
                    m = RotationMove([JointRotation(i + 1, AxisLine(V[i + 1], ax), ang, tuple(range(i + 1)))],
                                     f"swivel-{i + 1}")
                    V = m.positions(V, [1.0])[0]
                    moves.append(m)
    return Trace(c, moves, samples_per_move, final=V)


def prefix_clearance(sc: SurfaceChain, V) -> float:
    """Smallest signed distance to the polytope over the lifted prefix vertices (-inf if none lifted)."""
    d = [sc.polytope.signed_distance(p) for p in V]
    return min(d) if d else -math.inf
