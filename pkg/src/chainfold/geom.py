"""Double-precision 3D/2D primitives shared by every other module."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tolerance:
    """Numeric slack used by predicates and the trace verifier.

    ``eps_len`` is relative (link-length drift), ``eps_ang`` is in radians and
    ``eps_clear`` is an absolute clearance floor below which two features count
    as touching.
    """

    eps_len: float = 1e-9
    eps_ang: float = 1e-9
    eps_clear: float = 1e-12

    def __post_init__(self):
        for name in ("eps_len", "eps_ang", "eps_clear"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")


DEFAULT_TOL = Tolerance()


def point(*coords) -> np.ndarray:
    """Build a finite 3-vector; 2D input gets z = 0."""
    if len(coords) == 1 and np.ndim(coords[0]) == 1:
        coords = tuple(coords[0])
    p = np.zeros(3)
    if len(coords) not in (2, 3):
        raise ValueError(f"expected 2 or 3 coordinates, got {len(coords)}")
    p[: len(coords)] = coords
    if not np.all(np.isfinite(p)):
        raise ValueError(f"non-finite coordinate in {coords!r}")
    return p


@dataclass(frozen=True)
class Segment:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", point(self.a))
        object.__setattr__(self, "b", point(self.b))

    @property
    def degenerate(self) -> bool:
        return bool(np.all(self.a == self.b))

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))


@dataclass(frozen=True)
class AxisLine:
    """Oriented line; ``direction`` is normalised on construction."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        d = point(self.direction)
        norm = np.linalg.norm(d)
        if norm == 0:
            raise ValueError("axis direction must be nonzero")
        object.__setattr__(self, "origin", point(self.origin))
        # leave already-unit vectors alone so stored axes reload bit for bit
        object.__setattr__(self, "direction", d if abs(norm - 1.0) <= 2e-16 else d / norm)

    @classmethod
    def through(cls, p, q) -> "AxisLine":
        p = point(p)
        return cls(p, point(q) - p)


def closest_param_on_segment(p, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return 0.0
    return min(1.0, max(0.0, float((p - a) @ ab) / denom))


def dist_point_segment(p, s: Segment) -> float:
    """Distance from ``p`` to the closed segment ``s``."""
    p = point(p)
    t = closest_param_on_segment(p, s.a, s.b)
    return float(np.linalg.norm(p - (s.a + t * (s.b - s.a))))


def segment_segment_closest(p1, q1, p2, q2):
    """Closest points between segments p1q1 and p2q2.

    Returns ``(distance, s, t)`` with the closest points at ``p1 + s (q1 - p1)``
    and ``p2 + t (q2 - p2)``. Parallel and degenerate cases are handled by
    falling back to endpoint projections.
    """
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    if a == 0.0 and e == 0.0:
        return float(np.linalg.norm(r)), 0.0, 0.0
    if a == 0.0:
        s, t = 0.0, min(1.0, max(0.0, f / e))
    else:
        c = float(d1 @ r)
        if e == 0.0:
            t, s = 0.0, min(1.0, max(0.0, -c / a))
        else:
            b = float(d1 @ d2)
            denom = a * e - b * b
            s = min(1.0, max(0.0, (b * f - c * e) / denom)) if denom > 1e-14 * a * e else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t, s = 0.0, min(1.0, max(0.0, -c / a))
            elif t > 1.0:
                t, s = 1.0, min(1.0, max(0.0, (b - c) / a))
    # the clamped solution above is exact except in the near-parallel branch;
    # endpoint candidates cover that case
    best = (float(np.linalg.norm(p1 + s * d1 - (p2 + t * d2))), s, t)
    if a > 0.0 and e > 0.0 and (a * e - float(d1 @ d2) ** 2) <= 1e-14 * a * e:
        for s2, pt in ((0.0, p1), (1.0, q1)):
            t2 = closest_param_on_segment(pt, p2, q2)
            d = float(np.linalg.norm(pt - (p2 + t2 * d2)))
            if d < best[0]:
                best = (d, s2, t2)
        for t2, pt in ((0.0, p2), (1.0, q2)):
            s2 = closest_param_on_segment(pt, p1, q1)
            d = float(np.linalg.norm(p1 + s2 * d1 - pt))
            if d < best[0]:
                best = (d, s2, t2)
    return best


def dist_segment_segment(s1: Segment, s2: Segment) -> float:
    return segment_segment_closest(s1.a, s1.b, s2.a, s2.b)[0]


def rotation_matrix(direction, angle: float) -> np.ndarray:
    """Right-handed rotation about the unit vector ``direction`` (Rodrigues)."""
    k = np.asarray(direction, dtype=float)
    k = k / np.linalg.norm(k)
    c, s = math.cos(angle), math.sin(angle)
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) * c + s * kx + (1.0 - c) * np.outer(k, k)


def rotate_about_axis(p, axis: AxisLine, angle: float) -> np.ndarray:
    pts = np.asarray(p, dtype=float)
    rot = rotation_matrix(axis.direction, angle)
    return (pts - axis.origin) @ rot.T + axis.origin


def dihedral_angle(n1, n2) -> float:
    """Interior dihedral angle between faces with outward normals n1, n2.

    Coplanar faces (parallel normals) give pi.
    """
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    c = float(n1 @ n2) / (np.linalg.norm(n1) * np.linalg.norm(n2))
    return math.pi - math.acos(min(1.0, max(-1.0, c)))


def angle_between(u, v) -> float:
    """Unsigned angle in [0, pi] between two nonzero vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cr = np.linalg.norm(np.cross(u, v)) if u.shape[-1] == 3 else abs(u[0] * v[1] - u[1] * v[0])
    return math.atan2(float(cr), float(u @ v))


def joint_angle(prev, here, nxt) -> float:
    """Angle at ``here`` between the two incident links, in [0, pi]; pi = straight."""
    return angle_between(np.asarray(prev) - here, np.asarray(nxt) - here)


def orient2d(a, b, c) -> float:
    """Twice the signed area of triangle abc (xy components only)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def segments_intersect_2d(a, b, c, d) -> bool:
    """Closed-segment intersection test in the plane from orientation signs."""
    o1, o2 = orient2d(a, b, c), orient2d(a, b, d)
    o3, o4 = orient2d(c, d, a), orient2d(c, d, b)
    if ((o1 > 0 and o2 < 0) or (o1 < 0 and o2 > 0)) and ((o3 > 0 and o4 < 0) or (o3 < 0 and o4 > 0)):
        return True

    def on_seg(p, q, r):
        return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])

    return ((o1 == 0 and on_seg(a, b, c)) or (o2 == 0 and on_seg(a, b, d))
            or (o3 == 0 and on_seg(c, d, a)) or (o4 == 0 and on_seg(c, d, b)))


def signed_angle_2d(u, v) -> float:
    """Signed angle from u to v in (-pi, pi], counter-clockwise positive."""
    return math.atan2(u[0] * v[1] - u[1] * v[0], u[0] * v[0] + u[1] * v[1])


def circle_intersection(c1, r1, c2, r2, side: float):
    """Intersection of two circles in the xy plane.

    ``side`` picks the solution left (+1) or right (-1) of the directed line
    c1 -> c2. Tangent or slightly infeasible configurations collapse onto the
    line; grossly infeasible ones raise.
    """
    if r2 < r1:
        # build the point from the smaller circle's centre so the short radius stays exact
        return circle_intersection(c2, r2, c1, r1, -side)
    dx, dy = c2[0] - c1[0], c2[1] - c1[1]
    d = math.hypot(dx, dy)
    if d == 0.0:
        raise ValueError("concentric circles")
    a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    h2 = (r1 - a) * (r1 + a)
    if h2 < 0.0:
        if h2 < -1e-9 * max(r1, r2, d) ** 2:
            raise ValueError("circles do not intersect")
        h2 = 0.0
    h = math.sqrt(h2)
    ux, uy = dx / d, dy / d
    sgn = 1.0 if side >= 0 else -1.0
    return (c1[0] + a * ux - sgn * h * uy, c1[1] + a * uy + sgn * h * ux)
