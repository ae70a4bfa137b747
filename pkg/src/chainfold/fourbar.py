"""Planar four-bar position analysis driven by one diagonal length.

Pivots are four vertices ``p0..p3`` taken cyclically; bar ``k`` joins
``p[k]`` and ``p[k+1]``. One bar is held as ground, and the configuration is
parameterised by the length of one diagonal, which makes every position a
pair of circle intersections. Everything happens in a horizontal plane, so
z is carried through unchanged.
"""

from __future__ import annotations

import math

import numpy as np

from .geom import circle_intersection, orient2d

DEGENERATE = 1e-12


def _side(c1, c2, p, other=None):
    o = orient2d(c1, c2, p)
    scale = max(math.dist(c1[:2], c2[:2]), 1.0) ** 2
    if abs(o) > DEGENERATE * scale or other is None:
        return 1.0 if o >= 0 else -1.0
    # collapsed start: open towards the side holding the other moving pivot
    o2 = orient2d(c1, c2, other)
    return 1.0 if o2 >= 0 else -1.0


def _labels(ground: int):
    g = ground % 4
    return g, (g + 1) % 4, (g + 2) % 4, (g + 3) % 4


def diagonal_pair(ground: int, driver: int):
    """Pivot slots joined by the driving diagonal."""
    g0, g1, m1, m0 = _labels(ground)
    return (g0, m1) if driver == 0 else (g1, m0)


def initial_signs(P, ground: int, driver: int):
    """Branch signs that reproduce the configuration ``P`` (4 x >=2 array)."""
    g0, g1, m1, m0 = _labels(ground)
    if driver == 0:
        return (_side(P[g0], P[g1], P[m1], P[m0]), _side(P[g0], P[m1], P[m0]))
    return (_side(P[g1], P[g0], P[m0], P[m1]), _side(P[g1], P[m0], P[m1]))


def solve(P, ground: int, driver: int, D: float, signs):
    """Pivot positions with the ground bar fixed and the driving diagonal at length D."""
    P = np.asarray(P, dtype=float)
    g0, g1, m1, m0 = _labels(ground)
    L = lambda a, b: math.dist(P[a][:2], P[b][:2])  # noqa: E731
    out = P.copy()
    G0, G1 = P[g0], P[g1]
    if driver == 0:
        x = circle_intersection(G0, D, G1, L(g1, m1), signs[0])
        out[m1, :2] = x
        y = circle_intersection(G0, L(g0, m0), out[m1], L(m1, m0), signs[1])
        out[m0, :2] = y
    else:
        x = circle_intersection(G1, D, G0, L(g0, m0), signs[0])
        out[m0, :2] = x
        y = circle_intersection(G1, L(g1, m1), out[m0], L(m0, m1), signs[1])
        out[m1, :2] = y
    return out


def interior_angles(P) -> np.ndarray:
    """Smaller of the two angles at each pivot, in [0, pi]."""
    P = np.asarray(P, dtype=float)[:, :2]
    a = np.roll(P, 1, axis=0) - P
    b = np.roll(P, -1, axis=0) - P
    cr = np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    return np.arctan2(cr, np.einsum("ij,ij->i", a, b))


def signed_turns(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)[:, :2]
    e_in = P - np.roll(P, 1, axis=0)
    e_out = np.roll(P, -1, axis=0) - P
    cr = e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]
    return np.arctan2(cr, np.einsum("ij,ij->i", e_in, e_out))


def rigid_2d(a_old, b_old, a_new, b_new):
    """Rotation matrix and translation mapping segment a_old b_old onto a_new b_new."""
    u = np.asarray(b_old[:2]) - a_old[:2]
    w = np.asarray(b_new[:2]) - a_new[:2]
    th = math.atan2(u[0] * w[1] - u[1] * w[0], u @ w)
    c, s = math.cos(th), math.sin(th)
    R = np.array([[c, -s], [s, c]])
    return R, np.asarray(a_new[:2]) - R @ a_old[:2]
