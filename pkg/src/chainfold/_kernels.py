"""Compiled inner loops for the trace verifier."""

import numpy as np
from numba import njit


@njit(cache=True)
def _clamp(x):
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


@njit(cache=True)
def _pt_seg2(px, py, pz, ax, ay, az, bx, by, bz):
    dx, dy, dz = bx - ax, by - ay, bz - az
    den = dx * dx + dy * dy + dz * dz
    t = 0.0
    if den > 0.0:
        t = _clamp(((px - ax) * dx + (py - ay) * dy + (pz - az) * dz) / den)
    ex, ey, ez = ax + t * dx - px, ay + t * dy - py, az + t * dz - pz
    return ex * ex + ey * ey + ez * ez


@njit(cache=True)
def _seg_seg2(p1x, p1y, p1z, q1x, q1y, q1z, p2x, p2y, p2z, q2x, q2y, q2z):
    d1x, d1y, d1z = q1x - p1x, q1y - p1y, q1z - p1z
    d2x, d2y, d2z = q2x - p2x, q2y - p2y, q2z - p2z
    rx, ry, rz = p1x - p2x, p1y - p2y, p1z - p2z
    a = d1x * d1x + d1y * d1y + d1z * d1z
    e = d2x * d2x + d2y * d2y + d2z * d2z
    b = d1x * d2x + d1y * d2y + d1z * d2z
    c = d1x * rx + d1y * ry + d1z * rz
    f = d2x * rx + d2y * ry + d2z * rz
    den = a * e - b * b
    if a > 0.0 and e > 0.0 and den > 1e-14 * a * e:
        s = _clamp((b * f - c * e) / den)
        t = (b * s + f) / e
        if t < 0.0:
            t = 0.0
            s = _clamp(-c / a)
        elif t > 1.0:
            t = 1.0
            s = _clamp((b - c) / a)
        ex = rx + s * d1x - t * d2x
        ey = ry + s * d1y - t * d2y
        ez = rz + s * d1z - t * d2z
        return ex * ex + ey * ey + ez * ez
    # parallel or degenerate: the minimum is attained at an endpoint
    best = _pt_seg2(p1x, p1y, p1z, p2x, p2y, p2z, q2x, q2y, q2z)
    v = _pt_seg2(q1x, q1y, q1z, p2x, p2y, p2z, q2x, q2y, q2z)
    if v < best:
        best = v
    v = _pt_seg2(p2x, p2y, p2z, p1x, p1y, p1z, q1x, q1y, q1z)
    if v < best:
        best = v
    v = _pt_seg2(q2x, q2y, q2z, p1x, p1y, p1z, q1x, q1y, q1z)
    if v < best:
        best = v
    return best


@njit(cache=True)
def seg_seg_dist(p1, q1, p2, q2):
    return np.sqrt(_seg_seg2(p1[0], p1[1], p1[2], q1[0], q1[1], q1[2],
                             p2[0], p2[1], p2[2], q2[0], q2[1], q2[2]))


@njit(cache=True)
def min_pair_clearance(X, edges, pairs):
    """Minimum distance over edge pairs for every sampled frame.

    X: (S, n, 3) vertex positions per sample; edges: (E, 2); pairs: (P, 2)
    indices into ``edges``. Returns (min distance, sample index, pair index).
    Pairs whose bounding spheres are farther apart than the running minimum
    are skipped.
    """
    best2 = np.inf
    best = np.inf
    bs = -1
    bp = -1
    for s in range(X.shape[0]):
        for k in range(pairs.shape[0]):
            e1 = pairs[k, 0]
            e2 = pairs[k, 1]
            i1 = edges[e1, 0]
            j1 = edges[e1, 1]
            i2 = edges[e2, 0]
            j2 = edges[e2, 1]
            p1x, p1y, p1z = X[s, i1, 0], X[s, i1, 1], X[s, i1, 2]
            q1x, q1y, q1z = X[s, j1, 0], X[s, j1, 1], X[s, j1, 2]
            p2x, p2y, p2z = X[s, i2, 0], X[s, i2, 1], X[s, i2, 2]
            q2x, q2y, q2z = X[s, j2, 0], X[s, j2, 1], X[s, j2, 2]
            if best < np.inf:
                mx = 0.5 * (p1x + q1x - p2x - q2x)
                my = 0.5 * (p1y + q1y - p2y - q2y)
                mz = 0.5 * (p1z + q1z - p2z - q2z)
                h1 = 0.5 * np.sqrt((q1x - p1x) ** 2 + (q1y - p1y) ** 2 + (q1z - p1z) ** 2)
                h2 = 0.5 * np.sqrt((q2x - p2x) ** 2 + (q2y - p2y) ** 2 + (q2z - p2z) ** 2)
                lb = np.sqrt(mx * mx + my * my + mz * mz) - h1 - h2
                if lb >= best:
                    continue
            d2 = _seg_seg2(p1x, p1y, p1z, q1x, q1y, q1z, p2x, p2y, p2z, q2x, q2y, q2z)
            if d2 < best2:
                best2 = d2
                best = np.sqrt(d2)
                bs = s
                bp = k
    return best, bs, bp
