"""Seeded random inputs: open chains with simple shadows and simple polygons."""

from __future__ import annotations

import math

import numpy as np

from .chain import Chain
from .geom import segments_intersect_2d
from ._kernels import seg_seg_dist


def random_projection_chain(n: int, seed: int = 0, z_range: float = 1.0, min_gap: float = 0.15,
                            max_tries: int = 200) -> Chain:
    """Open chain on n vertices whose xy shadow is a self-avoiding walk.

    Steps have length in [0.5, 1.5] and turn by at most 150 degrees; every
    new shadow link keeps ``min_gap`` from the older nonadjacent links.
    Heights are uniform in [-z_range, z_range].
    """
    if n < 2:
        raise ValueError("a chain needs at least two vertices")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        pts = [np.zeros(3)]
        heading = rng.uniform(0, 2 * math.pi)
        ok = True
        while len(pts) < n and ok:
            for _attempt in range(60):
                h = heading + rng.uniform(-5 * math.pi / 6, 5 * math.pi / 6)
                step = rng.uniform(0.5, 1.5)
                q = pts[-1] + step * np.array([math.cos(h), math.sin(h), 0.0])
                if all(seg_seg_dist(pts[k], pts[k + 1], pts[-1], q) > min_gap for k in range(len(pts) - 2)):
                    pts.append(q)
                    heading = h
                    break
            else:
                ok = False
        if ok:
            V = np.array(pts)
            V[:, 2] = rng.uniform(-z_range, z_range, size=n)
            return Chain(V)
    raise RuntimeError("could not grow a self-avoiding walk; lower min_gap")


def _crossing(P, order, i, j):
    a, b = P[order[i]], P[order[(i + 1) % len(order)]]
    c, d = P[order[j]], P[order[(j + 1) % len(order)]]
    return segments_intersect_2d(a, b, c, d)


def random_simple_polygon(n: int, seed: int = 0, max_rounds: int = 10000) -> Chain:
    """Simple polygon through n random points, untangled by 2-opt reversals."""
    if n < 3:
        raise ValueError("a polygon needs at least three vertices")
    rng = np.random.default_rng(seed)
    while True:
        P = rng.uniform(0.0, 1.0, size=(n, 2))
        order = list(rng.permutation(n))
        for _ in range(max_rounds):
            found = False
            for i in range(n):
                for j in range(i + 2, n):
                    if i == 0 and j == n - 1:
                        continue
                    if _crossing(P, order, i, j):
                        order[i + 1: j + 1] = order[i + 1: j + 1][::-1]
                        found = True
                        break
                if found:
                    break
            if not found:
                break
        else:
            continue
        V = P[order]
        turns = _turn_angles(V)
        if np.all(np.abs(np.abs(turns) - math.pi) > 1e-3) and np.all(np.abs(turns) > 1e-3):
            area = 0.5 * np.sum(V[:, 0] * np.roll(V[:, 1], -1) - np.roll(V[:, 0], -1) * V[:, 1])
            if area < 0:
                V = V[::-1]
            return Chain(V, closed=True)


def _turn_angles(V):
    e_in = V - np.roll(V, 1, axis=0)
    e_out = np.roll(V, -1, axis=0) - V
    cr = e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]
    return np.arctan2(cr, np.einsum("ij,ij->i", e_in, e_out))


def thin_dart(t: float) -> Chain:
    """Nonconvex quadrilateral that flattens onto the x axis as ``t -> 0``.

    One link has length about ``t``. Pocket flipping takes roughly ``2/sqrt(t)``
    flips on it, while the side lengths stay bounded.
    """
    if not 0 < t <= 0.1:
        raise ValueError("t must lie in (0, 0.1]")
    return Chain(np.array([[0.0, 0.0, 0.0], [1.0, t, 0.0], [1.0 - t, 0.5 * t, 0.0], [2.0, 0.0, 0.0]]), closed=True)


def random_box_chain(n: int, seed: int = 0, step=(0.15, 0.35), max_tries: int = 1000):
    """Open surface chain with ``n`` vertices walking over the unit box.

    The walk keeps its heading, bending it over box edges the way a strip of
    tape would, and stops a link early wherever it meets an edge so that each
    link stays inside one face. Returns ``(chain, polytope)``.
    """
    from .chain import ConvexPolytope, is_simple

    box = ConvexPolytope.box()
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        f = int(rng.integers(6))
        nrm = box.normals[f]
        p = rng.uniform(0.2, 0.8, 3)
        p[nrm != 0] = 1.0 if nrm.sum() > 0 else 0.0
        d = rng.normal(size=3)
        d -= (d @ nrm) * nrm
        d /= np.linalg.norm(d)
        pts = [p]
        while len(pts) < n:
            d = d + rng.normal(scale=0.3, size=3)
            d -= (d @ nrm) * nrm
            d /= np.linalg.norm(d)
            s = rng.uniform(*step)
            # distance to the face boundary along d
            hit = s
            for ax in range(3):
                if nrm[ax] != 0 or d[ax] == 0:
                    continue
                wall = 1.0 if d[ax] > 0 else 0.0
                hit = min(hit, (wall - p[ax]) / d[ax])
            if hit < 0.05:
                exits = [a for a in range(3) if nrm[a] == 0 and d[a] != 0 and p[a] in (0.0, 1.0)
                         and (d[a] > 0) == (p[a] == 1.0)]
                if not exits:
                    # close to an edge but not on it: pick another heading
                    d = -d
                    continue
                # on an edge: tip over into the neighbouring face
                ax = exits[0]
                out = np.zeros(3)
                out[ax] = 1.0 if p[ax] == 1.0 else -1.0
                d = d - (d @ out) * out - (d @ out) * nrm
                d /= np.linalg.norm(d)
                nrm = out
                continue
            q = p + hit * d
            q = np.clip(q, 0.0, 1.0)
            for ax in range(3):
                if abs(q[ax] - round(q[ax])) < 1e-12:
                    q[ax] = float(round(q[ax]))
            pts.append(q)
            p = q
        c = Chain(np.array(pts))
        if is_simple(c).simple and np.min(np.linalg.norm(np.diff(c.vertices, axis=0), axis=1)) > 0.05:
            return c, box
    raise RuntimeError("no simple walk found")
