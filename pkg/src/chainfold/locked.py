"""Knitting-needle chains: an open 5-link chain tied in a loose trefoil
between two long rigid needles, its closed doubled version, and a checker for
the distance facts that keep the needle tips apart."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import Chain, is_simple
from .geom import DEFAULT_TOL, Tolerance
from ._kernels import seg_seg_dist

SEARCH_SEED = 0
SEARCH_TRIES = 200_000

# link directions that work for the default lengths (found by the seeded search below)
DEFAULT_DIRECTIONS = np.array([
    [0.6828, 0.6541, -0.3256],
    [-0.8956, -0.332, -0.296],
    [0.394, -0.2826, 0.8746],
    [0.6253, -0.2977, -0.7214],
    [-0.8066, 0.5911, -0.0079],
])


@dataclass(frozen=True)
class NeedleParams:
    l1: float = 1.0
    l2: float = 1.0
    l3: float = 1.0
    delta: float = 0.5
    eps: float = 0.2

    def __post_init__(self):
        for name in ("l1", "l2", "l3", "delta", "eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 2 * self.eps < self.delta:
            raise ValueError("need 0 < 2 eps < delta")

    @property
    def L(self) -> float:
        return self.l1 + self.l2 + self.l3

    @property
    def l0(self) -> float:
        return self.L + self.delta

    @property
    def l4(self) -> float:
        return 2 * self.L + self.delta

    @property
    def r(self) -> float:
        """Radius of the ball centred on v1."""
        return self.L + self.eps

    @property
    def lengths(self):
        return (self.l0, self.l1, self.l2, self.l3, self.l4)


@dataclass(frozen=True)
class Crossing:
    i: int
    j: int
    ti: float
    tj: float
    over: int

    @property
    def under(self) -> int:
        return self.j if self.over == self.i else self.i


def projection_crossings(c: Chain, min_gap: float = 0.0) -> list:
    """Crossings of nonadjacent links in the xy shadow, with which link passes over.

    Raises if two links meet in 3D (or come within ``min_gap`` at a crossing)."""
    V = c.vertices
    E = c.edges
    out = []
    for i in range(len(E)):
        for j in range(i + 2, len(E)):
            if c.closed and i == 0 and j == len(E) - 1:
                continue
            a, b = V[E[i, 0]], V[E[i, 1]]
            p, q = V[E[j, 0]], V[E[j, 1]]
            d1, d2 = b[:2] - a[:2], q[:2] - p[:2]
            den = d1[0] * d2[1] - d1[1] * d2[0]
            if den == 0:
                continue
            w = p[:2] - a[:2]
            s = (w[0] * d2[1] - w[1] * d2[0]) / den
            t = (w[0] * d1[1] - w[1] * d1[0]) / den
            if not (0 < s < 1 and 0 < t < 1):
                continue
            zi = a[2] + s * (b[2] - a[2])
            zj = p[2] + t * (q[2] - p[2])
            if abs(zi - zj) <= min_gap:
                raise ValueError(f"links {i} and {j} meet at a crossing")
            out.append(Crossing(i, j, float(s), float(t), i if zi > zj else j))
    return out


def is_alternating(crossings) -> bool:
    """Walking along the chain, do over- and under-passes alternate?"""
    visits = []
    for c in crossings:
        visits.append((c.i, c.ti, c.over == c.i))
        visits.append((c.j, c.tj, c.over == c.j))
    visits.sort()
    return all(visits[k][2] != visits[k + 1][2] for k in range(len(visits) - 1))


def _ray_hits(V, origin, direction, skip) -> bool:
    far = origin[:2] + direction[:2] / np.linalg.norm(direction[:2]) * 1e6
    for k in range(len(V) - 1):
        if k in skip:
            continue
        a, b = V[k, :2], V[k + 1, :2]
        d1, d2 = far - origin[:2], b - a
        den = d1[0] * d2[1] - d1[1] * d2[0]
        if den == 0:
            continue
        w = a - origin[:2]
        s = (w[0] * d2[1] - w[1] * d2[0]) / den
        t = (w[0] * d1[1] - w[1] * d1[0]) / den
        if 0 < s < 1 and 0 <= t <= 1:
            return True
    return False


def _acceptable(V, lengths) -> bool:
    c = Chain(V)
    gap = 0.05 * min(lengths)
    for i in range(5):
        for j in range(i + 2, 5):
            if seg_seg_dist(V[i], V[i + 1], V[j], V[j + 1]) < gap:
                return False
    try:
        cr = projection_crossings(c, min_gap=gap)
    except ValueError:
        return False
    if len(cr) != 3 or not is_alternating(cr):
        return False
    # the needles leave the picture: their outward extensions cross nothing
    if _ray_hits(V, V[0], V[0] - V[1], skip={0}) or _ray_hits(V, V[5], V[5] - V[4], skip={4}):
        return False
    return True


def knitting_needles(p: NeedleParams = NeedleParams()) -> Chain:
    """A simple embedding of the 6-vertex needle chain with link lengths from ``p``.

    Link directions are a stored set when those fit the lengths, otherwise
    the result of a fixed-seed search. Either way the shadow is a 3-crossing
    alternating diagram with both needles pointing outward.
    """
    lengths = np.array(p.lengths)

    def build(d):
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        return np.vstack([np.zeros(3), np.cumsum(d * lengths[:, None], axis=0)])

    V = build(DEFAULT_DIRECTIONS)
    if _acceptable(V, lengths):
        return Chain(V - V[1])
    rng = np.random.default_rng(SEARCH_SEED)
    for _ in range(SEARCH_TRIES):
        d = rng.normal(size=(5, 3))
        d[:, 2] *= 0.4
        V = build(d)
        if _acceptable(V, lengths):
            return Chain(V - V[1])
    raise RuntimeError("no embedding found")


def doubled_needles(p: NeedleParams = NeedleParams(), offset: float | None = None,
                    tol: Tolerance = DEFAULT_TOL) -> Chain:
    """Closed 10-vertex chain (v0..v5, v4'..v1') tracing the cord a second time."""
    K = knitting_needles(p)
    V = K.vertices
    if offset is None:
        offset = 0.01 * p.L
    u = np.cross(V[1] - V[0], V[5] - V[4])
    if np.linalg.norm(u) < 1e-9:
        u = np.array([0.0, 0.0, 1.0])
    u /= np.linalg.norm(u)
    back = V[4:0:-1] + offset * u
    c = Chain(np.vstack([V, back]), closed=True)
    rep = is_simple(c, tol)
    if not rep.simple:
        raise ValueError(f"offset {offset:g} makes the doubled chain non-simple (links {rep.pair})")
    return c


@dataclass(frozen=True)
class LockCertificate:
    center: np.ndarray
    radius: float
    dist: tuple
    cord_inside: bool
    v0_outside: bool
    v5_outside: bool

    @property
    def facts(self) -> dict:
        return {"a": self.cord_inside, "b": self.v0_outside, "c": self.v5_outside}

    @property
    def holds(self) -> bool:
        return self.cord_inside and self.v0_outside and self.v5_outside


def separation_certificate(c: Chain, p: NeedleParams, tol: Tolerance = DEFAULT_TOL) -> LockCertificate:
    """Check, for this configuration, the facts behind the needle argument.

    (a) v2, v3, v4 are within path distance L of v1, so inside the ball of
    radius r about v1; (b) v0 is outside since |v0 v1| > r; (c) v5 is outside
    since |v4 v5| exceeds the ball's diameter.
    """
    if len(c) < 6:
        raise ValueError("needle chains have at least six vertices v0..v5")
    V = c.vertices[:6]
    ctr = V[1]
    d = tuple(float(np.linalg.norm(V[k] - ctr)) for k in range(6))
    r = p.r
    slack = tol.eps_len * max(1.0, c.scale)
    seg = [float(np.linalg.norm(V[k + 1] - V[k])) for k in range(5)]
    path = np.cumsum([0.0] + seg[1:4])
    cord = all(d[k] <= path[k - 1] + slack and d[k] < r for k in (2, 3, 4))
    v0_out = seg[0] > r and d[0] > r
    v5_out = seg[4] > 2 * r and d[4] < r and d[5] > r
    return LockCertificate(ctr.copy(), r, d, bool(cord), bool(v0_out), bool(v5_out))


def random_reconfiguration(p: NeedleParams, rng) -> Chain:
    """Chain with the needle link lengths and uniformly random link directions (not necessarily simple)."""
    d = rng.normal(size=(5, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    V = np.vstack([np.zeros(3), np.cumsum(d * np.array(p.lengths)[:, None], axis=0)])
    return Chain(V)
