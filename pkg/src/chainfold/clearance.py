"""Safety constants derived from an input chain: clearance radii, perturbation
slack, lifting height and the four-bar diagonal bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import Chain, freeze_collinear, is_simple
from .geom import DEFAULT_TOL, Tolerance, orient2d, segments_intersect_2d

UNBOUNDED = math.inf

BETA_SAMPLES = 720
BETA_SAFETY = 0.9
EPS_MARGIN = 1.1


def _point_segment_distances(P, A, B):
    """|P| x |A| matrix of distances from points P to segments A[j]B[j]."""
    d = B - A
    den = np.einsum("ij,ij->i", d, d)
    rel = P[:, None, :] - A[None, :, :]
    t = np.clip(np.einsum("pij,ij->pi", rel, d) / den, 0.0, 1.0)
    foot = A[None] + t[..., None] * d[None]
    return np.linalg.norm(P[:, None, :] - foot, axis=2)


def vertex_clearances(p: Chain, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """r_i = distance from v_i to the nearest link not incident to it.

    Computed on the xy shadow. Vertices with no nonincident link get UNBOUNDED.
    """
    v = np.array(p.vertices)
    v[:, 2] = 0.0
    flat = p.with_vertices(v)
    rep = is_simple(flat, tol)
    if not rep.simple:
        where = rep.pair if rep.folded_joint is None else f"joint {rep.folded_joint}"
        raise ValueError(f"projection is not simple (links {where})")
    E = flat.edges
    D = _point_segment_distances(v, v[E[:, 0]], v[E[:, 1]])
    m = len(E)
    for i in range(len(v)):
        if i < m:
            D[i, i] = np.inf
        if p.closed or i >= 1:
            D[i, (i - 1) % m] = np.inf
    return D.min(axis=1)


def cylinder_params(r_i, n: int):
    """Cylinder radius r = min(r_i)/3 and drift step r/n, n counting vertices."""
    r_i = np.asarray(r_i, dtype=float)
    finite = r_i[np.isfinite(r_i)]
    if not len(finite):
        raise ValueError("no finite clearance radius")
    r = float(finite.min()) / 3.0
    return r, r / n


def _shortest_and_straightness(p: Chain):
    """Shortest link and the smallest margin of any joint angle from 0 or pi."""
    ang = p.joint_angles()
    return float(p.lengths.min()), float(np.min(np.minimum(ang, math.pi - ang)))


def perturbation_delta(p: Chain, tol: Tolerance = DEFAULT_TOL) -> float:
    """Radius of the vertex disks within which displacements keep the polygon
    simple and free of straight joints."""
    if not p.closed:
        raise ValueError("perturbation slack is defined for closed polygons")
    ell, beta_p = _shortest_and_straightness(p)
    if beta_p <= tol.eps_ang:
        raise ValueError("straight joint present; run freeze_collinear first")
    r_disk = float(np.min(vertex_clearances(p, tol)))
    return 0.5 * min(0.5 * r_disk, 0.5 * ell * math.sin(beta_p / 2.0))


def _angle_range_over_disks(A, B, C, delta, samples=BETA_SAMPLES):
    """Bounds (low, high) on the angle at B over independent delta-displacements of A, B, C."""
    th = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
    ring = np.stack([np.cos(th), np.sin(th)], axis=1) * delta
    Bs = np.vstack([B[None, :2], B[None, :2] + ring])
    a = A[:2] - Bs
    c = C[:2] - Bs
    na = np.linalg.norm(a, axis=1)
    nc = np.linalg.norm(c, axis=1)
    if np.any(na <= delta) or np.any(nc <= delta):
        return 0.0, math.pi
    ang = np.arctan2(np.abs(a[:, 0] * c[:, 1] - a[:, 1] * c[:, 0]), np.einsum("ij,ij->i", a, c))
    # moving A (or C) inside its disk turns the ray from B' by at most asin(delta/|.|)
    slack = np.arcsin(delta / na) + np.arcsin(delta / nc)
    return float(max(0.0, (ang - slack).min())), float(min(math.pi, (ang + slack).max()))


def sigma_beta(p: Chain, delta: float, safety: float = BETA_SAFETY):
    """Minimum vertex separation, and the smallest margin of a joint angle from
    0 or pi (scaled by ``safety``), over all placements of the vertices in
    their delta disks."""
    v = p.vertices[:, :2]
    diff = v[:, None, :] - v[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(dist, np.inf)
    sigma = float(dist.min()) - 2.0 * delta
    if sigma <= 0:
        raise ValueError(f"disk radius {delta:.3g} too large: vertex disks overlap")
    n = len(v)
    idx = range(n) if p.closed else range(1, n - 1)
    margin = math.pi
    for j in idx:
        lo, hi = _angle_range_over_disks(p.vertices[j - 1], p.vertices[j], p.vertices[(j + 1) % n], delta)
        margin = min(margin, lo, math.pi - hi)
    beta = safety * margin
    if beta <= 0:
        raise ValueError("a joint can straighten or fold inside its disks")
    return sigma, beta


def epsilon_conditions(ell, beta, sigma, delta, eps):
    """Both lifting-height requirements as (lhs, rhs) pairs, each needing lhs > rhs."""
    r = ell * math.sin(beta / 2.0)
    top = r * sigma / math.sqrt(sigma * sigma + eps * eps)
    x = min(1.0, eps / r)
    drift = r * (1.0 - math.sqrt(1.0 - x * x)) + eps * eps / sigma
    return (top, eps), (delta, drift)


def _eps_ok(ell, beta, sigma, delta, eps, margin=EPS_MARGIN):
    (a, b), (c, d) = epsilon_conditions(ell, beta, sigma, delta, eps)
    return a >= margin * b and c >= margin * d


def solve_epsilon(ell: float, beta: float, sigma: float, delta: float) -> float:
    """Largest lifting height, found by bisection, meeting both conditions with 10% margin."""
    for name, val in (("ell", ell), ("beta", beta), ("sigma", sigma), ("delta", delta)):
        if not val > 0:
            raise ValueError(f"{name} must be positive")
    r = ell * math.sin(beta / 2.0)
    lo, hi = 0.0, min(sigma, r)
    if _eps_ok(ell, beta, sigma, delta, hi):
        return hi
    while hi - lo > 1e-12 * max(1.0, hi) and hi > lo * (1 + 1e-14):
        mid = 0.5 * (lo + hi)
        if _eps_ok(ell, beta, sigma, delta, mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class ClearanceBundle:
    r_i: np.ndarray
    r: float
    delta_accordion: float
    ell: float
    beta_prime: float
    delta_perturb: float
    sigma: float
    beta: float
    epsilon: float

    def epsilon_margins(self):
        """Ratios lhs / rhs of the two lifting-height inequalities."""
        (a, b), (c, d) = epsilon_conditions(self.ell, self.beta, self.sigma, self.delta_perturb, self.epsilon)
        return a / b, c / d


def polygon_bundle(p: Chain, tol: Tolerance = DEFAULT_TOL) -> ClearanceBundle:
    """Every constant the arch algorithm needs, for a closed planar polygon without straight joints."""
    r_i = vertex_clearances(p, tol)
    r, da = cylinder_params(r_i, len(p))
    ell, beta_p = _shortest_and_straightness(p)
    delta = perturbation_delta(p, tol)
    sigma, beta = sigma_beta(p, delta)
    eps = solve_epsilon(ell, beta, sigma, delta)
    return ClearanceBundle(r_i, r, da, ell, beta_p, delta, sigma, beta, eps)


def frozen_bundle(p: Chain, tol: Tolerance = DEFAULT_TOL) -> ClearanceBundle:
    return polygon_bundle(freeze_collinear(p, tol)[0], tol)


def perturbed_angle(A, B, C, A2, B2, C2) -> float:
    """Angle at B2 of A2 B2 C2, measured on the side where ABC is below pi.

    Returns a value in [0, 2 pi); it reaches pi exactly when the perturbed
    joint straightens and exceeds it when the joint flips.
    """
    s = 1.0 if orient2d(A, B, C) > 0 else -1.0
    u = np.asarray(A2[:2]) - B2[:2]
    w = np.asarray(C2[:2]) - B2[:2]
    # signed angle from w to u: positive when A2 is counterclockwise of C2 around B2
    ang = math.atan2(w[0] * u[1] - w[1] * u[0], w @ u) * s
    return ang % (2 * math.pi)


@dataclass(frozen=True)
class DiagonalBound:
    value: float
    closed_form: float
    residual: float
    agrees: bool
    collapsed: bool


def _reflex_at_v2(P) -> bool | None:
    """True if the quadrilateral is simple and reflex (or straight) at v2; None if self-crossing."""
    if segments_intersect_2d(P[0], P[1], P[2], P[3]) and not np.allclose(P[1], P[2]):
        return None
    if segments_intersect_2d(P[1], P[2], P[3], P[0]):
        return None
    area = sum(P[k][0] * P[(k + 1) % 4][1] - P[(k + 1) % 4][0] * P[k][1] for k in range(4))
    turn = orient2d(P[1], P[2], P[3])
    return area * turn <= 0.0


def _reflex_states(l0, l1, l2, l3, theta):
    """Reflex-at-v2 realisations with the angle at v3 equal to theta."""
    v3 = np.zeros(2)
    v0 = np.array([l3, 0.0])
    v2 = l2 * np.array([math.cos(theta), math.sin(theta)])
    d = float(np.linalg.norm(v2 - v0))
    if d == 0.0 or d > l0 + l1 or d < abs(l0 - l1):
        return d, False
    a = (l0 * l0 - l1 * l1 + d * d) / (2 * d)
    h = math.sqrt(max(0.0, l0 * l0 - a * a))
    u = (v2 - v0) / d
    perp = np.array([-u[1], u[0]])
    for s in (1.0, -1.0):
        v1 = v0 + a * u + s * h * perp
        if _reflex_at_v2([v0, v1, v2, v3]):
            return d, True
    return d, False


def four_bar_closed_form(l0, l1, l2, l3) -> float:
    """Diagonal v0v2 when v2 lies straight on v1v3 (law of cosines at v3)."""
    sq = l2 * l2 + l3 * l3 - l2 * ((l1 + l2) ** 2 + l3 * l3 - l0 * l0) / (l1 + l2)
    if sq < 0 and sq > -1e-12 * max(l0, l1, l2, l3) ** 2:
        sq = 0.0
    return math.sqrt(sq) if sq >= 0 else float("nan")


def four_bar_max_diagonal(l0, l1, l2, l3, grid: int = 721, tol: float = 1e-10) -> DiagonalBound:
    """Largest |v0 v2| over planar realisations of the four-bar that are reflex at v2.

    Links are l0 = |v0v1|, l1 = |v1v2|, l2 = |v2v3|, l3 = |v3v0|. The value is
    found numerically by scanning the angle at v3 and bisecting the feasibility
    boundary; the straight-v2 closed form is returned alongside.
    """
    ls = [float(x) for x in (l0, l1, l2, l3)]
    if min(ls) <= 0:
        raise ValueError("link lengths must be positive")
    if max(ls) >= sum(ls) - max(ls):
        raise ValueError("side lengths do not close up into a quadrilateral")
    if ls[1] + ls[2] > ls[0] + ls[3] * (1 + 1e-12) + 1e-15:
        raise ValueError("no configuration is reflex at v2: l1 + l2 exceeds l0 + l3")
    cf = four_bar_closed_form(*ls)
    thetas = np.linspace(0.0, math.pi, grid)
    feas = np.array([_reflex_states(*ls, t)[1] for t in thetas])
    if not feas.any():
        value, collapsed = abs(ls[3] - ls[2]), True
    else:
        k = int(np.nonzero(feas)[0].max())
        if k == grid - 1:
            value = _reflex_states(*ls, math.pi)[0]
        else:
            lo, hi = thetas[k], thetas[k + 1]
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if _reflex_states(*ls, mid)[1]:
                    lo = mid
                else:
                    hi = mid
            value = _reflex_states(*ls, lo)[0]
        collapsed = False
    res = value - cf if math.isfinite(cf) else float("nan")
    return DiagonalBound(value, cf, res, bool(abs(res) <= 1e-6), collapsed)
