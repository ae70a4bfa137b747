"""Chain and polytope data model plus structural predicates."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .geom import DEFAULT_TOL, Tolerance, joint_angle


class Chain:
    """Polygonal chain in 3D. Vertices are stored as an immutable (n, 3) array.

    An open chain on n vertices has n - 1 edges; a closed chain has n edges
    with index arithmetic mod n.
    """

    __slots__ = ("vertices", "closed", "lengths")

    def __init__(self, vertices, closed: bool = False):
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] not in (2, 3):
            raise ValueError("vertices must be an (n, 2) or (n, 3) array")
        if v.shape[1] == 2:
            v = np.hstack([v, np.zeros((len(v), 1))])
        if len(v) < 2 or (closed and len(v) < 3):
            raise ValueError("an open chain needs 2 vertices, a closed chain 3")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite vertex coordinate")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "closed", bool(closed))
        ends = np.roll(v, -1, axis=0) if closed else v[1:]
        lengths = np.linalg.norm(ends - v[: len(ends)], axis=1)
        if np.any(lengths <= 0):
            raise ValueError(f"zero-length link at index {int(np.argmin(lengths))}")
        lengths.setflags(write=False)
        object.__setattr__(self, "lengths", lengths)

    def __setattr__(self, name, value):
        raise AttributeError("Chain is immutable")

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    def __reduce__(self):
        return (Chain, (np.array(self.vertices), self.closed))

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        kind = "closed" if self.closed else "open"
        return f"Chain({kind}, n={len(self)})"

    def __eq__(self, other):
        return (isinstance(other, Chain) and self.closed == other.closed
                and np.array_equal(self.vertices, other.vertices))

    def __hash__(self):
        return hash((self.closed, self.vertices.tobytes()))

    @property
    def n_edges(self) -> int:
        return len(self.vertices) if self.closed else len(self.vertices) - 1

    @property
    def edges(self) -> np.ndarray:
        n = len(self.vertices)
        i = np.arange(self.n_edges)
        return np.stack([i, (i + 1) % n], axis=1)

    def with_vertices(self, vertices) -> "Chain":
        return Chain(vertices, self.closed)

    def reversed(self) -> "Chain":
        return Chain(self.vertices[::-1], self.closed)

    @property
    def scale(self) -> float:
        """Characteristic size used to turn relative tolerances absolute."""
        ext = np.ptp(self.vertices, axis=0).max()
        return max(1.0, float(ext))

    def joint_angles(self) -> np.ndarray:
        """Angle between the two links at every joint (pi = straight).

        Open chains report interior joints 1..n-2 only.
        """
        v = self.vertices
        if self.closed:
            prev, here, nxt = np.roll(v, 1, axis=0), v, np.roll(v, -1, axis=0)
        else:
            prev, here, nxt = v[:-2], v[1:-1], v[2:]
        a = prev - here
        b = nxt - here
        cr = np.linalg.norm(np.cross(a, b), axis=1)
        return np.arctan2(cr, np.einsum("ij,ij->i", a, b))


def nonadjacent_pairs(n_edges: int, closed: bool) -> np.ndarray:
    i, j = np.triu_indices(n_edges, k=2)
    keep = ~((i == 0) & (j == n_edges - 1)) if closed else np.ones(len(i), bool)
    return np.stack([i[keep], j[keep]], axis=1).astype(np.int64)


class SimplicityReport(NamedTuple):
    simple: bool
    min_clearance: float
    pair: tuple | None
    folded_joint: int | None


def is_simple(c: Chain, tol: Tolerance = DEFAULT_TOL) -> SimplicityReport:
    """Pairwise clearance scan over nonadjacent links plus an adjacent-overlap test.

    The report carries the smallest nonadjacent clearance and the edge pair
    attaining it; ``folded_joint`` names a joint whose two links overlap.
    """
    pairs = nonadjacent_pairs(c.n_edges, c.closed)
    best, pair = math.inf, None
    if len(pairs):
        d, _, k = _kernels.min_pair_clearance(c.vertices[None], c.edges.astype(np.int64), pairs)
        best, pair = float(d), (int(pairs[k, 0]), int(pairs[k, 1]))
    folded = None
    if c.n_edges >= 2:
        ang = c.joint_angles()
        bad = np.nonzero(ang <= tol.eps_ang)[0]
        if len(bad):
            folded = int(bad[0]) if c.closed else int(bad[0]) + 1
    return SimplicityReport(best > tol.eps_clear and folded is None, best, pair, folded)


def project_xy(c: Chain) -> Chain:
    v = np.array(c.vertices)
    v[:, 2] = 0.0
    return Chain(v, c.closed)


@dataclass(frozen=True)
class VerticalPlane:
    """Plane containing the z direction, through ``origin`` along horizontal ``direction``."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        d = np.array(self.direction, dtype=float)
        d[2] = 0.0
        norm = np.linalg.norm(d)
        if norm == 0:
            raise ValueError("vertical plane needs a horizontal direction")
        object.__setattr__(self, "direction", d / norm)
        object.__setattr__(self, "origin", np.array(self.origin, dtype=float))

    @property
    def normal(self) -> np.ndarray:
        u = self.direction
        return np.array([-u[1], u[0], 0.0])

    def abscissa(self, pts) -> np.ndarray:
        return (np.asarray(pts) - self.origin) @ self.direction

    def offset(self, pts) -> np.ndarray:
        return (np.asarray(pts) - self.origin) @ self.normal


def is_monotone_in_vertical_plane(c: Chain, plane: VerticalPlane, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Strict monotonicity of vertex abscissas along the plane's horizontal line."""
    slack = tol.eps_len * c.scale
    off = np.abs(plane.offset(c.vertices))
    if off.max() > slack:
        raise ValueError(f"vertex {int(off.argmax())} is {off.max():.3g} off the plane")
    dx = np.diff(plane.abscissa(c.vertices))
    return bool(np.all(dx > slack) or np.all(dx < -slack))


class Convexity(str, enum.Enum):
    STRICT = "strictly_convex"
    WEAK = "convex_with_straight_vertices"
    NONCONVEX = "nonconvex"


def polygon_normal(v: np.ndarray) -> np.ndarray:
    """Newell normal (area-weighted); its length is twice the polygon area."""
    nxt = np.roll(v, -1, axis=0)
    return np.array([
        np.sum((v[:, 1] - nxt[:, 1]) * (v[:, 2] + nxt[:, 2])),
        np.sum((v[:, 2] - nxt[:, 2]) * (v[:, 0] + nxt[:, 0])),
        np.sum((v[:, 0] - nxt[:, 0]) * (v[:, 1] + nxt[:, 1])),
    ])


def signed_turns(v: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Signed exterior turn at each vertex of a closed planar polygon about ``normal``."""
    e_in = v - np.roll(v, 1, axis=0)
    e_out = np.roll(v, -1, axis=0) - v
    cr = np.cross(e_in, e_out) @ normal
    return np.arctan2(cr, np.einsum("ij,ij->i", e_in, e_out))


def is_convex_polygon(c: Chain, tol: Tolerance = DEFAULT_TOL) -> Convexity:
    if not c.closed:
        raise ValueError("convexity is defined for closed chains")
    v = c.vertices
    nrm = polygon_normal(v)
    if np.linalg.norm(nrm) == 0:
        return Convexity.NONCONVEX
    nrm = nrm / np.linalg.norm(nrm)
    dev = np.abs((v - v.mean(axis=0)) @ nrm)
    if dev.max() > tol.eps_len * c.scale * 10:
        raise ValueError(f"polygon is not planar (deviation {dev.max():.3g})")
    turns = signed_turns(v, nrm)
    if np.any(turns < -tol.eps_ang) or np.any(np.abs(turns) >= math.pi - tol.eps_ang):
        return Convexity.NONCONVEX
    if abs(turns.sum() - 2 * math.pi) > 1e-6:
        return Convexity.NONCONVEX
    if np.any(np.abs(turns) <= tol.eps_ang):
        return Convexity.WEAK
    return Convexity.STRICT


def freeze_collinear(c: Chain, tol: Tolerance = DEFAULT_TOL):
    """Drop straight joints until none remain.

    Returns the reduced chain and the original indices of the kept vertices.
    """
    keep = list(range(len(c)))
    v = c.vertices
    changed = True
    while changed:
        changed = False
        m = len(keep)
        if c.closed and m <= 3:
            break
        candidates = range(m) if c.closed else range(1, m - 1)
        for k in candidates:
            a, b, d = keep[k - 1], keep[k], keep[(k + 1) % m]
            if joint_angle(v[a], v[b], v[d]) >= math.pi - tol.eps_ang:
                del keep[k]
                changed = True
                break
    return Chain(v[keep], c.closed), keep


class ConvexPolytope:
    """Convex polytope given by vertices and faces (vertex index lists).

    Face normals are oriented outward with respect to the vertex centroid.
    """

    def __init__(self, vertices, faces, tol: Tolerance = DEFAULT_TOL):
        self.vertices = np.array(vertices, dtype=float)
        self.faces = [list(map(int, f)) for f in faces]
        centroid = self.vertices.mean(axis=0)
        normals, offsets = [], []
        scale = max(1.0, float(np.ptp(self.vertices, axis=0).max()))
        for f in self.faces:
            pts = self.vertices[f]
            n = polygon_normal(pts)
            if np.linalg.norm(n) == 0:
                raise ValueError(f"degenerate face {f}")
            n = n / np.linalg.norm(n)
            d = float(n @ pts.mean(axis=0))
            if n @ centroid > d:
                n, d = -n, -d
            if np.abs(pts @ n - d).max() > tol.eps_len * scale * 10:
                raise ValueError(f"face {f} is not planar")
            normals.append(n)
            offsets.append(d)
        self.normals = np.array(normals)
        self.offsets = np.array(offsets)
        self.tol = tol
        self.scale = scale
        if np.max(self.vertices @ self.normals.T - self.offsets) > tol.eps_len * scale * 10:
            raise ValueError("vertices lie outside a face plane: polytope is not convex")

    @classmethod
    def box(cls, lo=(0, 0, 0), hi=(1, 1, 1)):
        (x0, y0, z0), (x1, y1, z1) = lo, hi
        v = [(x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0),
             (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1)]
        f = [[0, 3, 2, 1], [4, 5, 6, 7], [0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]]
        return cls(v, f)

    @classmethod
    def from_points(cls, points):
        """Hull of a point set with coplanar hull facets merged into faces."""
        from scipy.spatial import ConvexHull

        pts = np.asarray(points, dtype=float)
        hull = ConvexHull(pts)
        groups: dict = {}
        for simplex, eq in zip(hull.simplices, hull.equations):
            key = tuple(np.round(eq, 9))
            groups.setdefault(key, set()).update(simplex.tolist())
        faces = []
        for key, idx in groups.items():
            idx = sorted(idx)
            n = np.array(key[:3])
            c = pts[idx].mean(axis=0)
            u = pts[idx[0]] - c
            u /= np.linalg.norm(u)
            w = np.cross(n, u)
            ang = [math.atan2((pts[i] - c) @ w, (pts[i] - c) @ u) for i in idx]
            faces.append([i for _, i in sorted(zip(ang, idx))])
        used = sorted({i for f in faces for i in f})
        remap = {old: new for new, old in enumerate(used)}
        return cls(pts[used], [[remap[i] for i in f] for f in faces])

    def signed_distance(self, p) -> float:
        """Max over face planes of the signed offset; 0 on the surface, > 0 outside."""
        return float(np.max(self.normals @ np.asarray(p, dtype=float) - self.offsets))

    def faces_at(self, p) -> list[int]:
        slack = self.tol.eps_len * self.scale * 10
        off = self.normals @ np.asarray(p, dtype=float) - self.offsets
        if off.max() > slack or np.all(np.abs(off) > slack):
            return []
        return [int(i) for i in np.nonzero(np.abs(off) <= slack)[0]]


class SurfaceChain:
    """Open chain lying on the surface of a convex polytope, one face per link."""

    def __init__(self, chain: Chain, polytope: ConvexPolytope):
        if chain.closed:
            raise ValueError("surface chains are open")
        self.chain = chain
        self.polytope = polytope
        self.vertex_faces = []
        for i, p in enumerate(chain.vertices):
            faces = polytope.faces_at(p)
            if not faces:
                raise ValueError(f"vertex {i} is not on the polytope surface")
            self.vertex_faces.append(faces)
        self.edge_faces = []
        for i in range(chain.n_edges):
            common = sorted(set(self.vertex_faces[i]) & set(self.vertex_faces[i + 1]))
            if not common:
                raise ValueError(f"link {i} leaves its face without a vertex; subdivide it at the crossing")
            self.edge_faces.append(common[0])
