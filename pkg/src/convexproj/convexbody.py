"""Properly convex polytopes and polyhedral cones.

A `ConvexBody` lives in the affine chart ``{x_{n+1} = 1}`` and carries both a
vertex list and facet inequalities ``normal . x <= offset``.  Bodies built
from half-spaces alone may be unbounded (the chart image of a cone), which is
all the Hilbert-metric routines need.  A `PolyCone` is a pointed polyhedral
cone ``{x : phi(x) >= 0}`` described by its extreme rays and facet normals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, nnls
from scipy.spatial import ConvexHull
from scipy.spatial.distance import cdist

from .errors import DegenerateSpan, EmptySet, NotPointed, PointNotInterior

VERTEX_TOL = 1e-9
INTERIOR_TOL = 1e-12


@dataclass(frozen=True)
class ConvexBody:
    vertices: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        for name in ("vertices", "normals", "offsets"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        if self.normals.size:
            return self.normals.shape[1]
        return self.vertices.shape[1]

    @property
    def bounded(self) -> bool:
        return len(self.vertices) > 0

    @classmethod
    def from_halfspaces(cls, normals, offsets, vertices=None) -> "ConvexBody":
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        offsets = np.asarray(offsets, dtype=float).reshape(-1)
        scale = np.linalg.norm(normals, axis=1)
        if np.any(scale == 0):
            raise ValueError("facet normals must be nonzero")
        if vertices is None:
            vertices = np.zeros((0, normals.shape[1]))
        return cls(np.atleast_2d(vertices), normals / scale[:, None], offsets / scale)

    def slack(self, x) -> np.ndarray:
        """``offset - normal . x`` for every facet; all positive inside."""
        return self.offsets - np.asarray(x, dtype=float) @ self.normals.T

    def contains(self, x, tol: float = VERTEX_TOL) -> bool:
        return bool(np.all(self.slack(x) >= -tol))

    def inradius_about(self, x) -> float:
        """Radius of the largest ball centred at ``x`` inside the body."""
        return float(self.slack(x).min())

    def chebyshev_center(self) -> tuple[np.ndarray, float]:
        n = self.dim
        cost = np.zeros(n + 1)
        cost[-1] = -1.0
        a = np.hstack([self.normals, np.ones((len(self.normals), 1))])
        res = linprog(cost, A_ub=a, b_ub=self.offsets, bounds=[(None, None)] * n + [(0, None)])
        if res.status == 3:
            return np.full(n, np.nan), np.inf
        if res.status != 0:
            raise EmptySet("no interior point found")
        return res.x[:n], float(res.x[-1])

    def to_json(self) -> dict:
        return {
            "dim": int(self.dim),
            "vertices": self.vertices.tolist(),
            "facets": [{"normal": nv.tolist(), "offset": float(o)} for nv, o in zip(self.normals, self.offsets)],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConvexBody":
        verts = np.asarray(data["vertices"], dtype=float)
        if "dim" in data and verts.size and verts.shape[1] != int(data["dim"]):
            raise ValueError("vertex length does not match dim")
        facets = data.get("facets")
        if not facets:
            return convex_hull(verts)
        normals = [f["normal"] for f in facets]
        offsets = [f["offset"] for f in facets]
        return ConvexBody.from_halfspaces(normals, offsets, verts)


@dataclass(frozen=True)
class PolyCone:
    generators: np.ndarray
    facet_normals: np.ndarray = field(default=None)

    def __post_init__(self):
        gens = np.atleast_2d(np.asarray(self.generators, dtype=float))
        object.__setattr__(self, "generators", gens)
        if self.facet_normals is None:
            object.__setattr__(self, "facet_normals", cone_facets(gens))
        else:
            object.__setattr__(self, "facet_normals", np.atleast_2d(np.asarray(self.facet_normals, dtype=float)))

    @property
    def ambient_dim(self) -> int:
        return self.generators.shape[1]

    def contains(self, x, tol: float = 0.0) -> bool:
        return bool(np.all(self.facet_normals @ np.asarray(x, dtype=float) > tol))

    @classmethod
    def from_body(cls, body: ConvexBody) -> "PolyCone":
        """Cone over a bounded body placed at height 1."""
        if not body.bounded:
            raise ValueError("cone over a body needs its vertices")
        gens = np.hstack([body.vertices, np.ones((len(body.vertices), 1))])
        phis = np.hstack([-body.normals, body.offsets[:, None]])
        return cls(gens, phis / np.linalg.norm(phis, axis=1, keepdims=True))

    def to_json(self) -> dict:
        return {"generators": self.generators.tolist(), "facet_normals": self.facet_normals.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "PolyCone":
        return cls(np.asarray(data["generators"], dtype=float), data.get("facet_normals"))


# ---------------------------------------------------------------------------
# cones


def is_pointed(gens) -> bool:
    """True when some linear functional is strictly positive on every generator."""
    gens = np.atleast_2d(np.asarray(gens, dtype=float))
    m = gens.shape[1]
    # maximize s subject to phi . r_i >= s, |phi_j| <= 1
    cost = np.zeros(m + 1)
    cost[-1] = -1.0
    scale = np.linalg.norm(gens, axis=1, keepdims=True)
    a = np.hstack([-gens / scale, np.ones((len(gens), 1))])
    res = linprog(cost, A_ub=a, b_ub=np.zeros(len(gens)), bounds=[(-1, 1)] * m + [(None, 1)])
    return res.status == 0 and -res.fun > 1e-9


def cone_facets(gens, tol: float = 1e-10) -> np.ndarray:
    """Unit facet normals of the cone spanned by ``gens`` by subset enumeration."""
    gens = np.atleast_2d(np.asarray(gens, dtype=float))
    k, m = gens.shape
    if np.linalg.matrix_rank(gens) < m:
        raise NotPointed("generators do not span the ambient space")
    if not is_pointed(gens):
        raise NotPointed("cone contains a line")
    unit = gens / np.linalg.norm(gens, axis=1, keepdims=True)
    found: list[np.ndarray] = []
    for subset in itertools.combinations(range(k), m - 1):
        sub = unit[list(subset)]
        _, s, vt = np.linalg.svd(sub)
        if m > 1 and len(s) == m - 1 and s[-1] < 1e-10:
            continue
        phi = vt[-1]
        vals = unit @ phi
        if np.all(vals >= -tol):
            pass
        elif np.all(vals <= tol):
            phi = -phi
        else:
            continue
        if not any(np.linalg.norm(phi - f) < 1e-8 for f in found):
            found.append(phi)
    if not found:
        raise NotPointed("no supporting facets found")
    return np.array(found)


def dual_cone(cone: PolyCone) -> PolyCone:
    """Cone of functionals positive on ``cone``; rays and facets swap roles."""
    if not is_pointed(cone.generators):
        raise NotPointed("cone contains a line")
    return PolyCone(cone.facet_normals.copy(), cone.generators.copy())


# ---------------------------------------------------------------------------
# hulls


def _merge_facets(eqs: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    eqs = eqs / np.linalg.norm(eqs[:, :-1], axis=1, keepdims=True)
    dist = cdist(eqs, eqs)
    limit = tol * np.maximum(1.0, np.abs(eqs[:, -1]))
    # drop a facet when an earlier one describes the same hyperplane
    dup = np.triu(dist < limit[None, :], k=1).any(axis=0)
    return eqs[~dup]


def _full_hull(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = pts.shape[1]
    if n == 1:
        lo, hi = pts[:, 0].min(), pts[:, 0].max()
        return np.array([[lo], [hi]]), np.array([[1.0], [-1.0]]), np.array([hi, -lo])
    hull = ConvexHull(pts)
    eqs = _merge_facets(hull.equations)
    normals = eqs[:, :-1]
    offsets = -eqs[:, -1]
    # qhull may keep near-coplanar points as vertices; keep only those on >= n facets
    idx = np.array(sorted(hull.vertices))
    verts = pts[idx]
    active = (np.abs(offsets[None, :] - verts @ normals.T) <= VERTEX_TOL * max(1.0, np.abs(pts).max())).sum(axis=1)
    verts = verts[active >= n]
    return verts, normals, offsets


def convex_hull(points) -> ConvexBody:
    """Vertices and facets of the hull of finitely many chart points.

    Inputs that do not affinely span the chart return a hull of the affine
    span, flagged ``degenerate`` and described by equality pairs in the
    missing directions.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise EmptySet("no points")
    k, n = pts.shape
    centre = pts.mean(axis=0)
    centred = pts - centre
    _, s, vt = np.linalg.svd(centred, full_matrices=True)
    scale = max(1.0, s[0] if len(s) else 0.0)
    rank = int(np.sum(s > 1e-10 * scale))
    if rank == n:
        verts, normals, offsets = _full_hull(pts)
        return ConvexBody(verts, normals, offsets)
    basis = vt[:rank].T
    comp = vt[rank:].T
    normals_list = []
    offsets_list = []
    if rank == 0:
        verts = pts[:1]
    else:
        local = centred @ basis
        lverts, lnormals, loffsets = _full_hull(local)
        verts = lverts @ basis.T + centre
        normals_list.append(lnormals @ basis.T)
        offsets_list.append(loffsets + lnormals @ basis.T @ centre)
    level = comp.T @ centre
    normals_list += [comp.T, -comp.T]
    offsets_list += [level, -level]
    return ConvexBody(verts, np.vstack(normals_list), np.concatenate(offsets_list), degenerate=True)


def hull_or_raise(points) -> ConvexBody:
    body = convex_hull(points)
    if body.degenerate:
        raise DegenerateSpan("points do not affinely span the chart")
    return body


def transform_body(body: ConvexBody, tau) -> ConvexBody:
    """Image of a body under a projective map that keeps it inside the chart."""
    tau = np.asarray(tau, dtype=float)
    n = body.dim
    if body.bounded:
        h = np.hstack([body.vertices, np.ones((len(body.vertices), 1))]) @ tau.T
        w = h[:, -1]
        if np.all(w < 0):
            tau = -tau
            h = -h
            w = -w
        if not np.all(w > 0):
            raise ValueError("map sends part of the body to infinity")
        verts = h[:, :n] / w[:, None]
    else:
        verts = None
    psi = np.hstack([-body.normals, body.offsets[:, None]]) @ np.linalg.inv(tau)
    return ConvexBody.from_halfspaces(-psi[:, :n], psi[:, n], verts)


# ---------------------------------------------------------------------------
# Hilbert geometry


def line_boundary_intersections(body: ConvexBody, x, v) -> tuple[float, float]:
    """Exit parameters ``(t_minus, t_plus)`` of ``x -/+ t v`` through the boundary.

    Measured in units of ``v``; ``inf`` when the ray never leaves the body.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    slack = body.slack(x)
    if np.any(slack <= INTERIOR_TOL * max(1.0, np.abs(body.offsets).max(initial=0.0))):
        raise PointNotInterior(f"point {x.tolist()} is not interior")
    rate = body.normals @ v
    fwd = rate > 0
    bwd = rate < 0
    t_plus = float(np.min(slack[fwd] / rate[fwd])) if fwd.any() else np.inf
    t_minus = float(np.min(slack[bwd] / -rate[bwd])) if bwd.any() else np.inf
    return t_minus, t_plus


def hilbert_distance(body: ConvexBody, a, b) -> float:
    """Hilbert distance as the log of the cross-ratio of the chord, without a 1/2."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(body.slack(b) <= 0):
        raise PointNotInterior(f"point {b.tolist()} is not interior")
    v = b - a
    if not np.any(v):
        line_boundary_intersections(body, a, v)
        return 0.0
    t_minus, t_plus = line_boundary_intersections(body, a, v)
    # a = 0, b = 1, boundary at -t_minus and t_plus along the chord
    return float(np.log1p(1.0 / t_minus) - np.log1p(-1.0 / t_plus))


def finsler_norm(body: ConvexBody, x, v) -> float:
    """Infinitesimal Hilbert norm ``1/t_plus + 1/t_minus`` (in units of ``v``)."""
    v = np.asarray(v, dtype=float)
    t_minus, t_plus = line_boundary_intersections(body, x, v)
    if not np.any(v):
        return 0.0
    return float(1.0 / t_plus + 1.0 / t_minus)


# ---------------------------------------------------------------------------
# Hausdorff distance


def _dist_to_polytope(points: np.ndarray, body: ConvexBody) -> np.ndarray:
    verts = body.vertices
    out = np.zeros(len(points))
    slack = body.slack(points) if len(body.normals) else np.full((len(points), 1), -1.0)
    # points inside are at distance 0; a point whose foot on its most violated
    # facet plane lies in the body is at exactly that violation
    pending = []
    rounding = 1e-12 * max(1.0, np.abs(points).max(initial=0.0), np.abs(body.offsets).max(initial=0.0))
    for i in np.flatnonzero(slack.min(axis=1) < -rounding):
        j = int(np.argmin(slack[i]))
        foot = points[i] + slack[i, j] * body.normals[j]
        if np.all(body.slack(foot) >= -1e-12 * max(1.0, np.abs(foot).max())):
            out[i] = -slack[i, j]
        else:
            pending.append(i)
    if not pending:
        return out
    # least squares over convex weights; the sum-to-one row is weighted heavily
    scale = max(1.0, np.abs(verts).max(), np.abs(points).max())
    weight = 1e6 * scale
    a = np.vstack([verts.T, weight * np.ones(len(verts))])
    for i in pending:
        p = points[i]
        lam, _ = nnls(a, np.concatenate([p, [weight]]), maxiter=50 * len(verts))
        lam = lam / lam.sum()
        out[i] = np.linalg.norm(verts.T @ lam - p)
    return out


def hausdorff_distance(a, b) -> float:
    """Hausdorff distance between two finite point sets or two polytopes."""
    a_body = isinstance(a, ConvexBody)
    b_body = isinstance(b, ConvexBody)
    if a_body != b_body:
        raise TypeError("compare point sets with point sets and bodies with bodies")
    if a_body:
        va, vb = a.vertices, b.vertices
        if len(va) == 0 or len(vb) == 0:
            raise EmptySet("polytope without vertices")
        return float(max(_dist_to_polytope(va, b).max(), _dist_to_polytope(vb, a).max()))
    pa = np.atleast_2d(np.asarray(a, dtype=float))
    pb = np.atleast_2d(np.asarray(b, dtype=float))
    if pa.size == 0 or pb.size == 0:
        raise EmptySet("empty point set")
    d = cdist(pa, pb)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


# ---------------------------------------------------------------------------
# proper convexity


@dataclass(frozen=True)
class ConvexityVerdict:
    proper: bool
    kind: str  # "hyperplane" (missed by the closure) or "line" (contained in it)
    witness: np.ndarray


def is_properly_convex(candidate) -> ConvexityVerdict:
    """Decide whether the closure of a chart region misses some hyperplane.

    ``candidate`` is a `ConvexBody` (possibly unbounded) or an array of chart
    points.  The homogenized cone ``{(x, w) : normal . x <= offset * w, w >= 0}``
    is the cone over the closure; it is pointed exactly when the region is
    properly convex.
    """
    if not isinstance(candidate, ConvexBody):
        pts = np.atleast_2d(np.asarray(candidate, dtype=float))
        if pts.size == 0 or not np.all(np.isfinite(pts)):
            raise EmptySet("no finite points")
        w = np.zeros(pts.shape[1] + 1)
        w[-1] = 1.0
        return ConvexityVerdict(True, "hyperplane", w)
    n = candidate.dim
    rows = np.hstack([candidate.normals, -candidate.offsets[:, None]])
    last = np.zeros((1, n + 1))
    last[0, -1] = -1.0
    m = np.vstack([rows, last])
    _, s, vt = np.linalg.svd(m)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0])))
    if rank < n + 1:
        return ConvexityVerdict(False, "line", vt[-1])
    witness = -m.sum(axis=0)
    return ConvexityVerdict(True, "hyperplane", witness / np.linalg.norm(witness))
