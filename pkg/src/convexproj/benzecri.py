"""Benzecri charts: projective normalization of a pointed convex body.

Given a properly convex polytope and an interior point ``p``, find a
projective map ``tau`` with ``tau(p) = 0`` and ``B(1) <= tau(body) <= B(R)``.
The construction is inductive on dimension: slice through ``p``, normalize
the slice, then fix the last coordinate with a reflection, a vertical scale,
a shear moving the top vertex onto the axis, and a one-parameter group that
fixes the top vertex and the slicing hyperplane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scipy.optimize import minimize
from scipy.spatial import Delaunay

from .convexbody import ConvexBody, convex_hull, transform_body
from .errors import NumericalDegeneracy, PointNotInterior
from .projlinalg import apply_to_chart

_PLANE_TOL = 1e-12


@dataclass(frozen=True)
class BenzecriChart:
    tau: np.ndarray
    R_achieved: float
    n: int
    R_inductive: float = float("nan")

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "tau": self.tau.tolist(),
            "R_achieved": self.R_achieved,
            "R_inductive": self.R_inductive,
        }

    @classmethod
    def from_json(cls, data: dict) -> "BenzecriChart":
        r_ind = data.get("R_inductive")
        return cls(
            np.asarray(data["tau"], dtype=float),
            float(data["R_achieved"]),
            int(data["n"]),
            float("nan") if r_ind is None else float(r_ind),
        )


def _interval_map(a: float, b: float, p: float) -> np.ndarray:
    # x -> (x - p) / (c x + d) sends a, p, b to -1, 0, 1
    c = (a + b - 2 * p) / (b - a)
    d = p - a - c * a
    return np.array([[1.0, -p], [c, d]])


def _slice_vertices(verts: np.ndarray) -> np.ndarray:
    """Vertices of the section by ``{x_n = 0}`` (as points of R^{n-1})."""
    h = verts[:, -1]
    scale = max(1.0, np.abs(verts).max())
    on = np.abs(h) <= _PLANE_TOL * scale
    pts = [verts[on, :-1]]
    up = np.flatnonzero(h > _PLANE_TOL * scale)
    down = np.flatnonzero(h < -_PLANE_TOL * scale)
    if len(up) and len(down):
        a = verts[up][:, None, :]
        b = verts[down][None, :, :]
        lam = (a[..., -1] / (a[..., -1] - b[..., -1]))[..., None]
        cross = a + lam * (b - a)
        pts.append(cross[..., :-1].reshape(-1, verts.shape[1] - 1))
    pts = np.vstack(pts)
    if len(pts) == 0:
        raise NumericalDegeneracy("slicing hyperplane misses the body")
    if pts.shape[1] == 1:
        return np.array([[pts[:, 0].min()], [pts[:, 0].max()]])
    return convex_hull(pts).vertices


def _choose_vertical_shift(ell: np.ndarray, verts: np.ndarray) -> float:
    """Pick ``b`` with ``ell . x' + b x_n + 1 > 0`` on every vertex (a 1-D LP)."""
    base = verts[:, :-1] @ ell + 1.0
    h = verts[:, -1]
    scale = max(1.0, np.abs(verts).max())
    lo, hi = -np.inf, np.inf
    for bi, hi_ in zip(base, h):
        if abs(hi_) <= _PLANE_TOL * scale:
            if bi <= 0:
                raise NumericalDegeneracy("slice chart sends a vertex to infinity")
            continue
        bound = -bi / hi_
        if hi_ > 0:
            lo = max(lo, bound)
        else:
            hi = min(hi, bound)
    if not lo < hi:
        raise NumericalDegeneracy("no hyperplane through the slice horizon misses the body")
    if np.isfinite(lo) and np.isfinite(hi):
        return 0.5 * (lo + hi)
    if np.isfinite(lo):
        return max(lo + 1.0, 0.0) if lo < 0 else lo + max(1.0, abs(lo))
    if np.isfinite(hi):
        return min(hi - 1.0, 0.0) if hi > 0 else hi - max(1.0, abs(hi))
    return 0.0


def _normalize(verts: np.ndarray) -> np.ndarray:
    """Chart map for the vertex set of a body containing 0 in its interior."""
    k, n = verts.shape
    if n == 1:
        a, b = verts[:, 0].min(), verts[:, 0].max()
        return _interval_map(a, b, 0.0)
    # slice by the hyperplane orthogonal to the first axis: cycle it to the end
    perm = np.zeros((n + 1, n + 1))
    for i in range(n):
        perm[i, (i + 1) % n] = 1.0
    perm[n, n] = 1.0
    tau = perm
    work = verts[:, list(range(1, n)) + [0]]

    inner = _normalize(_slice_vertices(work))
    inner = inner / inner[-1, -1]
    m = inner[: n - 1, : n - 1]
    ell = inner[n - 1, : n - 1]
    b = _choose_vertical_shift(ell, work)
    ext = np.zeros((n + 1, n + 1))
    ext[: n - 1, : n - 1] = m
    ext[n - 1, n - 1] = 1.0
    ext[n, : n - 1] = ell
    ext[n, n - 1] = b
    ext[n, n] = 1.0
    tau = ext @ tau
    work = apply_to_chart(ext, work)

    # squeeze the last coordinate into [-1, 1] with the top at height 1
    top, bottom = work[:, -1].max(), work[:, -1].min()
    if top <= 0 or bottom >= 0:
        raise PointNotInterior("base point is not interior to the body")
    flip = np.eye(n + 1)
    if top < -bottom:
        flip[n - 1, n - 1] = -1.0
        top, bottom = -bottom, -top
    flip[n - 1, n - 1] /= top
    tau = flip @ tau
    work = apply_to_chart(flip, work)
    bottom = bottom / top

    # shear the lexicographically smallest top vertex onto the last axis
    at_top = np.flatnonzero(work[:, -1] >= 1.0 - 1e-12)
    z = min((tuple(work[i]) for i in at_top))
    shear = np.eye(n + 1)
    shear[: n - 1, n - 1] = -np.asarray(z[:-1])
    tau = shear @ tau
    work = apply_to_chart(shear, work)

    # x_n -> lam x_n / ((lam - 1) x_n + 1) fixes x_n = 0 and 1, moves the bottom to -1
    depth = -bottom
    lam = (1.0 + depth) / (2.0 * depth)
    group = np.eye(n + 1)
    group[n - 1, n - 1] = lam
    group[n, n - 1] = lam - 1.0
    return group @ tau


def _ratio(body: ConvexBody, tau: np.ndarray) -> float:
    """Outer radius over inner radius about 0 of ``tau(body)``; inf if it leaves the chart."""
    n = body.dim
    h = np.hstack([body.vertices, np.ones((len(body.vertices), 1))]) @ tau.T
    w = h[:, -1]
    if not np.all(w > 1e-12 * np.abs(h).max()):
        return np.inf
    r_out = np.linalg.norm(h[:, :n] / w[:, None], axis=1).max()
    try:
        psi = np.hstack([-body.normals, body.offsets[:, None]]) @ np.linalg.inv(tau)
    except np.linalg.LinAlgError:
        return np.inf
    dist = psi[:, n] / np.linalg.norm(psi[:, :n], axis=1)
    if not np.all(dist > 0):
        return np.inf
    return float(r_out / dist.min())


def _santalo_step(body: ConvexBody) -> np.ndarray:
    """Map fixing 0 that moves the polar body's centroid to 0, then whitens it."""
    n = body.dim
    polar = body.normals / body.offsets[:, None]
    tri = Delaunay(polar)
    simp = polar[tri.simplices]
    vols = np.abs(np.linalg.det(simp[:, 1:] - simp[:, :1]))
    cents = simp.mean(axis=1)
    centroid = vols @ cents / vols.sum()
    # the polar of [[I, 0], [l, 1]] body is polar + l
    step = np.eye(n + 1)
    step[n, :n] = -centroid
    shifted = polar - centroid
    # second moment of the shifted polar from its vertices (a cheap proxy)
    sigma = shifted.T @ shifted / len(shifted)
    evals, evecs = np.linalg.eigh(sigma)
    root = evecs @ np.diag(np.sqrt(evals)) @ evecs.T
    lin = np.eye(n + 1)
    lin[:n, :n] = root / np.sqrt(evals.max())
    return lin @ step


def _polish(body: ConvexBody, tau: np.ndarray) -> np.ndarray:
    """Deterministic Nelder-Mead over maps ``[[M, 0], [l, 1]]`` fixing 0."""
    n = body.dim
    base = tau

    def unpack(theta):
        step = np.eye(n + 1)
        step[:n, :n] += theta[: n * n].reshape(n, n)
        step[n, :n] = theta[n * n :]
        return step @ base

    def objective(theta):
        r = _ratio(body, unpack(theta))
        return np.log(r) if np.isfinite(r) else 1e6

    theta0 = np.zeros(n * n + n)
    res = minimize(
        objective,
        theta0,
        method="Nelder-Mead",
        options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 500 * n, "adaptive": True},
    )
    if res.fun < objective(theta0):
        return unpack(res.x)
    return base


def benzecri_chart(body: ConvexBody, p, polish: bool = True) -> BenzecriChart:
    """Projective chart ``tau`` with ``tau(p) = 0`` and ``B(1) <= tau(body) <= B(R)``.

    The inductive construction gives a chart with ``tau(p) = 0``; its radius
    ratio is reported as ``R_inductive``.  With ``polish`` the chart is then
    improved over maps fixing 0 (a polar-centroid step, then a direct search
    if the ratio is still above ``5**(n-1)``) before the final rescale.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    n = body.dim
    if p.shape != (n,):
        raise ValueError(f"point must have {n} coordinates")
    if not body.bounded:
        raise NumericalDegeneracy("body has no vertices; it must be a bounded polytope")
    if np.any(body.slack(p) <= 1e-12 * max(1.0, np.abs(body.vertices).max())):
        raise PointNotInterior(f"point {p.tolist()} is not interior")
    if n == 1:
        # the three-point frame map is exact: endpoints go to -1 and 1
        lo, hi = body.vertices[:, 0].min(), body.vertices[:, 0].max()
        return BenzecriChart(_interval_map(lo, hi, p[0]), 1.0, 1, 1.0)
    shift = np.eye(n + 1)
    shift[:n, n] = -p
    tau = _normalize(body.vertices - p) @ shift
    tau = tau / (tau @ np.append(p, 1.0))[n]
    r_inductive = _ratio(body, tau)
    if not np.isfinite(r_inductive):
        raise NumericalDegeneracy("normalized body lost the base point")
    if polish and n > 1:
        candidates = [tau]
        try:
            candidates.append(_santalo_step(transform_body(body, tau)) @ tau)
        except (ValueError, np.linalg.LinAlgError, RuntimeError):
            pass  # qhull trouble on a sliver polar; keep the inductive chart
        tau = min(candidates, key=lambda t: _ratio(body, t))
        if _ratio(body, tau) > 5.0 ** (n - 1):
            tau = _polish(body, tau)
    # rescale so the inner radius about 0 is 1; a second pass absorbs round-off
    for _ in range(2):
        image = transform_body(body, tau)
        r_in = image.inradius_about(np.zeros(n))
        scale = np.eye(n + 1)
        scale[:n, :n] /= r_in
        tau = scale @ tau
        tau = tau / (tau @ np.append(p, 1.0))[n]
    image = transform_body(body, tau)
    r_out = float(np.linalg.norm(image.vertices, axis=1).max() / min(1.0, image.inradius_about(np.zeros(n))))
    return BenzecriChart(tau, r_out, n, float(r_inductive))


def verify_benzecri(body: ConvexBody, R: float, tol: float = 1e-9) -> bool:
    """Exact containment check ``B(1) <= body <= B(R)`` from facets and vertices."""
    n = body.dim
    inner = body.offsets / np.linalg.norm(body.normals, axis=1)
    if np.any(inner < 1.0 - tol):
        return False
    if not body.bounded:
        return False
    return bool(np.linalg.norm(body.vertices, axis=1).max() <= R * (1.0 + tol))


def chart_body(body: ConvexBody, chart: BenzecriChart) -> ConvexBody:
    return transform_body(body, chart.tau)
