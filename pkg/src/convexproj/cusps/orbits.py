"""Orbit convexity certificates, cusp domains, flow time and exhaustion functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import cdist

from ..convexbody import ConvexBody, convex_hull
from ..errors import ConvexProjError, DegenerateSpan, FlowlineMisses, NotStrictlyConvex, WrongDimension
from ..projlinalg import mat_exp, normalize_point
from .families import CuspRep
from .groups import (
    RadialFlow,
    TranslationGroup,
    WeightDecomposition,
    default_flow_weight,
    radial_flow_for_weight,
    translation_group,
    weight_decomposition,
)

CERT_TOL = 1e-6
FD_STEP = 1e-4
INVARIANCE_TOL = 1e-8


# ---------------------------------------------------------------------------
# charts


def chart_index(x) -> int:
    """The last coordinate when it is not negligible, else the largest one."""
    x = np.asarray(x, dtype=float)
    if abs(x[-1]) > 1e-8 * np.abs(x).max():
        return len(x) - 1
    return int(np.argmax(np.abs(x)))


def chart(h, k: int) -> np.ndarray:
    """Affine coordinates of homogeneous rows ``h`` in the chart ``x_k = 1``."""
    h = np.asarray(h, dtype=float)
    rest = np.delete(h, k, axis=-1)
    return rest / h[..., k : k + 1]


def unchart(c, k: int) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.insert(c, k, 1.0, axis=-1)


def _chart_velocity(h: np.ndarray, dh: np.ndarray, k: int) -> np.ndarray:
    """Derivative of ``chart(h)`` along ``dh`` (both with a batch axis)."""
    c = chart(h, k)
    return (np.delete(dh, k, axis=-1) - c * dh[..., k : k + 1]) / h[..., k : k + 1]


# ---------------------------------------------------------------------------
# certificate


@dataclass(frozen=True)
class ConvexityCertificate:
    base_point: np.ndarray
    Q: np.ndarray
    eigenvalues: np.ndarray
    verdict: str  # strictly_convex | flat | indefinite
    tolerance: float
    normal: np.ndarray
    chart_index: int
    rank: int

    @property
    def min_eig(self) -> float:
        return float(np.min(np.abs(self.eigenvalues))) if self.verdict == "strictly_convex" else 0.0

    def to_json(self) -> dict:
        return {
            "base_point": self.base_point.tolist(),
            "Q": self.Q.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "normal": self.normal.tolist(),
            "chart_index": self.chart_index,
            "rank": self.rank,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConvexityCertificate":
        return cls(
            np.asarray(data["base_point"], dtype=float),
            np.asarray(data["Q"], dtype=float),
            np.asarray(data["eigenvalues"], dtype=float),
            str(data["verdict"]),
            float(data["tolerance"]),
            np.asarray(data["normal"], dtype=float),
            int(data["chart_index"]),
            int(data["rank"]),
        )


def orbit_certificate(T: TranslationGroup, x, basis=None, tol: float = CERT_TOL) -> ConvexityCertificate:
    """Second fundamental form of the orbit ``T . x`` at ``x``.

    The orbit is parameterized as ``f(u) = chart(exp(sum u_i X_i) x)`` with the
    ``X_i`` the generator logarithms unless ``basis`` is given; the
    tangent space comes from the exact first derivatives ``X_i x`` and the
    Hessian of ``f`` from central differences.  ``Q`` is the Hessian paired with
    the unit normal, signed so that its trace is non-negative; the normal then
    points to the side the orbit curves toward.
    """
    x = np.asarray(x, dtype=float)
    size = T.size
    if x.shape != (size,):
        raise WrongDimension(f"point has {x.size} coordinates, expected {size}")
    mats = [np.asarray(m, dtype=float) for m in (basis if basis is not None else T.coordinate_basis)]
    d = len(mats)
    if T.dim_T != size - 2 or d != size - 2:
        raise WrongDimension(f"orbit of a {d}-dimensional group is not a hypersurface in RP^{size - 1}")
    x = normalize_point(x)
    k = chart_index(x)
    stack = np.array(mats)
    eye = np.eye(d)
    h = FD_STEP
    # stencil: 0, +-h e_i, and +-h e_i +-h e_j for i < j
    offsets = [np.zeros(d)]
    for i in range(d):
        offsets += [h * eye[i], -h * eye[i]]
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    for i, j in pairs:
        for si in (1, -1):
            for sj in (1, -1):
                offsets.append(si * h * eye[i] + sj * h * eye[j])
    offsets = np.array(offsets)
    pts = mat_exp(np.tensordot(offsets, stack, axes=(1, 0))) @ x
    f = chart(pts, k)
    f0 = f[0]
    tangent = _chart_velocity(np.tile(x, (d, 1)), stack @ x, k).T  # (n, d)
    hess = np.zeros((f.shape[1], d, d))
    for i in range(d):
        hess[:, i, i] = (f[1 + 2 * i] - 2 * f0 + f[2 + 2 * i]) / (h * h)
    base = 1 + 2 * d
    for p, (i, j) in enumerate(pairs):
        pp, pm, mp, mm = f[base + 4 * p : base + 4 * p + 4]
        hess[:, i, j] = hess[:, j, i] = (pp - pm - mp + mm) / (4 * h * h)
    u, s, _ = np.linalg.svd(tangent)
    rank = int(np.sum(s > 1e-8 * max(1.0, s[0])))
    normal = u[:, -1]
    if rank < d:
        q = np.zeros((d, d))
        return ConvexityCertificate(x, q, np.zeros(d), "flat", tol, normal, k, rank)
    q = np.einsum("k,kij->ij", normal, hess)
    q = (q + q.T) / 2
    if np.trace(q) < 0:
        q = -q
        normal = -normal
    eig = np.linalg.eigvalsh(q)
    if np.all(eig > tol):
        verdict = "strictly_convex"
    elif eig.min() < -tol and eig.max() > tol:
        verdict = "indefinite"
    else:
        # semidefinite with a vanishing direction, or identically zero
        verdict = "flat"
    return ConvexityCertificate(x, q, eig, verdict, tol, normal, k, rank)


# ---------------------------------------------------------------------------
# orbit equations


def _solve_orbit(mats, x, k, targets, z0, max_iter: int = 80, tol: float = 1e-13):
    """Damped Gauss-Newton for ``chart(exp(sum z_i Y_i) x) = target`` row by row.

    The ``Y_i`` commute, so the derivative in ``z_i`` is ``Y_i exp(...) x``.
    Returns the solutions and the final residual norms (relative to the target).
    """
    stack = np.asarray(mats, dtype=float)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    z = np.array(z0, dtype=float, copy=True)
    scale = np.maximum(1.0, np.linalg.norm(targets, axis=1))

    def residual(zz, rows):
        with np.errstate(all="ignore"):
            h = mat_exp(np.tensordot(zz, stack, axes=(1, 0))) @ x
            r = chart(h, k) - targets[rows]
        return h, r

    def norms(r, rows):
        out = np.linalg.norm(r, axis=1) / scale[rows]
        out[~np.isfinite(out)] = np.inf
        return out

    everything = np.arange(len(targets))
    h, r = residual(z, everything)
    err = norms(r, everything)
    active = err > tol
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        hh = h[idx]
        jac = np.stack([_chart_velocity(hh, hh @ y.T, k) for y in stack], axis=-1)
        step = -np.einsum("bij,bj->bi", np.linalg.pinv(jac), r[idx])
        lam = np.ones(len(idx))
        improved = np.zeros(len(idx), dtype=bool)
        for _ in range(30):
            todo = ~improved
            if not todo.any():
                break
            rows = idx[todo]
            trial = z[rows] + lam[todo, None] * step[todo]
            try:
                h_t, r_t = residual(trial, rows)
            except ConvexProjError:
                lam[todo] /= 2
                continue
            e_t = norms(r_t, rows)
            ok = e_t < err[idx[todo]]
            sub = idx[todo][ok]
            z[sub] = trial[ok]
            h[sub] = h_t[ok]
            r[sub] = r_t[ok]
            err[sub] = e_t[ok]
            improved[np.flatnonzero(todo)[ok]] = True
            lam[todo] = np.where(ok, lam[todo], lam[todo] / 2)
        stalled = idx[~improved]
        active[stalled] = False
        active &= err > tol
    return z, err


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class GridSpec:
    lo: float = -2.0
    hi: float = 2.0
    count: int = 21

    def coords(self, d: int) -> np.ndarray:
        axis = np.linspace(self.lo, self.hi, self.count)
        mesh = np.meshgrid(*([axis] * d), indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])


@dataclass(frozen=True)
class CuspDomain:
    rep: CuspRep
    T: TranslationGroup
    base_point: np.ndarray
    chart_index: int
    grid_coords: np.ndarray
    boundary_samples: np.ndarray  # chart coordinates of the sampled orbit
    hull: ConvexBody
    certificate: ConvexityCertificate
    decomposition: WeightDecomposition
    flow: RadialFlow
    invariance_residual: float

    def to_json(self) -> dict:
        return {
            "base_point": self.base_point.tolist(),
            "chart_index": self.chart_index,
            "dim_T": self.T.dim_T,
            "boundary_samples": self.boundary_samples.tolist(),
            "hull": self.hull.to_json(),
            "certificate": self.certificate.to_json(),
            "flow": self.flow.to_json(),
            "invariance_residual": self.invariance_residual,
        }


def orbit_samples(T: TranslationGroup, x, coords, k: int) -> np.ndarray:
    """Chart coordinates of ``exp(sum c_i B_i) x`` for lattice coordinates ``c``."""
    h = T.element(coords) @ np.asarray(x, dtype=float)
    denom = h[:, k] * np.sign(x[k])
    if np.any(denom <= 1e-12 * np.abs(h).max(axis=1)):
        raise DegenerateSpan("the sampled orbit leaves the affine chart")
    return chart(h, k)


def build_cusp_domain(rep, x, grid: GridSpec | None = None) -> CuspDomain:
    """Sampled convex hull of the orbit of ``x`` under the translation group."""
    rep = rep if isinstance(rep, CuspRep) else CuspRep(rep)
    grid = grid or GridSpec()
    T = translation_group(rep)
    cert = orbit_certificate(T, x)
    if cert.verdict != "strictly_convex":
        raise NotStrictlyConvex(f"orbit certificate is {cert.verdict}")
    x = cert.base_point
    k = cert.chart_index
    coords = grid.coords(T.dim_T)
    samples = orbit_samples(T, x, coords, k)
    hull = convex_hull(samples)
    if hull.degenerate:
        raise DegenerateSpan("sampled orbit does not span the chart")
    scale = max(1.0, np.abs(samples).max())
    nearest = cdist(samples, hull.vertices).min(axis=1)
    if np.any(nearest > 1e-12 * scale):
        raise NotStrictlyConvex(f"{int(np.sum(nearest > 1e-12 * scale))} samples are not hull vertices")

    # generator images of the samples must lie on the orbit surface
    basis = list(T.coordinate_basis)
    homog = unchart(samples, k)
    worst = 0.0
    for g, lg in zip(rep.generators, T.generator_logs):
        images = chart(homog @ g.T, k)
        start = coords + T.coordinates(lg)
        _, err = _solve_orbit(basis, x, k, images, start)
        worst = max(worst, float(err.max()))
    if worst > INVARIANCE_TOL:
        raise NotStrictlyConvex(f"generator images leave the orbit surface by {worst:.3g}")

    decomp = weight_decomposition(rep)
    flow = radial_flow_for_weight(decomp, default_flow_weight(decomp))
    # orient the flow so that running it backwards moves x into the convex side
    back = _chart_velocity(x[None, :], (-flow.generator_A @ x)[None, :], k)[0]
    if back @ cert.normal < 0:
        flow = flow.reversed()
    return CuspDomain(rep, T, x, k, coords, samples, hull, cert, decomp, flow, worst)


# ---------------------------------------------------------------------------
# flow time and exhaustion


def _as_homogeneous(y, size: int, k: int) -> np.ndarray:
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if y.shape[1] == size:
        return y
    if y.shape[1] == size - 1:
        return unchart(y, k)
    raise WrongDimension(f"point has {y.shape[1]} coordinates")


def flow_time_raw(T: TranslationGroup, flow: RadialFlow, x, y, u0=None, k: int | None = None) -> np.ndarray:
    """Flow time to the orbit ``T . x``: ``Phi_t(y) in T . x`` for ``t = T~(y)``.

    Solves ``chart(exp(sum u_i B_i + tau A) x) = chart(y)`` jointly in ``(u, tau)``
    and returns ``-tau`` for every row of ``y``.
    """
    x = normalize_point(x)
    k = chart_index(x) if k is None else k
    size = T.size
    targets = chart(_as_homogeneous(y, size, k), k)
    mats = list(T.coordinate_basis) + [flow.generator_A]
    z0 = np.zeros((len(targets), len(mats)))
    if u0 is not None:
        z0[:, :-1] = u0
    z, err = _solve_orbit(mats, x, k, targets, z0)
    if np.any(err > 1e-10):
        bad = int(np.argmax(err))
        raise FlowlineMisses(f"flowline of {targets[bad].tolist()} does not meet the orbit (residual {err[bad]:.3g})")
    return -z[:, -1]


def flow_times(domain: CuspDomain, ys) -> np.ndarray:
    """Flow time ``T~`` for rows of homogeneous or chart points."""
    k = domain.chart_index
    targets = chart(_as_homogeneous(ys, domain.T.size, k), k)
    nearest = np.argmin(cdist(targets, domain.boundary_samples), axis=1)
    return flow_time_raw(domain.T, domain.flow, domain.base_point, unchart(targets, k), domain.grid_coords[nearest], k)


def flow_time(domain: CuspDomain, y) -> float:
    return float(flow_times(domain, y)[0])


def _line_coefficient(flow: RadialFlow, t):
    return t if flow.kind == "parabolic" else np.expm1(t)


def exhaustion_values(domain: CuspDomain, ys, tau0: float = 1.0) -> np.ndarray:
    """Hilbert distance from each ``y`` to the reference leaf ``{T~ = tau0}``.

    The distance is measured on the flowline of ``y``, a projective line
    ``y + c A y`` whose ends in the domain are the boundary point (depth 0) and
    the limit of the backward flow.  Points no deeper than the leaf get 0.
    """
    if not tau0 > 0:
        raise ValueError("tau0 must be positive")
    tau1 = flow_times(domain, ys)
    deep = tau1 > tau0
    out = np.zeros(len(tau1))
    t1 = tau1[deep]
    flow = domain.flow
    c_z = _line_coefficient(flow, t1 - tau0)
    c_b = _line_coefficient(flow, t1)
    # y itself sits at c = 0
    if flow.kind == "parabolic":
        # the far end is the centre A y, at c = infinity
        ratio = c_b / (c_b - c_z)
    else:
        # the far end is y - A y, at c = -1
        ratio = (c_z + 1.0) * c_b / (c_b - c_z)
    out[deep] = np.abs(np.log(ratio))
    return out


def exhaustion_function(domain: CuspDomain, y, tau0: float = 1.0) -> float:
    return float(exhaustion_values(domain, y, tau0)[0])


def _exit_parameter(domain: CuspDomain, a: np.ndarray, v: np.ndarray) -> float:
    """Smallest ``s > 0`` with ``a + s v`` on the boundary (``inf`` if none)."""

    def depth(s):
        try:
            return flow_time(domain, a + s * v)
        except ConvexProjError:
            return -np.inf

    lo, hi = 0.0, 1.0
    while depth(hi) > 0:
        lo, hi = hi, 2 * hi
        if hi > 1e12:
            return np.inf
    if np.isfinite(depth(hi)):
        return float(brentq(depth, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    for _ in range(200):
        mid = (lo + hi) / 2
        if depth(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return float(lo)


def domain_hilbert_distance(domain: CuspDomain, a, b) -> float:
    """Hilbert distance in the cusp domain ``{T~ > 0}`` between chart points."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    v = b - a
    if not np.any(v):
        return 0.0
    t_plus = _exit_parameter(domain, a, v)
    t_minus = _exit_parameter(domain, a, -v)
    return float(np.log1p(1.0 / t_minus) - np.log1p(-1.0 / t_plus))
