"""Characteristic function of a polyhedral cone and its convexity function.

For a pointed cone ``C`` in ``R^m`` the characteristic function is the
integral of ``exp(-psi(x))`` over the dual cone.  On a simplicial piece of the
dual spanned by ``phi_1..phi_m`` the integral is ``|det Phi| / prod phi_i(x)``,
so a triangulation of the dual gives an exact finite sum.  The convexity
function is ``c = log(chi) / m``; its gradient and Hessian are obtained by
differentiating the same sum, evaluated in the log domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convexbody import ConvexBody, PolyCone, cone_facets, dual_cone, finsler_norm
from .errors import NotInterior, NotPointed


@dataclass(frozen=True)
class DualTriangulation:
    cone: PolyCone
    dual: PolyCone
    simplices: tuple[tuple[int, ...], ...]
    dets: np.ndarray

    @property
    def ambient_dim(self) -> int:
        return self.cone.ambient_dim

    def simplex_matrices(self) -> np.ndarray:
        """Stack of dual generator matrices, one ``(m, m)`` block per simplex."""
        return self.dual.generators[np.array(self.simplices)]


@dataclass(frozen=True)
class CharEval:
    x: np.ndarray
    chi: float
    log_chi: float
    c: float
    grad_c: np.ndarray
    hess_c: np.ndarray

    @property
    def min_eig_hess(self) -> float:
        return float(np.linalg.eigvalsh(self.hess_c).min())

    def to_json(self) -> dict:
        return {
            "x": self.x.tolist(),
            "chi": self.chi,
            "log_chi": self.log_chi,
            "c": self.c,
            "grad_c": self.grad_c.tolist(),
            "hess_c": self.hess_c.tolist(),
            "min_eig_hess": self.min_eig_hess,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CharEval":
        return cls(
            np.asarray(data["x"], dtype=float),
            float(data["chi"]),
            float(data["log_chi"]),
            float(data["c"]),
            np.asarray(data["grad_c"], dtype=float),
            np.asarray(data["hess_c"], dtype=float),
        )


# ---------------------------------------------------------------------------
# triangulation


def _span_basis(vectors: np.ndarray) -> np.ndarray:
    _, s, vt = np.linalg.svd(vectors, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0])))
    return vt[:rank]


def _fan(rays: np.ndarray, idx: list[int]) -> list[tuple[int, ...]]:
    """Fan triangulation of the cone over ``rays[idx]`` from its first ray."""
    basis = _span_basis(rays[idx])
    d = len(basis)
    if len(idx) == d:
        return [tuple(idx)]
    local = rays[idx] @ basis.T
    unit = local / np.linalg.norm(local, axis=1, keepdims=True)
    apex = 0
    out: list[tuple[int, ...]] = []
    for phi in cone_facets(local):
        on = np.flatnonzero(np.abs(unit @ phi) <= 1e-9)
        if apex in on:
            continue
        for simplex in _fan(rays, [idx[j] for j in on]):
            out.append((idx[apex],) + simplex)
    return out


def triangulate_dual(cone: PolyCone) -> DualTriangulation:
    """Fan triangulation of the dual cone from its first generator."""
    dual = dual_cone(cone)
    rays = dual.generators / np.linalg.norm(dual.generators, axis=1, keepdims=True)
    dual = PolyCone(rays, dual.facet_normals)
    m = cone.ambient_dim
    simplices = tuple(_fan(rays, list(range(len(rays)))))
    if len(simplices) == 0 or any(len(s) != m for s in simplices):
        raise NotPointed("dual cone triangulation degenerated")
    dets = np.abs(np.linalg.det(rays[np.array(simplices)]))
    # thin cones have small but genuine simplices; only rounding-level ones are degenerate
    if np.any(dets <= 1e-10 * dets.max()) or dets.max() <= 1e-14:
        raise NotPointed("dual cone triangulation degenerated")
    return DualTriangulation(cone, dual, simplices, dets)


def cone_from_generators(gens) -> DualTriangulation:
    return triangulate_dual(PolyCone(np.asarray(gens, dtype=float)))


# ---------------------------------------------------------------------------
# evaluation


def _check_interior(tri: DualTriangulation, x: np.ndarray) -> np.ndarray:
    vals = tri.dual.generators @ x
    if np.any(vals <= 1e-12 * max(1.0, np.linalg.norm(x))):
        raise NotInterior(f"point {x.tolist()} is not inside the cone")
    return vals


def log_chi(tri: DualTriangulation, x) -> float:
    x = np.asarray(x, dtype=float)
    vals = _check_interior(tri, x)
    idx = np.array(tri.simplices)
    return float(np.logaddexp.reduce(np.log(tri.dets) - np.log(vals[idx]).sum(axis=1)))


def chi_value(tri: DualTriangulation, x) -> float:
    return float(np.exp(log_chi(tri, x)))


def chi_eval(tri: DualTriangulation, x) -> CharEval:
    """Value of chi and the gradient and Hessian of ``c = log(chi) / m`` at ``x``."""
    x = np.asarray(x, dtype=float)
    vals = _check_interior(tri, x)
    m = tri.ambient_dim
    idx = np.array(tri.simplices)
    phis = tri.dual.generators[idx]  # (s, m, m)
    inv = 1.0 / vals[idx]  # (s, m)
    log_terms = np.log(tri.dets) + np.log(inv).sum(axis=1)
    lchi = float(np.logaddexp.reduce(log_terms))
    w = np.exp(log_terms - lchi)
    scaled = phis * inv[..., None]  # phi_i / phi_i(x)
    g = scaled.sum(axis=1)
    mean_g = w @ g
    grad_log = -mean_g
    # covariance form of chi''/chi - grad grad^T: no cancellation, visibly PSD
    dev = g - mean_g
    hess_log = np.einsum("s,si,sj->ij", w, dev, dev) + np.einsum("s,ski,skj->ij", w, scaled, scaled)
    return CharEval(x, float(np.exp(lchi)), lchi, lchi / m, grad_log / m, hess_log / m)


def characteristic_section(tri: DualTriangulation, x) -> np.ndarray:
    """Radial rescaling ``x * chi(x)**(1/m)`` onto the level set ``chi = 1``."""
    x = np.asarray(x, dtype=float)
    return x * np.exp(log_chi(tri, x) / tri.ambient_dim)


def flow_equivariance_check(tri: DualTriangulation, x, t: float) -> float:
    """Residual ``|c(exp(-t) x) - c(x) - t|`` of the radial flow identity."""
    x = np.asarray(x, dtype=float)
    m = tri.ambient_dim
    return abs(log_chi(tri, np.exp(-t) * x) / m - log_chi(tri, x) / m - t)


# ---------------------------------------------------------------------------
# uniform convexity


def cone_region(tri: DualTriangulation) -> ConvexBody:
    """The open cone as an unbounded region ``{-phi . y < 0}`` for Hilbert-Finsler norms."""
    phis = tri.dual.generators
    return ConvexBody.from_halfspaces(-phis, np.zeros(len(phis)))


def convexity_ratio(tri: DualTriangulation, x, v, region: ConvexBody | None = None) -> float:
    """``D^2 c_x(v, v) / F(x, v)**2`` with ``F`` the Hilbert-Finsler norm of the cone."""
    region = region if region is not None else cone_region(tri)
    v = np.asarray(v, dtype=float)
    ev = chi_eval(tri, x)
    f = finsler_norm(region, ev.x, v)
    return float(v @ ev.hess_c @ v / (f * f))


def estimate_kappa(tri: DualTriangulation, samples: int, seed: int = 0) -> float:
    """Sampled lower estimate of the uniform convexity constant of the cone.

    Points are characteristic-section images of Dirichlet combinations of the
    cone generators; directions are Gaussian combinations of the generators,
    which keeps the estimate unchanged when the cone is moved by a linear map.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    gens = tri.cone.generators
    region = cone_region(tri)
    weights = rng.dirichlet(np.ones(len(gens)), size=samples)
    coeffs = rng.standard_normal((samples, len(gens)))
    best = np.inf
    for w, a in zip(weights, coeffs):
        x = characteristic_section(tri, w @ gens)
        v = a @ gens
        if not np.any(v):
            continue
        best = min(best, convexity_ratio(tri, x, v, region))
    return float(best)
