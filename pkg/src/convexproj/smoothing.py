"""Smooth replacements for ``min`` and the convex smoothing built on them.

The cap ``K`` agrees with ``k(t) = min(t, 1 - t)`` outside ``(delta, 1 - delta)``
and is a concave even quartic in ``t - 1/2`` inside, glued with matching
value, slope and curvature.  The homogeneous extension
``m(x, y) = (x + y) K(x / (x + y))`` is a concave, non-decreasing, degree-1
surrogate for ``min`` that equals ``min`` whenever one argument is at most
``kappa`` times the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import LinearNDInterpolator
from scipy.spatial import ConvexHull

from .convexbody import ConvexBody
from .errors import BadKappa, FlatFunction, NonPositiveInput, NotConvexPatch, NoValidAlphaBeta

Evaluator = Callable[[np.ndarray], tuple[float, np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class CapFunction:
    kappa: float
    delta: float

    @property
    def half_width(self) -> float:
        return 0.5 - self.delta

    def _inner(self, t):
        # the quartic piece and its first two derivatives
        h = self.half_width
        u = np.asarray(t, dtype=float) - 0.5
        k0 = self.delta + 5 * h / 8 - 3 * u**2 / (4 * h) + u**4 / (8 * h**3)
        k1 = -3 * u / (2 * h) + u**3 / (2 * h**3)
        k2 = -3 / (2 * h) + 3 * u**2 / (2 * h**3)
        return k0, k1, k2

    def _band(self, t):
        return np.abs(np.asarray(t, dtype=float) - 0.5) < self.half_width

    def K(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(self._band(t), self._inner(t)[0], np.minimum(t, 1 - t))

    def dK(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(self._band(t), self._inner(t)[1], np.where(t < 0.5, 1.0, -1.0))

    def d2K(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(self._band(t), self._inner(t)[2], 0.0)

    def join_mismatch(self) -> float:
        """Largest jump of K, K', K'' across the joins at delta and 1 - delta."""
        d = self.delta
        jumps = []
        for t, outer in ((d, (d, 1.0, 0.0)), (1 - d, (d, -1.0, 0.0))):
            jumps += [abs(a - b) for a, b in zip(self._inner(t), outer)]
        return float(max(jumps))

    def parts(self, x, y):
        """``m`` and its first and second partial derivatives (arrays broadcast)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        s = x + y
        t = x / s
        k, k1, k2 = self.K(t), self.dK(t), self.d2K(t)
        # outside the band m is exactly min(x, y)
        value = np.where(self._band(t), s * k, np.minimum(x, y))
        mx = k + (1 - t) * k1
        my = k - t * k1
        mxx = (1 - t) ** 2 * k2 / s
        myy = t**2 * k2 / s
        mxy = -t * (1 - t) * k2 / s
        return value, mx, my, mxx, mxy, myy

    def m(self, x, y):
        """Smooth minimum ``(x + y) K(x / (x + y))`` of positive numbers."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(x <= 0) or np.any(y <= 0):
            raise NonPositiveInput("smooth minimum needs positive arguments")
        value = self.parts(x, y)[0]
        return float(value) if value.ndim == 0 else value

    def to_json(self) -> dict:
        return {"kappa": self.kappa, "delta": self.delta}


def build_cap(kappa: float) -> CapFunction:
    if not 0 < kappa < 1:
        raise BadKappa(f"kappa must lie in (0, 1), got {kappa}")
    cap = CapFunction(float(kappa), float(kappa / (1 + kappa)))
    if cap.join_mismatch() > 1e-8:
        raise BadKappa(f"cap is not C2 at the joins for kappa={kappa}")
    return cap


def m_kappa(cap: CapFunction, x, y):
    return cap.m(x, y)


# ---------------------------------------------------------------------------
# relative smoothing


@dataclass(frozen=True)
class ConvexFunctionHandle:
    """A convex function on a domain with value, gradient and Hessian."""

    evaluate: Evaluator
    domain: ConvexBody

    def value(self, x) -> float:
        return self.evaluate(np.asarray(x, dtype=float))[0]


def quadratic_handle(a, b, c: float, domain: ConvexBody) -> ConvexFunctionHandle:
    """``x . A x + b . x + c`` as a handle (A symmetric)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def evaluate(x):
        return float(x @ a @ x + b @ x + c), 2 * a @ x + b, 2 * a

    return ConvexFunctionHandle(evaluate, domain)


@dataclass(frozen=True)
class SmoothedFunction:
    """``F = -m(-f, -g)`` with ``g(x) = alpha |x|^2 + beta``."""

    f: ConvexFunctionHandle
    cap: CapFunction
    alpha: float
    beta: float

    @property
    def domain(self) -> ConvexBody:
        return self.f.domain

    def g(self, x) -> tuple[float, np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        n = len(x)
        return float(self.alpha * x @ x + self.beta), 2 * self.alpha * x, 2 * self.alpha * np.eye(n)

    def evaluate(self, x) -> tuple[float, np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        fv, fg, fh = self.f.evaluate(x)
        gv, gg, gh = self.g(x)
        value, mx, my, mxx, mxy, myy = (float(v) for v in self.cap.parts(-fv, -gv))
        grad = mx * fg + my * gg
        hess = (
            mx * fh
            + my * gh
            - (mxx * np.outer(fg, fg) + mxy * (np.outer(fg, gg) + np.outer(gg, fg)) + myy * np.outer(gg, gg))
        )
        return -value, grad, hess

    def value(self, x) -> float:
        return self.evaluate(x)[0]

    def values(self, pts) -> np.ndarray:
        return np.array([self.value(p) for p in np.atleast_2d(pts)])

    def as_handle(self) -> ConvexFunctionHandle:
        return ConvexFunctionHandle(self.evaluate, self.domain)


def _sample_domain(body: ConvexBody, count: int, rng) -> np.ndarray:
    w = rng.dirichlet(np.full(len(body.vertices), 0.5), size=count)
    return np.vstack([body.vertices, w @ body.vertices])


def relative_smooth(
    f: ConvexFunctionHandle,
    c_minus: ConvexBody,
    kappa: float = 0.5,
    samples: int = 2000,
    seed: int = 0,
) -> SmoothedFunction:
    """Smooth a convex ``f`` (zero on the boundary of its domain) relative to ``c_minus``.

    Returns ``F = -m(-f, -g)`` with ``g = alpha |x|^2 + beta`` chosen so that
    ``g < 0`` on the domain, ``F = g`` on ``c_minus`` and ``F = f`` near the
    boundary.  With ``beta = kappa' * max_{c_minus} f`` (``kappa' = min(kappa, 1/2)``)
    and ``alpha = -beta / (2 R^2)``, ``R`` the outer radius of the domain about 0,
    both constraints hold in closed form; they are then verified on samples.
    """
    cap = build_cap(kappa)
    domain = f.domain
    if not domain.bounded or not c_minus.bounded:
        raise NoValidAlphaBeta("domain and inner region must be bounded polytopes")
    rng = np.random.Generator(np.random.Philox(seed))
    pts = _sample_domain(domain, samples, rng)
    fvals = np.array([f.value(p) for p in pts])
    if fvals.min() > -1e-9:
        raise FlatFunction("f vanishes on the sampled domain")
    inner_pts = _sample_domain(c_minus, samples, rng)
    f_inner_max = max(f.value(v) for v in c_minus.vertices)
    if not f_inner_max < 0:
        raise NoValidAlphaBeta("f is not negative on the inner region")
    beta = min(kappa, 0.5) * f_inner_max
    radius = float(np.linalg.norm(domain.vertices, axis=1).max())
    alpha = -beta / (2 * radius**2)
    out = SmoothedFunction(f, cap, float(alpha), float(beta))
    gvals = alpha * np.einsum("ij,ij->i", pts, pts) + beta
    if np.any(gvals >= 0):
        raise NoValidAlphaBeta("g is not negative on the domain")
    inner_f = np.array([f.value(p) for p in inner_pts])
    inner_g = alpha * np.einsum("ij,ij->i", inner_pts, inner_pts) + beta
    if np.any(-inner_g > cap.kappa * -inner_f * (1 + 1e-12)):
        raise NoValidAlphaBeta("F does not reduce to g on the inner region")
    return out


def hessian_fd(fn: Callable[[np.ndarray], float], x, h: float = 1e-4) -> np.ndarray:
    """Central second differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    eye = np.eye(n) * h
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            v = (
                fn(x + eye[i] + eye[j])
                - fn(x + eye[i] - eye[j])
                - fn(x - eye[i] + eye[j])
                + fn(x - eye[i] - eye[j])
            ) / (4 * h * h)
            out[i, j] = out[j, i] = v
    return out


# ---------------------------------------------------------------------------
# boundary patches


@dataclass(frozen=True)
class PatchResult:
    points: np.ndarray
    heights: np.ndarray
    smoothed: np.ndarray
    radius: float
    alpha: float
    beta: float
    height_fn: Callable[[np.ndarray], float]

    def to_json(self) -> dict:
        return {
            "radius": self.radius,
            "alpha": self.alpha,
            "beta": self.beta,
            "points": self.points.tolist(),
            "heights": self.heights.tolist(),
            "smoothed": self.smoothed.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "PatchResult":
        """Samples only; the off-sample evaluator is not serialized."""
        return cls(
            np.atleast_2d(np.asarray(data["points"], dtype=float)),
            np.asarray(data["heights"], dtype=float),
            np.asarray(data["smoothed"], dtype=float),
            float(data["radius"]),
            float(data["alpha"]),
            float(data["beta"]),
            None,
        )


def _check_concave(points: np.ndarray, heights: np.ndarray, tol: float) -> None:
    d = points.shape[1]
    lifted = np.vstack([np.column_stack([points, heights]), np.column_stack([points, np.zeros(len(points))])])
    if d == 1:
        order = np.argsort(points[:, 0])
        xs, hs = points[order, 0], heights[order]
        slopes = np.diff(hs) / np.maximum(np.diff(xs), 1e-300)
        if np.any(np.diff(slopes) > tol * max(1.0, np.abs(slopes).max())):
            raise NotConvexPatch("heights are not concave")
        return
    hull = ConvexHull(lifted)
    eqs = hull.equations
    upper = eqs[eqs[:, d] > 1e-12]
    # height of the upper hull above each sample point
    roof = np.min((-upper[:, -1][None, :] - points @ upper[:, :d].T) / upper[:, d][None, :], axis=1)
    if np.any(heights < roof - tol * max(1.0, heights.max())):
        raise NotConvexPatch("sampled graph is not the boundary of a convex region")


def smooth_boundary_patch(
    points,
    heights,
    kappa: float = 0.5,
    height_fn: Callable[[np.ndarray], float] | None = None,
    tol: float = 1e-9,
) -> PatchResult:
    """Smooth a convex boundary patch given as heights over a disc centred at 0.

    ``heights`` describe a concave function ``h >= 0`` vanishing on the rim;
    the region below the graph is convex.  The result is ``m(h, -g)`` with the
    relative-smoothing ``g`` for ``f = -h``: it lies between the base and the
    old graph, equals ``-g`` (a concave quadratic) on the half-radius disc and
    equals ``h`` near the rim.  Off-sample values use ``height_fn`` when given,
    otherwise piecewise-linear interpolation of the samples.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    heights = np.asarray(heights, dtype=float).reshape(-1)
    if len(points) != len(heights):
        raise NotConvexPatch("points and heights differ in length")
    radius = float(np.linalg.norm(points, axis=1).max())
    if np.any(heights < -tol):
        raise NotConvexPatch("heights must be non-negative")
    rim = np.linalg.norm(points, axis=1) >= radius * (1 - 1e-9)
    if np.any(np.abs(heights[rim]) > tol):
        raise NotConvexPatch("heights must vanish on the rim")
    if heights.max() <= tol:
        raise FlatFunction("flat patch: nothing to smooth")
    _check_concave(points, heights, tol)
    cap = build_cap(kappa)

    if height_fn is None:
        if points.shape[1] == 1:
            order = np.argsort(points[:, 0])

            def height_fn(x):
                return float(np.interp(x[0], points[order, 0], heights[order]))

        else:
            interp = LinearNDInterpolator(points, heights, fill_value=0.0)

            def height_fn(x):
                return float(interp(np.atleast_2d(x))[0])

    # a concave h is smallest near the outside of the half disc; the samples
    # out to 3/4 of the radius bound it from below on the half disc
    inner = np.linalg.norm(points, axis=1) <= 0.75 * radius
    if not inner.any():
        raise NotConvexPatch("no samples inside the patch")
    beta = -min(kappa, 0.5) * heights[inner].min()
    if not beta < 0:
        raise FlatFunction("patch touches the base inside the half-radius disc")
    alpha = -beta / (2 * radius**2)

    def smooth_value(x, h):
        if h <= 0.0:
            return 0.0
        return float(cap.m(h, -(alpha * x @ x + beta)))

    def smoothed_height(x):
        x = np.asarray(x, dtype=float)
        return smooth_value(x, height_fn(x))

    new = np.array([smooth_value(p, h) for p, h in zip(points, heights)])
    return PatchResult(points, heights, new, radius, float(alpha), float(beta), smoothed_height)
