"""Quick invariant checks across all modules, runnable without the test suite."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .benzecri import benzecri_chart, chart_body, verify_benzecri
from .charfn import chi_eval, chi_value, cone_from_generators, convexity_ratio, estimate_kappa
from .convexbody import ConvexBody, convex_hull, hilbert_distance
from .cusps import (
    CuspFamily,
    alpha_path,
    constant_path,
    deform_path_check,
    orbit_certificate,
    radial_flow_for_weight,
    rotation_path,
    translation_group,
    weight_decomposition,
)
from .projlinalg import mat_exp, mat_log_e
from .smoothing import build_cap


def _require(condition, detail="") -> None:
    # explicit so the checks survive python -O
    if not condition:
        raise AssertionError(detail)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def check_exp_log(rng) -> str:
    worst = 0.0
    for _ in range(20):
        p = rng.standard_normal((4, 4)) + 3 * np.eye(4)
        # real spectrum by construction, so g is an e-matrix
        x = p @ np.diag(rng.uniform(-1.0, 1.0, 4)) @ np.linalg.inv(p)
        g = mat_exp(x)
        worst = max(worst, float(np.abs(mat_exp(mat_log_e(g)) - g).max()))
    _require(worst <= 1e-10, worst)
    return f"max exp(log g) - g = {worst:.2e}"


def check_benzecri(rng) -> str:
    worst = {}
    for n in (2, 3):
        for _ in range(10):
            body = convex_hull(rng.standard_normal((12, n)))
            w = rng.dirichlet(np.ones(len(body.vertices)))
            chart = benzecri_chart(body, w @ body.vertices)
            _require(verify_benzecri(chart_body(body, chart), 5.0 ** (n - 1)))
            worst[n] = max(worst.get(n, 0.0), chart.R_achieved)
    return "max R: " + ", ".join(f"n={n}: {r:.3f}" for n, r in worst.items())


def check_charfn(rng) -> str:
    tri = cone_from_generators(np.eye(4))
    x = rng.uniform(0.5, 2.0, 4)
    _require(abs(chi_value(tri, x) * np.prod(x) - 1) <= 1e-12)
    ev = chi_eval(tri, x)
    _require(abs(ev.grad_c @ x + 1) <= 1e-9 and abs(x @ ev.hess_c @ x - 1) <= 1e-9)
    _require(abs(convexity_ratio(tri, np.ones(4), np.eye(4)[0]) - 0.25) <= 1e-9)
    kappa = estimate_kappa(tri, 100, seed=int(rng.integers(2**32)))
    _require(kappa > 0)
    return f"orthant identities hold; kappa_hat = {kappa:.4f}"


def check_smoothing(rng) -> str:
    for kappa in (0.25, 0.5, 0.75):
        cap = build_cap(kappa)
        x, y = rng.uniform(0.01, 10, size=(2, 500))
        m = cap.m(x, y)
        outside = (x <= kappa * y) | (y <= kappa * x)
        _require(np.array_equal(m[outside], np.minimum(x, y)[outside]))
        _require(np.all(m <= np.minimum(x, y)))
    return "m equals min outside the band"


def check_hilbert(rng) -> str:
    interval = ConvexBody.from_halfspaces([[1.0], [-1.0]], [1.0, 1.0], [[-1.0], [1.0]])
    d = hilbert_distance(interval, [0.0], [0.5])
    _require(abs(d - np.log(3)) <= 1e-12)
    return f"d(0, 1/2) on (-1, 1) = {d:.15f}"


def check_cusps(rng) -> str:
    for fam in (CuspFamily("C0"), CuspFamily("C1"), CuspFamily("C2", 0.7), CuspFamily("C3", 1.0, 2.0)):
        s1, t1, s2, t2 = rng.uniform(-1, 1, 4)
        lhs = fam.generator(s1, t1) @ fam.generator(s2, t2)
        _require(np.abs(lhs - fam.generator(s1 + s2, t1 + t2)).max() <= 1e-10)
        rep = fam.lattice()
        d = weight_decomposition(rep)
        for w in d.weights:
            a = radial_flow_for_weight(d, w).generator_A
            sv = np.linalg.svd(a, compute_uv=False)
            _require(sv[1] <= 1e-10 * sv[0])
    c0 = orbit_certificate(translation_group(CuspFamily("C0").lattice()), [0, 0, 0, 1.0])
    c3 = orbit_certificate(translation_group(CuspFamily("C3", 1.0, 2.0).lattice()), np.ones(4))
    flat = orbit_certificate(translation_group(CuspFamily("C3", 1.0, 2.0).lattice()), [1, 1, 0, 1.0])
    _require((c0.verdict, c3.verdict, flat.verdict) == ("strictly_convex", "strictly_convex", "flat"))
    return "homomorphisms, rank-one flows and certificates hold"


def check_deform(rng) -> str:
    const = deform_path_check(constant_path(), 3)
    _require(np.all(const.deltas() == 0))
    alpha = deform_path_check(alpha_path(), 5)
    _require(all(s.ok for s in alpha.samples))
    rot = deform_path_check(rotation_path(), 11)
    _require(rot.samples[rot.first_failure].stage_reached == "vfg")
    return f"rotation path first fails VFG at t = {rot.samples[rot.first_failure].t:.2f}"


CHECKS: list[tuple[str, Callable]] = [
    ("exp_log", check_exp_log),
    ("benzecri", check_benzecri),
    ("charfn", check_charfn),
    ("smoothing", check_smoothing),
    ("hilbert", check_hilbert),
    ("cusps", check_cusps),
    ("deform", check_deform),
]


def run_selftest(seed: int = 0) -> dict:
    results = []
    for i, (name, fn) in enumerate(CHECKS):
        rng = _rng(seed + i)
        try:
            detail = fn(rng)
            ok = True
        except AssertionError as exc:
            ok, detail = False, f"assertion failed: {exc}"
        except Exception as exc:  # a crash in one check is reported, not raised
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append({"name": name, "ok": ok, "detail": detail})
    return {"ok": all(r["ok"] for r in results), "checks": results}
