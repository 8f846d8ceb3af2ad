import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm, logm
from scipy.optimize import linprog

from convexproj.cusps import (
    CuspFamily,
    CuspRep,
    DeformPath,
    GridSpec,
    RadialFlow,
    alpha_path,
    build_cusp_domain,
    constant_path,
    cusp_generator,
    deform_path_check,
    domain_hilbert_distance,
    exhaustion_function,
    exhaustion_values,
    flow_time,
    flow_time_raw,
    flow_times,
    orbit_certificate,
    radial_flow_for_weight,
    rotation_path,
    translation_group,
    vfg_test,
    weight_decomposition,
)
from convexproj.errors import (
    BadParams,
    FlowlineMisses,
    NotEGroup,
    NotLieClosed,
    NotStrictlyConvex,
    NotVFG,
    UnknownWeight,
    WrongDimension,
)
from convexproj.projlinalg import elementary

E = elementary
FAMILIES = [CuspFamily("C0"), CuspFamily("C1"), CuspFamily("C2", 0.7), CuspFamily("C3", 0.5, 1.5)]


def c0_lattice():
    return CuspFamily("C0").lattice()


def paraboloid_distance(a, b):
    # exact Hilbert distance in {x1 > (x2^2 + x3^2) / 2} from the chord's quadratic
    v = b - a
    qa = -0.5 * (v[1:] @ v[1:])
    qb = v[0] - a[1:] @ v[1:]
    qc = a[0] - 0.5 * (a[1:] @ a[1:])
    if qa == 0:
        roots = [-qc / qb]
    else:
        disc = np.sqrt(qb * qb - 4 * qa * qc)
        roots = [(-qb - disc) / (2 * qa), (-qb + disc) / (2 * qa)]
    lo = max([r for r in roots if r < 0], default=-np.inf)
    hi = min([r for r in roots if r > 1], default=np.inf)
    return np.log1p(-1 / lo) - np.log1p(-1 / hi)


def paraboloid_points(rng, count, depth=(0.2, 5.0)):
    yz = rng.uniform(-1.5, 1.5, size=(count, 2))
    d = rng.uniform(*depth, size=count)
    return np.column_stack([d + 0.5 * (yz**2).sum(axis=1), yz])


# ---------------------------------------------------------------------------
# families


def test_family_examples():
    np.testing.assert_array_equal(cusp_generator(CuspFamily("C0"), 0, 0), np.eye(4))
    g = cusp_generator(CuspFamily("C3", 1.0, 2.0), 0.3, -0.4)
    np.testing.assert_allclose(np.diag(g), [np.exp(0.3), np.exp(-0.4), np.exp(-0.3 + 0.8), 1.0], rtol=1e-15)
    assert np.count_nonzero(g - np.diag(np.diag(g))) == 0
    c1 = CuspFamily("C1")
    s1, t1, s2, t2 = 0.4, 1.3, -0.2, 0.7
    prod = cusp_generator(c1, s1, t1) @ cusp_generator(c1, s2, t2)
    assert prod[1, 3] == pytest.approx(0.5 * t1**2 - s1 + t1 * t2 + 0.5 * t2**2 - s2, abs=1e-14)
    assert prod[1, 3] == pytest.approx(0.5 * (t1 + t2) ** 2 - (s1 + s2), abs=1e-14)


def test_bad_params():
    for args in [("C3", 2.0, 1.0), ("C3", 0.0, 1.0), ("C3", -1.0, 1.0), ("C2", 0.0), ("C2", -1.0), ("C4",), ("C0", 1.0)]:
        with pytest.raises(BadParams):
            CuspFamily(*args)
    CuspFamily("C3", 1.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from(FAMILIES),
    st.floats(-2, 2),
    st.floats(-2, 2),
    st.floats(-2, 2),
    st.floats(-2, 2),
)
def test_family_homomorphism(fam, s1, t1, s2, t2):
    lhs = fam.generator(s1, t1) @ fam.generator(s2, t2)
    rhs = fam.generator(s1 + s2, t1 + t2)
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(1.0, np.abs(rhs).max())


def test_rep_json_round_trip():
    rep = CuspFamily("C2", 0.7).lattice()
    back = CuspRep.from_json(rep.to_json())
    assert rep.to_json()["dim"] == 3
    for a, b in zip(rep.generators, back.generators):
        np.testing.assert_array_equal(a, b)
    with pytest.raises(BadParams):
        CuspRep.from_json({"dim": 2, "generators": rep.to_json()["generators"]})


# ---------------------------------------------------------------------------
# VFG


def rotation_block(angle, size=4):
    g = np.eye(size)
    c, s = np.cos(angle), np.sin(angle)
    g[:2, :2] = [[c, -s], [s, c]]
    return g


def test_vfg_examples():
    for fam in FAMILIES:
        v = vfg_test(fam.lattice(), 64)
        assert v.ok and v.witness == 1
    assert not vfg_test([rotation_block(1.0)], 64)
    v = vfg_test([rotation_block(np.pi / 2)], 64)
    assert v.ok and v.witness == 2
    v = vfg_test([rotation_block(2 * np.pi / 3), np.diag([1, 1, 2.0, 3.0])], 64)
    assert v.witness == 3
    with pytest.raises(ValueError):
        vfg_test([np.eye(4)], 0)


# ---------------------------------------------------------------------------
# weights


def test_weights_c3():
    d = weight_decomposition(CuspFamily("C3", 1.0, 2.0).lattice())
    chars = sorted(tuple(np.round(w.character, 12)) for w in d.weights)
    e = np.e
    expected = sorted(tuple(np.round(c, 12)) for c in [(e, 1.0), (1.0, e), (1 / e, e**-2), (1.0, 1.0)])
    assert chars == expected
    assert all(w.dim == 1 for w in d.weights)
    assert d.weights[0].character == pytest.approx((1.0, 1.0))


def test_weights_c0_c1():
    d = weight_decomposition(c0_lattice())
    assert len(d.weights) == 1 and d.weights[0].dim == 4
    d = weight_decomposition(CuspFamily("C1").lattice())
    dims = {tuple(np.round(w.character, 10)): w.dim for w in d.weights}
    assert dims == {(1.0, 1.0): 3, (round(np.e, 10), 1.0): 1}


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.tag)
def test_weight_spaces_are_generalized_eigenspaces(fam):
    rep = fam.lattice([(0.7, -0.3), (0.2, 0.9)])
    d = weight_decomposition(rep)
    assert sum(w.dim for w in d.weights) == 4
    for w in d.weights:
        for g, c in zip(rep.generators, w.character):
            resid = np.linalg.matrix_power(g - c * np.eye(4), 4) @ w.basis
            assert np.linalg.norm(resid) <= 1e-8
    assert np.linalg.matrix_rank(d.block_matrix()) == 4


def test_weights_of_conjugated_rep():
    rng = np.random.default_rng(3)
    p = rng.normal(size=(4, 4)) + 3 * np.eye(4)
    rep = CuspFamily("C2", 1.3).lattice()
    conj = CuspRep([p @ g @ np.linalg.inv(p) for g in rep.generators])
    a = weight_decomposition(rep)
    b = weight_decomposition(conj)
    assert [w.dim for w in a.weights] == [w.dim for w in b.weights]
    for wa, wb in zip(a.weights, b.weights):
        assert wa.character == pytest.approx(wb.character, rel=1e-8)


def test_weights_reject_non_vfg():
    with pytest.raises(NotVFG):
        weight_decomposition([rotation_block(1.0)])


# ---------------------------------------------------------------------------
# translation groups


def test_translation_group_c0():
    T = translation_group(c0_lattice())
    assert T.dim_T == 2
    a = E(1, 2, 4) + E(2, 4, 4)
    b = E(1, 3, 4) + E(3, 4, 4)
    span = np.array([m.ravel() for m in T.lie_basis])
    for x in (a, b):
        assert np.linalg.norm(x.ravel() - span.T @ (span @ x.ravel())) <= 1e-12
    np.testing.assert_allclose(T.coordinate_basis[0], a, atol=1e-15)
    np.testing.assert_allclose(T.coordinate_basis[1], b, atol=1e-15)
    rng = np.random.default_rng(0)
    for s, t in rng.uniform(-3, 3, size=(20, 2)):
        np.testing.assert_allclose(T.element([s, t]), cusp_generator(CuspFamily("C0"), s, t), atol=1e-12)
        np.testing.assert_allclose(logm(cusp_generator(CuspFamily("C0"), s, t)).real, s * a + t * b, atol=1e-9)


def test_translation_group_c3():
    T = translation_group(CuspFamily("C3", 1.0, 1.0).lattice())
    assert T.dim_T == 2
    for m in T.lie_basis:
        np.testing.assert_allclose(m, np.diag(np.diag(m)), atol=1e-15)
    fam = CuspFamily("C3", 1.0, 1.0)
    np.testing.assert_allclose(T.element([0.3, -1.2]), fam.generator(0.3, -1.2), rtol=1e-13)
    assert T.closure_residual <= 1e-8 and T.roundtrip_residual <= 1e-9


def test_translation_group_errors():
    with pytest.raises(NotEGroup):
        translation_group([np.diag([-2.0, 1.0, 1.0, 1.0])])
    with pytest.raises(NotLieClosed):
        translation_group([expm(E(1, 2, 4)), expm(E(2, 3, 4))])


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(FAMILIES), st.integers(0, 2**32 - 1))
def test_translation_group_round_trip(fam, seed):
    rng = np.random.default_rng(seed)
    periods = rng.uniform(-1.5, 1.5, size=(3, 2))
    rep = fam.lattice(periods)
    T = translation_group(rep)
    assert T.dim_T == np.linalg.matrix_rank(periods)
    for g, x in zip(rep.generators, T.generator_logs):
        np.testing.assert_allclose(expm(x), g, atol=1e-9 * max(1.0, np.abs(g).max()))


# ---------------------------------------------------------------------------
# radial flows


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.tag)
def test_radial_flows(fam):
    rep = fam.lattice()
    d = weight_decomposition(rep)
    for w in d.weights:
        flow = radial_flow_for_weight(d, w)
        a = flow.generator_A
        s = np.linalg.svd(a, compute_uv=False)
        assert s[1] <= 1e-10 * s[0]
        assert flow.kind == ("parabolic" if w.dim >= 2 else "hyperbolic")
        if flow.kind == "parabolic":
            np.testing.assert_allclose(a @ a, 0, atol=1e-12)
            assert abs(flow.stationary_hyperplane @ flow.center) <= 1e-10
        else:
            np.testing.assert_allclose(a @ a, a, atol=1e-12)
        phi = expm(a)
        np.testing.assert_allclose(flow.at(1.0), phi, atol=1e-12)
        for g in rep.generators:
            assert np.linalg.norm(phi @ g - g @ phi) <= 1e-8 * np.linalg.norm(g)
        for other in d.weights:
            if other is not w:
                np.testing.assert_allclose(a @ other.basis, 0, atol=1e-12)


def test_c0_flow_is_e14():
    d = weight_decomposition(c0_lattice())
    flow = radial_flow_for_weight(d, d.weights[0])
    np.testing.assert_allclose(flow.generator_A, E(1, 4, 4), atol=1e-15)


def test_hyperbolic_flow_is_diagonal_exp():
    d = weight_decomposition(CuspFamily("C3", 1.0, 2.0).lattice())
    flow = radial_flow_for_weight(d, (np.e, 1.0))
    np.testing.assert_allclose(flow.at(0.5), np.diag([np.exp(0.5), 1, 1, 1]), atol=1e-14)
    with pytest.raises(UnknownWeight):
        radial_flow_for_weight(d, (2.0, 2.0))


# ---------------------------------------------------------------------------
# certificates


def test_certificate_c0():
    cert = orbit_certificate(translation_group(c0_lattice()), [0, 0, 0, 1.0])
    assert cert.verdict == "strictly_convex"
    np.testing.assert_allclose(cert.Q, np.eye(2), atol=1e-7)


@pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (0.5, 2.0), (2.0, 3.5), (3.0, 3.0)])
def test_certificate_c3_closed_form(alpha, beta):
    cert = orbit_certificate(translation_group(CuspFamily("C3", alpha, beta).lattice()), np.ones(4))
    assert cert.verdict == "strictly_convex"
    v = np.array([alpha, beta])
    expected = (np.diag(v) + np.outer(v, v)) / np.linalg.norm([alpha, beta, 1.0])
    np.testing.assert_allclose(cert.Q, expected, atol=1e-6)


def test_certificate_flat_and_errors():
    T = translation_group(CuspFamily("C3", 1.0, 2.0).lattice())
    cert = orbit_certificate(T, [1, 1, 0, 1.0])
    assert cert.verdict == "flat"
    np.testing.assert_allclose(cert.Q, 0, atol=1e-6)
    with pytest.raises(WrongDimension):
        orbit_certificate(T, [1, 1, 1.0])
    T1 = translation_group([cusp_generator(CuspFamily("C0"), 1, 0)])
    with pytest.raises(WrongDimension):
        orbit_certificate(T1, [0, 0, 0, 1.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["C0", "C3"]))
def test_certificate_verdict_is_basis_invariant(seed, tag):
    rng = np.random.default_rng(seed)
    fam = CuspFamily("C0") if tag == "C0" else CuspFamily("C3", 1.0, 2.0)
    T = translation_group(fam.lattice())
    m = rng.normal(size=(2, 2))
    while abs(np.linalg.det(m)) < 0.3:
        m = rng.normal(size=(2, 2))
    basis = np.einsum("ij,jkl->ikl", m, np.array(T.coordinate_basis))
    x = [0, 0, 0, 1.0] if tag == "C0" else np.ones(4)
    a = orbit_certificate(T, x)
    b = orbit_certificate(T, x, basis=basis)
    assert a.verdict == b.verdict == "strictly_convex"
    # Q transforms by congruence under the change of basis
    np.testing.assert_allclose(b.Q, m @ a.Q @ m.T, atol=1e-5 * max(1.0, np.abs(b.Q).max()))


# ---------------------------------------------------------------------------
# domains


def is_extreme_lp(points, i):
    others = np.delete(points, i, axis=0)
    a_eq = np.vstack([others.T, np.ones(len(others))])
    b_eq = np.concatenate([points[i], [1.0]])
    res = linprog(np.zeros(len(others)), A_eq=a_eq, b_eq=b_eq, bounds=(0, None))
    return res.status == 2  # infeasible: not a convex combination of the others


def test_domain_c0():
    dom = build_cusp_domain(c0_lattice(), [0, 0, 0, 1.0])
    pts = dom.boundary_samples
    assert len(pts) == 441
    np.testing.assert_allclose(pts[:, 0], 0.5 * (pts[:, 1] ** 2 + pts[:, 2] ** 2), atol=1e-8)
    assert len(dom.hull.vertices) == 441
    assert dom.invariance_residual <= 1e-8
    np.testing.assert_allclose(dom.flow.generator_A, -E(1, 4, 4), atol=1e-15)
    assert dom.flow.kind == "parabolic"


def test_domain_samples_are_extreme_by_lp():
    dom = build_cusp_domain(CuspFamily("C3", 1.0, 2.0).lattice(), np.ones(4), GridSpec(-1.0, 1.0, 7))
    pts = dom.boundary_samples
    assert all(is_extreme_lp(pts, i) for i in range(len(pts)))
    assert dom.flow.kind == "hyperbolic"
    np.testing.assert_allclose(dom.flow.generator_A, E(4, 4, 4), atol=1e-15)


def test_domain_rejects_flat_orbit():
    with pytest.raises(NotStrictlyConvex):
        build_cusp_domain(CuspFamily("C3", 1.0, 2.0).lattice(), [1, 1, 0, 1.0])


# ---------------------------------------------------------------------------
# flow time and exhaustion


def test_flow_time_flat_example():
    # translations fixing the plane x1 = 1, flow x -> x - t e1
    T = translation_group([np.eye(4) + E(2, 4, 4), np.eye(4) + E(3, 4, 4)])
    a = -E(1, 4, 4)
    flow = RadialFlow(a, (1.0, 1.0), np.eye(4)[0], np.eye(4)[3], "parabolic")
    rng = np.random.default_rng(0)
    ys = rng.uniform(-3, 3, size=(50, 3))
    np.testing.assert_allclose(flow_time_raw(T, flow, [1, 0, 0, 1.0], ys), ys[:, 0] - 1, atol=1e-12)


def test_flow_time_c0_closed_form_and_equivariance():
    dom = build_cusp_domain(c0_lattice(), [0, 0, 0, 1.0])
    rng = np.random.default_rng(1)
    ys = paraboloid_points(rng, 200)
    t = flow_times(dom, ys)
    np.testing.assert_allclose(t, ys[:, 0] - 0.5 * (ys[:, 1:] ** 2).sum(axis=1), atol=1e-9)
    assert flow_time(dom, dom.boundary_samples[17]) == pytest.approx(0.0, abs=1e-12)
    for y, ty in zip(ys[:20], t[:20]):
        s = rng.uniform(-2, 2)
        moved = dom.flow.at(s) @ np.append(y, 1.0)
        assert flow_time(dom, moved) == pytest.approx(ty - s, abs=1e-9)


def test_flow_time_c3_and_miss():
    dom = build_cusp_domain(CuspFamily("C3", 1.0, 2.0).lattice(), np.ones(4))
    # radial flow toward the origin in the chart; the surface is x3 = 1 / (x1 x2^2)
    for y in ([2.0, 2.0, 2.0], [1.5, 0.7, 3.0]):
        lam = np.prod(np.array(y) ** [1, 2, 1]) ** 0.25
        assert flow_time(dom, y) == pytest.approx(np.log(lam), abs=1e-10)
    with pytest.raises(FlowlineMisses):
        flow_time(dom, [-1.0, 1.0, 1.0])


def test_exhaustion_c0():
    dom = build_cusp_domain(c0_lattice(), [0, 0, 0, 1.0])
    tau0 = 0.5
    # point on the reference leaf, and points above it
    assert exhaustion_function(dom, [tau0 + 0.5 * (0.3**2 + 0.4**2), 0.3, 0.4], tau0) == pytest.approx(0, abs=1e-9)
    assert exhaustion_function(dom, [0.1, 0.0, 0.0], tau0) == 0.0
    for tau1 in (0.7, 2.0, 9.0):
        y = np.array([tau1 + 0.5 * (1.1**2 + 0.2**2), 1.1, -0.2])
        # leaf point on the same flowline, then the Hilbert distance on that line
        z = y - (tau1 - tau0) * np.array([1.0, 0, 0])
        expected = paraboloid_distance(y, z)
        assert exhaustion_function(dom, y, tau0) == pytest.approx(expected, abs=1e-6)
        assert expected == pytest.approx(np.log(tau1 / tau0), abs=1e-9)


def test_exhaustion_is_one_lipschitz():
    dom = build_cusp_domain(c0_lattice(), [0, 0, 0, 1.0])
    rng = np.random.default_rng(5)
    a = paraboloid_points(rng, 1000, (0.05, 8.0))
    b = a + rng.normal(size=a.shape) * rng.choice([0.01, 0.3, 2.0], size=(1000, 1))
    inside = b[:, 0] > 0.5 * (b[:, 1:] ** 2).sum(axis=1) + 1e-3
    a, b = a[inside], b[inside]
    fa = exhaustion_values(dom, a, 0.5)
    fb = exhaustion_values(dom, b, 0.5)
    d = np.array([paraboloid_distance(p, q) for p, q in zip(a, b)])
    assert len(d) > 700
    assert np.all(np.abs(fa - fb) <= d * (1 + 1e-6) + 1e-12)


def test_domain_hilbert_distance_matches_paraboloid():
    dom = build_cusp_domain(c0_lattice(), [0, 0, 0, 1.0])
    rng = np.random.default_rng(8)
    pts = paraboloid_points(rng, 20)
    for a, b in zip(pts[:10], pts[10:]):
        assert domain_hilbert_distance(dom, a, b) == pytest.approx(paraboloid_distance(a, b), rel=1e-8)
    up = np.array([3.0, 0.2, 0.1])
    assert domain_hilbert_distance(dom, up, up + [2.0, 0, 0]) == pytest.approx(paraboloid_distance(up, up + [2.0, 0, 0]))


# ---------------------------------------------------------------------------
# deformation paths


def rotation_oracle_first_failure(ts, angle=1.0, power_bound=64):
    # eigenvalues of the 2x2 (1,4) block in closed form
    for i, t in enumerate(ts):
        a = (1 - t) * np.e + t * np.cos(angle)
        d = (1 - t) * 1.0 + t * np.cos(angle)
        b, c = -t * np.sin(angle), t * np.sin(angle)
        disc = (a - d) ** 2 + 4 * b * c
        if disc >= 0:
            continue
        theta = np.arctan2(np.sqrt(-disc) / 2, (a + d) / 2)
        if all(abs(np.sin(m * theta)) > 1e-6 for m in range(1, power_bound + 1)):
            return i
    return None


def test_constant_path_zero_deltas():
    rep = deform_path_check(constant_path(), 6)
    assert all(s.ok for s in rep.samples)
    np.testing.assert_array_equal(rep.deltas(), 0.0)
    np.testing.assert_array_equal(rep.deltas("hull"), 0.0)


def test_alpha_path_interpolates_in_lie_algebra():
    path = alpha_path()
    assert path.logarithmic
    np.testing.assert_allclose(path.at(0.3)[0], CuspFamily("C3", 1.3, 2.0).generator(1, 0), rtol=1e-13)


def test_rotation_path_flags_vfg():
    ts = np.linspace(0, 1, 11)
    path = rotation_path()
    assert not path.logarithmic
    rep = deform_path_check(path, 11)
    first = rep.first_failure
    assert first == rotation_oracle_first_failure(ts)
    assert rep.samples[first].stage_reached == "vfg"
    assert all(s.stage_reached != "vfg" for s in rep.samples[:first])


def test_deform_reports_certificate_failures():
    path = DeformPath([0.0, 1.0], [CuspFamily("C3", 1.0, 2.0).lattice().generators] * 2, [1, 1, 0, 1.0])
    rep = deform_path_check(path, 3)
    assert [s.stage_reached for s in rep.samples] == ["certificate"] * 3
    assert np.all(np.isnan(rep.deltas()))


def test_path_json_round_trip_and_errors():
    path = rotation_path()
    back = DeformPath.from_json(path.to_json())
    np.testing.assert_array_equal(back.at(0.37)[0], path.at(0.37)[0])
    with pytest.raises(BadParams):
        DeformPath([1.0, 0.0], [[np.eye(4)], [np.eye(4)]])
    with pytest.raises(BadParams):
        deform_path_check(path, 1)
