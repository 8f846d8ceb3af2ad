"""Small-dimension real linear algebra for projective geometry.

Matrices are plain ``numpy`` arrays of shape ``(n+1, n+1)`` with ``n <= 4``;
projective points are arrays of ``n+1`` homogeneous coordinates.  Functions
that make sense on stacks (``mat_exp``) accept a leading batch axis.
"""

from __future__ import annotations


import numpy as np

from .errors import ExpOverflow, NoCommonFlag, NotEMatrix

#: an eigenvalue counts as real when ``|Im| <= REAL_TOL * (1 + |lambda|)``
REAL_TOL = 1e-8
#: relative determinant threshold for group elements
DET_TOL = 1e-12
COMMUTE_TOL = 1e-9

_EPS = np.finfo(float).eps

# degree-13 Pade coefficients and the matching scaling threshold
_PADE13 = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)
_THETA13 = 5.371920351148152


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def is_group_element(m) -> bool:
    a = as_matrix(m)
    scale = np.linalg.norm(a, 2) ** a.shape[0]
    return scale > 0 and abs(np.linalg.det(a)) > DET_TOL * scale


def elementary(i: int, j: int, size: int) -> np.ndarray:
    """Matrix unit ``E_{i,j}`` with 1-based indices."""
    e = np.zeros((size, size))
    e[i - 1, j - 1] = 1.0
    return e


# ---------------------------------------------------------------------------
# exponential


def _nilpotency_mask(x: np.ndarray) -> np.ndarray:
    k = x.shape[-1]
    p = np.linalg.matrix_power(x, k)
    norm = np.linalg.norm(x, axis=(-2, -1))
    bound = 1e-15 * np.maximum(1.0, norm) ** k
    return np.linalg.norm(p, axis=(-2, -1)) <= bound


def _expm_nilpotent(x: np.ndarray) -> np.ndarray:
    k = x.shape[-1]
    out = np.broadcast_to(np.eye(k), x.shape).copy()
    term = out.copy()
    for j in range(1, k):
        term = term @ x / j
        out += term
    return out


def _expm_pade(x: np.ndarray) -> np.ndarray:
    """Scaling-and-squaring with the degree-13 Pade approximant (stacks allowed)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 2
    if single:
        x = x[None]
    k = x.shape[-1]
    eye = np.eye(k)
    norms = np.abs(x).sum(axis=-2).max(axis=-1)
    squarings = np.zeros(len(x), dtype=int)
    big = norms > _THETA13
    squarings[big] = np.ceil(np.log2(norms[big] / _THETA13)).astype(int)
    out = np.empty_like(x)
    for s in np.unique(squarings):
        idx = squarings == s
        a = x[idx] / (2.0**s)
        b = _PADE13
        a2 = a @ a
        a4 = a2 @ a2
        a6 = a2 @ a4
        u = a @ (
            a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
            + b[7] * a6
            + b[5] * a4
            + b[3] * a2
            + b[1] * eye
        )
        v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye
        r = np.linalg.solve(v - u, v + u)
        for _ in range(int(s)):
            r = r @ r
        out[idx] = r
    return out[0] if single else out


def mat_exp(x) -> np.ndarray:
    """Matrix exponential.

    Nilpotent inputs (``X**(n+1) == 0``) use the terminating power series, so the
    unipotent cusp families come out exact; everything else goes through
    scaling and squaring.  Accepts a single matrix or a stack ``(..., k, k)``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim < 2 or x.shape[-1] != x.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("matrix has non-finite entries")
    batch_shape = x.shape[:-2]
    flat = x.reshape((-1,) + x.shape[-2:])
    if np.max(np.linalg.eigvals(flat).real, initial=-np.inf) > 700:
        raise ExpOverflow("an eigenvalue has real part > 700; exp would overflow")
    out = np.empty_like(flat)
    nil = _nilpotency_mask(flat)
    if nil.any():
        out[nil] = _expm_nilpotent(flat[nil])
    if (~nil).any():
        out[~nil] = _expm_pade(flat[~nil])
    return out.reshape(batch_shape + x.shape[-2:])


# ---------------------------------------------------------------------------
# eigenvalues


def _is_triangular(a: np.ndarray, tol: float = 0.0) -> str | None:
    scale = tol * max(1.0, np.abs(a).max())
    if np.all(np.abs(np.tril(a, -1)) <= scale):
        return "upper"
    if np.all(np.abs(np.triu(a, 1)) <= scale):
        return "lower"
    return None


def _average_clusters(vals: np.ndarray, norm: float) -> np.ndarray:
    # Eigenvalues of a perturbed k-dimensional Jordan block scatter on a
    # circle of radius ~ (eps*|A|)**(1/k); their mean is well conditioned.
    k = len(vals)
    base = max(_EPS * max(norm, 1.0), 1e-300)
    link = 100.0 * base ** (1.0 / k)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            if abs(vals[i] - vals[j]) <= link * (1 + abs(vals[i])):
                parent[find(i)] = find(j)
    out = vals.copy()
    groups: dict[int, list[int]] = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    for members in groups.values():
        m = len(members)
        if m < 2:
            continue
        cluster = vals[members]
        centre = cluster.mean()
        spread = np.abs(cluster - centre).max()
        if spread <= 100.0 * base ** (1.0 / m) * (1 + abs(centre)):
            out[members] = centre
    return out


def eigenvalues(m) -> np.ndarray:
    """Eigenvalues with multiplicity, sorted by (real part, imaginary part)."""
    a = as_matrix(m)
    if _is_triangular(a):
        vals = np.diag(a).astype(complex)
    else:
        vals = _average_clusters(np.linalg.eigvals(a).astype(complex), float(np.linalg.norm(a)))
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def is_real(value: complex, tol: float = REAL_TOL) -> bool:
    return abs(value.imag) <= tol * (1 + abs(value))


def has_real_spectrum(m) -> bool:
    return all(is_real(v) for v in eigenvalues(m))


def is_e_matrix(m) -> bool:
    return all(is_real(v) and v.real > 0 for v in eigenvalues(m))


# ---------------------------------------------------------------------------
# logarithm


def _sqrtm_db(a: np.ndarray, max_iter: int = 100) -> np.ndarray:
    """Principal square root by the product form of the Denman-Beavers iteration."""
    k = a.shape[0]
    eye = np.eye(k)
    y = a.copy()
    mk = a.copy()
    for _ in range(max_iter):
        inv = np.linalg.inv(mk)
        y = 0.5 * y @ (eye + inv)
        mk = 0.5 * (eye + 0.5 * (mk + inv))
        if np.linalg.norm(mk - eye, 1) <= 10 * _EPS:
            break
    return y


def _log_series(x: np.ndarray, terms: int | None = None) -> np.ndarray:
    """``log(I + X)`` by its power series; exact after ``k`` terms for nilpotent X."""
    k = x.shape[0]
    out = np.zeros_like(x)
    power = np.eye(k)
    limit = terms if terms is not None else 200
    for j in range(1, limit + 1):
        power = power @ x
        term = power * ((-1.0) ** (j + 1) / j)
        out += term
        if terms is None and np.linalg.norm(term, 1) <= _EPS * max(np.linalg.norm(out, 1), _EPS):
            break
    return out


def mat_log_e(m) -> np.ndarray:
    """Real logarithm of an e-matrix (all eigenvalues real and positive).

    Raises `NotEMatrix` when some eigenvalue is non-real or non-positive.
    """
    a = as_matrix(m)
    k = a.shape[0]
    bad = [v for v in eigenvalues(a) if not (is_real(v) and v.real > 0)]
    if bad:
        raise NotEMatrix(f"eigenvalues {bad} are not real and positive")
    eye = np.eye(k)
    n = a - eye
    if np.linalg.norm(np.linalg.matrix_power(n, k)) <= 1e-15 * max(1.0, np.linalg.norm(n)) ** k:
        return _log_series(n, terms=k - 1)
    r = a.copy()
    roots = 0
    while np.linalg.norm(r - eye, 1) >= 0.25:
        r = _sqrtm_db(r)
        roots += 1
        if roots > 64:
            raise NotEMatrix("square-root iteration did not approach the identity")
    return (2.0**roots) * _log_series(r - eye)


# ---------------------------------------------------------------------------
# projective action


def normalize_point(x, sphere: bool = False) -> np.ndarray:
    """Unit representative; in RP^n the first non-negligible coordinate is made positive."""
    v = np.asarray(x, dtype=float)
    norm = np.linalg.norm(v)
    if not norm > 0:
        raise ValueError("homogeneous coordinates must not all vanish")
    v = v / norm
    if not sphere:
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        if v[nz[0]] < 0:
            v = -v
    return v


def same_point(x, y, tol: float = 1e-10, sphere: bool = False) -> bool:
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    if sphere:
        return np.linalg.norm(a - b) <= tol
    return min(np.linalg.norm(a - b), np.linalg.norm(a + b)) <= tol


def act_projective(m, x, sphere: bool = False) -> np.ndarray:
    """Image of the point ``[x]`` under ``m``, as a normalized representative."""
    return normalize_point(as_matrix(m) @ np.asarray(x, dtype=float), sphere=sphere)


def to_chart(x) -> np.ndarray:
    """Affine coordinates in the chart where the last homogeneous coordinate is 1."""
    v = np.asarray(x, dtype=float)
    return v[..., :-1] / v[..., -1:]


def from_chart(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.concatenate([y, np.ones(y.shape[:-1] + (1,))], axis=-1)


def apply_to_chart(m, pts) -> np.ndarray:
    """Apply a projective map to affine points (rows); result in the same chart."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    h = from_chart(pts) @ as_matrix(m).T
    return h[:, :-1] / h[:, -1:]


# ---------------------------------------------------------------------------
# simultaneous triangularization


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def _null_space(a: np.ndarray, rel_tol: float) -> np.ndarray:
    _, s, vt = np.linalg.svd(a)
    scale = max(s[0] if len(s) else 0.0, 1.0)
    rank = int(np.sum(s > rel_tol * scale))
    basis = vt[rank:].T
    if basis.shape[1] == 0 and s[-1] <= 1e-6 * scale:
        basis = vt[-1:].T
    return basis


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    return -v if len(nz) and v[nz[0]] < 0 else v


def _common_eigenvector(mats: list[np.ndarray]) -> np.ndarray:
    d = mats[0].shape[0]
    if d == 1:
        return np.ones(1)
    for g in mats:
        scalar = g[0, 0] * np.eye(d)
        if np.linalg.norm(g - scalar) > 1e-12 * max(1.0, np.linalg.norm(g)):
            break
    else:
        return np.eye(d)[0]
    vals = eigenvalues(g)
    if not all(is_real(v) for v in vals):
        raise NoCommonFlag("a generator has non-real eigenvalues on an invariant subspace")
    reals = sorted({round(v.real, 10) for v in vals}, key=lambda v: (-abs(v), -v))
    lam = min((v.real for v in vals), key=lambda v: abs(v - reals[0]))
    space = _null_space(g - lam * np.eye(d), 1e-8)
    if space.shape[1] == 0:
        raise NoCommonFlag("no eigenvector found for a real eigenvalue")
    others = [space.T @ h @ space for h in mats]
    # invariance of the eigenspace is what commuting buys us
    for h in mats:
        resid = h @ space - space @ (space.T @ h @ space)
        if np.linalg.norm(resid) > 1e-6 * max(1.0, np.linalg.norm(h)):
            raise NoCommonFlag("eigenspace is not invariant under the other generators")
    w = _common_eigenvector(others)
    return _canonical_sign(space @ w)


def simultaneous_upper_triangularize(gens) -> tuple[np.ndarray, list[np.ndarray]]:
    """Find ``P`` with ``P^-1 g P`` upper-triangular for every generator.

    The flag is built by repeatedly extracting a common eigenvector, largest
    ``|lambda|`` first.  Inputs that are already upper-triangular are returned
    unchanged with ``P = I``.
    """
    mats = [as_matrix(g) for g in gens]
    if not mats:
        raise ValueError("need at least one generator")
    size = mats[0].shape[0]
    for i, a in enumerate(mats):
        for b in mats[i + 1 :]:
            scale = max(1.0, np.linalg.norm(a) * np.linalg.norm(b))
            if np.linalg.norm(commutator(a, b)) > COMMUTE_TOL * scale:
                raise NoCommonFlag("generators do not commute")
    if all(_is_triangular(g, 1e-12) == "upper" for g in mats):
        return np.eye(size), [g.copy() for g in mats]
    p_total = np.eye(size)
    current = [g.copy() for g in mats]
    for stage in range(size - 1):
        block = [g[stage:, stage:] for g in current]
        v = _common_eigenvector(block)
        v = v / np.linalg.norm(v)
        q, _ = np.linalg.qr(np.column_stack([v, np.eye(len(v))]))
        q = q[:, : len(v)]
        if q[:, 0] @ v < 0:
            q[:, 0] = -q[:, 0]
        step = np.eye(size)
        step[stage:, stage:] = q
        p_total = p_total @ step
        current = [step.T @ g @ step for g in current]
    return p_total, current
