"""VFG testing, weight decompositions, translation groups and radial flows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NoCommonFlag, NotEGroup, NotEMatrix, NotLieClosed, NotVFG, UnknownWeight
from ..projlinalg import (
    eigenvalues,
    is_real,
    mat_exp,
    mat_log_e,
    simultaneous_upper_triangularize,
)
from .families import CuspRep

WEIGHT_TOL = 1e-8
CLOSURE_TOL = 1e-8
ROUNDTRIP_TOL = 1e-9


def _generators(rep) -> list[np.ndarray]:
    if isinstance(rep, CuspRep):
        return list(rep.generators)
    return [np.asarray(g, dtype=float) for g in rep]


# ---------------------------------------------------------------------------
# VFG


@dataclass(frozen=True)
class VFGVerdict:
    ok: bool
    witness: int | None
    power_bound: int

    def __bool__(self) -> bool:
        return self.ok


def vfg_test(rep, power_bound: int = 64) -> VFGVerdict:
    """Smallest ``m <= power_bound`` making every generator's m-th power real-spectrum.

    Eigenvalues of ``g**m`` are the m-th powers of those of ``g``, so the
    spectrum is computed once per generator.
    """
    if power_bound < 1:
        raise ValueError("power_bound must be >= 1")
    spectra = [eigenvalues(g) for g in _generators(rep)]
    for m in range(1, power_bound + 1):
        if all(is_real(v**m) for vals in spectra for v in vals):
            return VFGVerdict(True, m, power_bound)
    return VFGVerdict(False, None, power_bound)


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class Weight:
    """A joint character with its generalized weight space ``V(lambda)``."""

    character: tuple  # value on each generator
    basis: np.ndarray  # columns span V(lambda), ordered along a flag

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def size(self) -> float:
        return float(sum(abs(np.log(abs(c))) for c in self.character))

    def to_json(self) -> dict:
        return {"character": [float(c) for c in self.character], "dim": self.dim, "basis": self.basis.T.tolist()}


@dataclass(frozen=True)
class WeightDecomposition:
    generators: tuple
    conjugator: np.ndarray
    weights: tuple

    def find(self, character) -> Weight:
        char = np.asarray(character, dtype=float)
        for w in self.weights:
            if len(w.character) == len(char) and np.allclose(w.character, char, rtol=WEIGHT_TOL, atol=WEIGHT_TOL):
                return w
        raise UnknownWeight(f"{char.tolist()} is not a weight")

    def block_matrix(self) -> np.ndarray:
        """Columns: the weight-space bases side by side."""
        return np.hstack([w.basis for w in self.weights])

    def to_json(self) -> dict:
        return {"conjugator": self.conjugator.tolist(), "weights": [w.to_json() for w in self.weights]}


def _group_characters(diags: np.ndarray) -> list[list[int]]:
    """Index classes of equal columns in ``diags`` (generators x positions)."""
    groups: list[list[int]] = []
    for i in range(diags.shape[1]):
        for grp in groups:
            ref = diags[:, grp[0]]
            if np.all(np.abs(diags[:, i] - ref) <= WEIGHT_TOL * np.maximum(1.0, np.abs(ref))):
                grp.append(i)
                break
        else:
            groups.append([i])
    return groups


def _flag_basis(gens: list[np.ndarray], basis: np.ndarray) -> np.ndarray:
    """Reorder an orthonormal basis of an invariant subspace along a common flag."""
    if basis.shape[1] == 1:
        return basis
    restricted = [basis.T @ g @ basis for g in gens]
    p, _ = simultaneous_upper_triangularize(restricted)
    return basis @ p


def weight_decomposition(rep) -> WeightDecomposition:
    """Joint generalized eigenspaces of commuting generators with real spectra."""
    gens = _generators(rep)
    verdict = vfg_test(gens, 1)
    if not verdict:
        raise NotVFG("some generator has non-real eigenvalues")
    try:
        p, tri = simultaneous_upper_triangularize(gens)
    except NoCommonFlag as exc:
        raise NotVFG(str(exc)) from exc
    size = gens[0].shape[0]
    diags = np.array([np.diag(t) for t in tri])
    weights = []
    for grp in _group_characters(diags):
        char = diags[:, grp].mean(axis=1)
        stack = np.vstack([np.linalg.matrix_power(g - c * np.eye(size), size) for g, c in zip(gens, char)])
        _, s, vt = np.linalg.svd(stack)
        basis = vt[size - len(grp) :].T
        for g, c in zip(gens, char):
            resid = np.linalg.matrix_power(g - c * np.eye(size), size) @ basis
            if np.linalg.norm(resid) > WEIGHT_TOL * max(1.0, np.linalg.norm(g)) ** size:
                raise NotVFG("generalized weight space did not split off cleanly")
        weights.append(Weight(tuple(float(c) for c in char), _flag_basis(gens, basis)))
    weights.sort(key=lambda w: (round(w.size, 10), w.character))
    return WeightDecomposition(tuple(gens), p, tuple(weights))


# ---------------------------------------------------------------------------
# translation group


@dataclass(frozen=True)
class TranslationGroup:
    """The connected abelian group ``exp(span log Gamma)``.

    ``lie_basis`` is an orthonormal basis (Frobenius inner product) of the span
    of the generator logarithms; ``coordinate_basis`` is a maximal independent
    subset of those logarithms, whose coordinates are lattice coordinates.
    """

    lie_basis: tuple
    coordinate_basis: tuple
    generator_logs: tuple
    closure_residual: float
    roundtrip_residual: float

    @property
    def dim_T(self) -> int:
        return len(self.lie_basis)

    @property
    def size(self) -> int:
        return self.lie_basis[0].shape[0]

    def element(self, coords, basis: str = "coordinate") -> np.ndarray:
        mats = self.coordinate_basis if basis == "coordinate" else self.lie_basis
        x = np.tensordot(np.asarray(coords, dtype=float), np.array(mats), axes=(-1, 0))
        return mat_exp(x)

    def coordinates(self, x, basis: str = "coordinate") -> np.ndarray:
        """Least-squares coordinates of a Lie algebra element in a basis."""
        mats = self.coordinate_basis if basis == "coordinate" else self.lie_basis
        a = np.array([m.ravel() for m in mats]).T
        return np.linalg.lstsq(a, np.asarray(x, dtype=float).ravel(), rcond=None)[0]

    def to_json(self) -> dict:
        return {
            "dim_T": self.dim_T,
            "lie_basis": [m.tolist() for m in self.lie_basis],
            "coordinate_basis": [m.tolist() for m in self.coordinate_basis],
            "closure_residual": self.closure_residual,
            "roundtrip_residual": self.roundtrip_residual,
        }


def _span(mats: list[np.ndarray]) -> np.ndarray:
    a = np.array([m.ravel() for m in mats])
    _, s, vt = np.linalg.svd(a, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0])))
    return vt[:rank]


def translation_group(rep) -> TranslationGroup:
    gens = _generators(rep)
    size = gens[0].shape[0]
    logs = []
    for g in gens:
        try:
            logs.append(mat_log_e(g))
        except NotEMatrix as exc:
            raise NotEGroup(str(exc)) from exc
    rows = _span(logs)
    if len(rows) == 0:
        raise NotEGroup("all generators are trivial")
    lie_basis = tuple(r.reshape(size, size) for r in rows)
    # greedy independent subset of the logs, in generator order
    chosen: list[np.ndarray] = []
    for x in logs:
        if len(_span(chosen + [x])) > len(chosen):
            chosen.append(x)
    closure = 0.0
    for i, a in enumerate(lie_basis):
        for b in lie_basis[i + 1 :]:
            br = (a @ b - b @ a).ravel()
            resid = br - rows.T @ (rows @ br)
            closure = max(closure, float(np.linalg.norm(resid)))
    if closure > CLOSURE_TOL:
        raise NotLieClosed(f"bracket leaves the span by {closure:.3g}")
    roundtrip = 0.0
    for g, x in zip(gens, logs):
        coords = rows @ x.ravel()
        back = mat_exp((rows.T @ coords).reshape(size, size))
        roundtrip = max(roundtrip, float(np.linalg.norm(back - g) / max(1.0, np.linalg.norm(g))))
    if roundtrip > ROUNDTRIP_TOL:
        raise NotEGroup(f"exp of the span misses a generator by {roundtrip:.3g}")
    return TranslationGroup(lie_basis, tuple(chosen), tuple(logs), closure, roundtrip)


# ---------------------------------------------------------------------------
# radial flows


@dataclass(frozen=True)
class RadialFlow:
    generator_A: np.ndarray
    weight: tuple
    center: np.ndarray
    stationary_hyperplane: np.ndarray
    kind: str  # "parabolic" or "hyperbolic"

    def at(self, t) -> np.ndarray:
        """``exp(t A)`` in closed form: ``I + t A`` or ``I + (e^t - 1) A``."""
        a = self.generator_A
        size = a.shape[0]
        t = np.asarray(t, dtype=float)
        coef = t if self.kind == "parabolic" else np.expm1(t)
        return np.eye(size) + coef[..., None, None] * a

    def reversed(self) -> "RadialFlow":
        """The same flow run backwards, as a flow with generator ``-A``."""
        return RadialFlow(-self.generator_A, self.weight, self.center, self.stationary_hyperplane, self.kind)

    def to_json(self) -> dict:
        return {
            "A": self.generator_A.tolist(),
            "weight": [float(c) for c in self.weight],
            "center": self.center.tolist(),
            "stationary_hyperplane": self.stationary_hyperplane.tolist(),
            "kind": self.kind,
        }


def _clean(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    out[np.abs(out) <= 1e-14 * max(1.0, np.abs(a).max())] = 0.0
    return out


def radial_flow_for_weight(decomp: WeightDecomposition, weight) -> RadialFlow:
    """Rank-one generator ``E_{1m}`` in flag coordinates of ``V(weight)``.

    Every generator is block-triangular in the weight-space basis, so ``A``
    commutes with it and acts as zero on the other weight spaces.  The flow is
    parabolic (``A`` nilpotent) when ``dim V >= 2`` and hyperbolic otherwise,
    where ``A`` is the projection onto ``V`` along the other weight spaces.
    Parabolic generators are signed so that their largest entry is positive.
    """
    w = weight if isinstance(weight, Weight) else decomp.find(weight)
    if w not in decomp.weights:
        w = decomp.find(w.character)
    big = decomp.block_matrix()
    inv = np.linalg.inv(big)
    start = 0
    for other in decomp.weights:
        if other is w:
            break
        start += other.dim
    first = start
    last = start + w.dim - 1
    a = np.outer(big[:, first], inv[last])
    if w.dim >= 2:
        a = a / np.abs(a).max()
        if a.ravel()[np.argmax(np.abs(a))] < 0:
            a = -a
    a = _clean(a)
    u, s, vt = np.linalg.svd(a)
    center = u[:, 0] if u[np.argmax(np.abs(u[:, 0])), 0] > 0 else -u[:, 0]
    hyper = vt[0] if vt[0, np.argmax(np.abs(vt[0]))] > 0 else -vt[0]
    kind = "parabolic" if w.dim >= 2 else "hyperbolic"
    return RadialFlow(a, w.character, center, hyper, kind)


def default_flow_weight(decomp: WeightDecomposition) -> Weight:
    """Weight with the largest generalized space; ties go to the first in order."""
    best = decomp.weights[0]
    for w in decomp.weights[1:]:
        if w.dim > best.dim:
            best = w
    return best
