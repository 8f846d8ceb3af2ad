"""Checking the cusp hypotheses along a path of holonomy representations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..convexbody import hausdorff_distance
from ..errors import BadParams, ConvexProjError
from ..projlinalg import as_matrix, is_e_matrix, mat_exp, mat_log_e
from .families import CuspRep
from .groups import translation_group, vfg_test
from .orbits import GridSpec, build_cusp_domain, orbit_certificate

STAGES = ("vfg", "translation", "certificate", "domain")


@dataclass(frozen=True)
class DeformPath:
    times: np.ndarray
    keyframes: tuple  # one tuple of generator matrices per time
    base_point: np.ndarray | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        frames = tuple(tuple(as_matrix(g) for g in f) for f in self.keyframes)
        if len(times) != len(frames) or len(times) < 1:
            raise BadParams("need one generator list per keyframe time")
        if np.any(np.diff(times) <= 0):
            raise BadParams("keyframe times must increase")
        if len({len(f) for f in frames}) != 1 or len({g.shape for f in frames for g in f}) != 1:
            raise BadParams("keyframes must have matching generator lists")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "keyframes", frames)
        if self.base_point is not None:
            object.__setattr__(self, "base_point", np.asarray(self.base_point, dtype=float))

    @property
    def logarithmic(self) -> bool:
        """Interpolate in the Lie algebra when every keyframe matrix is an e-matrix."""
        return all(is_e_matrix(g) for f in self.keyframes for g in f)

    def at(self, t: float) -> list[np.ndarray]:
        times = self.times
        t = float(np.clip(t, times[0], times[-1]))
        j = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, max(len(times) - 2, 0)))
        if len(times) == 1:
            return [g.copy() for g in self.keyframes[0]]
        w = (t - times[j]) / (times[j + 1] - times[j])
        out = []
        for a, b in zip(self.keyframes[j], self.keyframes[j + 1]):
            if w == 0.0 or np.array_equal(a, b):
                out.append(a.copy())
            elif w == 1.0:
                out.append(b.copy())
            elif self.logarithmic:
                out.append(mat_exp((1 - w) * mat_log_e(a) + w * mat_log_e(b)))
            else:
                out.append((1 - w) * a + w * b)
        return out

    def to_json(self) -> dict:
        out = {
            "keyframes": [
                {"t": float(t), "generators": [g.tolist() for g in f]} for t, f in zip(self.times, self.keyframes)
            ]
        }
        if self.base_point is not None:
            out["base_point"] = self.base_point.tolist()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "DeformPath":
        frames = data["keyframes"]
        return cls(
            [f["t"] for f in frames],
            [[np.asarray(g, dtype=float) for g in f["generators"]] for f in frames],
            data.get("base_point"),
        )


@dataclass
class SampleReport:
    t: float
    failed_stage: str | None
    error: str | None = None
    vfg_witness: int | None = None
    verdict: str | None = None
    eigenvalues: list = field(default_factory=list)
    boundary_delta: float | None = None
    hull_delta: float | None = None
    domain: object = field(default=None, repr=False)

    @property
    def stage_reached(self) -> str:
        return self.failed_stage or "complete"

    @property
    def ok(self) -> bool:
        return self.failed_stage is None

    @property
    def min_eig_Q(self) -> float:
        if not self.eigenvalues:
            return float("nan")
        return float(min(self.eigenvalues))

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "stage_reached": self.stage_reached,
            "ok": self.ok,
            "error": self.error,
            "vfg_witness": self.vfg_witness,
            "verdict": self.verdict,
            "min_eig_Q": None if not self.eigenvalues else self.min_eig_Q,
            "eigenvalues": list(self.eigenvalues),
            "boundary_delta": self.boundary_delta,
            "hull_delta": self.hull_delta,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SampleReport":
        stage = data["stage_reached"]
        return cls(
            float(data["t"]),
            None if stage == "complete" else stage,
            data.get("error"),
            data.get("vfg_witness"),
            data.get("verdict"),
            [float(e) for e in data.get("eigenvalues", [])],
            data.get("boundary_delta"),
            data.get("hull_delta"),
        )


def check_sample(gens, t: float, x, grid: GridSpec | None = None, power_bound: int = 64) -> SampleReport:
    """Run the stages in order and stop at the first failure."""
    report = SampleReport(t, None)
    verdict = vfg_test(gens, power_bound)
    report.vfg_witness = verdict.witness
    if not verdict:
        report.failed_stage = "vfg"
        report.error = f"some eigenvalue stays non-real for all powers up to {power_bound}"
        return report
    core = [np.linalg.matrix_power(g, verdict.witness) for g in gens]
    stage = "translation"
    try:
        T = translation_group(core)
        stage = "certificate"
        cert = orbit_certificate(T, x)
        report.verdict = cert.verdict
        report.eigenvalues = [float(e) for e in cert.eigenvalues]
        if cert.verdict != "strictly_convex":
            report.failed_stage = "certificate"
            report.error = f"orbit is {cert.verdict} at the base point"
            return report
        stage = "domain"
        report.domain = build_cusp_domain(CuspRep(core), x, grid)
    except (ConvexProjError, np.linalg.LinAlgError, ValueError) as exc:
        report.failed_stage = stage
        report.error = f"{type(exc).__name__}: {exc}"
    return report


@dataclass
class DeformReport:
    samples: list

    @property
    def first_failure(self) -> int | None:
        for i, s in enumerate(self.samples):
            if not s.ok:
                return i
        return None

    def deltas(self, kind: str = "boundary") -> np.ndarray:
        key = "boundary_delta" if kind == "boundary" else "hull_delta"
        vals = [getattr(s, key) for s in self.samples[1:]]
        return np.array([np.nan if v is None else v for v in vals])

    def to_json(self) -> dict:
        return {"samples": [s.to_json() for s in self.samples]}

    @classmethod
    def from_json(cls, data: dict) -> "DeformReport":
        return cls([SampleReport.from_json(s) for s in data["samples"]])

    def csv_rows(self) -> list[list]:
        rows = [["t", "stage_reached", "min_eig_Q", "hausdorff_delta"]]
        for s in self.samples:
            rows.append([s.t, s.stage_reached, s.min_eig_Q, np.nan if s.boundary_delta is None else s.boundary_delta])
        return rows


def deform_path_check(
    path: DeformPath,
    samples: int,
    x=None,
    grid: GridSpec | None = None,
    power_bound: int = 64,
) -> DeformReport:
    """Per-sample stage report plus Hausdorff deltas between consecutive domains."""
    if samples < 2:
        raise BadParams("need at least two samples")
    x = path.base_point if x is None else np.asarray(x, dtype=float)
    if x is None:
        raise BadParams("no base point given")
    ts = np.linspace(path.times[0], path.times[-1], samples)
    reports = [check_sample(path.at(t), float(t), x, grid, power_bound) for t in ts]
    for prev, cur in zip(reports, reports[1:]):
        if prev.domain is not None and cur.domain is not None:
            cur.boundary_delta = hausdorff_distance(prev.domain.boundary_samples, cur.domain.boundary_samples)
            cur.hull_delta = hausdorff_distance(prev.domain.hull, cur.domain.hull)
    return DeformReport(reports)


# ---------------------------------------------------------------------------
# reference paths


def _c3_lattice(alpha: float, beta: float) -> list[np.ndarray]:
    from .families import CuspFamily

    fam = CuspFamily("C3", alpha, beta)
    return [fam.generator(1.0, 0.0), fam.generator(0.0, 1.0)]


def constant_path(alpha: float = 1.0, beta: float = 2.0) -> DeformPath:
    gens = _c3_lattice(alpha, beta)
    return DeformPath([0.0, 1.0], [gens, gens], np.ones(4))


def alpha_path(beta: float = 2.0) -> DeformPath:
    """``C3(1 + t, beta)`` for ``t`` in ``[0, 1]``, linear in the Lie algebra."""
    return DeformPath([0.0, 1.0], [_c3_lattice(1.0, beta), _c3_lattice(2.0, beta)], np.ones(4))


def rotation_path(angle: float = 1.0, alpha: float = 1.0, beta: float = 2.0) -> DeformPath:
    """Entrywise path from ``C3`` toward a rotation in the (1, 4) plane.

    The rotation replaces the first generator's (1, 4) block; the second
    generator acts trivially on that plane, so the generators still commute.
    """
    start = _c3_lattice(alpha, beta)
    end = [g.copy() for g in start]
    c, s = np.cos(angle), np.sin(angle)
    end[0][np.ix_([0, 3], [0, 3])] = [[c, -s], [s, c]]
    return DeformPath([0.0, 1.0], [start, end], np.ones(4))
