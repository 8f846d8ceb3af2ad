"""The four families of three-dimensional generalized cusp groups.

Each family is a two-parameter abelian group of 4x4 matrices; the map
``(s, t) -> C(s, t)`` is a homomorphism from ``(R^2, +)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import BadParams
from ..projlinalg import as_matrix

TAGS = ("C0", "C1", "C2", "C3")


@dataclass(frozen=True)
class CuspFamily:
    tag: str
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.tag not in TAGS:
            raise BadParams(f"unknown family {self.tag!r}")
        if self.tag in ("C0", "C1"):
            if self.alpha is not None or self.beta is not None:
                raise BadParams(f"{self.tag} takes no parameters")
        elif self.tag == "C2":
            if self.alpha is None or self.beta is not None:
                raise BadParams("C2 takes alpha only")
            if not (np.isfinite(self.alpha) and self.alpha > 0):
                raise BadParams("C2 needs alpha > 0")
        else:
            if self.alpha is None or self.beta is None:
                raise BadParams("C3 takes alpha and beta")
            if not (np.isfinite(self.alpha) and np.isfinite(self.beta) and self.beta >= self.alpha > 0):
                raise BadParams("C3 needs beta >= alpha > 0")

    def generator(self, s: float, t: float) -> np.ndarray:
        return cusp_generator(self, s, t)

    def lattice(self, periods=((1.0, 0.0), (0.0, 1.0))) -> "CuspRep":
        """Representation generated by the family elements at the given periods."""
        return CuspRep([self.generator(s, t) for s, t in periods], family=self)

    def to_json(self) -> dict:
        out = {"tag": self.tag}
        if self.alpha is not None:
            out["alpha"] = float(self.alpha)
        if self.beta is not None:
            out["beta"] = float(self.beta)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "CuspFamily":
        return cls(data["tag"], data.get("alpha"), data.get("beta"))


def cusp_generator(fam: CuspFamily, s: float, t: float) -> np.ndarray:
    s = float(s)
    t = float(t)
    if fam.tag == "C0":
        return np.array(
            [
                [1.0, s, t, (s * s + t * t) / 2],
                [0.0, 1.0, 0.0, s],
                [0.0, 0.0, 1.0, t],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )
    if fam.tag == "C1":
        return np.array(
            [
                [np.exp(s), 0.0, 0.0, 0.0],
                [0.0, 1.0, t, t * t / 2 - s],
                [0.0, 0.0, 1.0, t],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )
    if fam.tag == "C2":
        a = fam.alpha
        return np.array(
            [
                [np.exp(s), 0.0, 0.0, 0.0],
                [0.0, np.exp(t), 0.0, 0.0],
                [0.0, 0.0, 1.0, -t - a * s],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )
    a, b = fam.alpha, fam.beta
    return np.diag([np.exp(s), np.exp(t), np.exp(-a * s - b * t), 1.0])


@dataclass(frozen=True)
class CuspRep:
    """Commuting generators of a cusp holonomy acting on ``RP^n``."""

    generators: tuple
    family: CuspFamily | None = field(default=None, compare=False)

    def __post_init__(self):
        gens = tuple(np.array(as_matrix(g)) for g in self.generators)
        if not gens:
            raise BadParams("need at least one generator")
        size = gens[0].shape[0]
        if any(g.shape != (size, size) for g in gens):
            raise BadParams("generators must share one shape")
        for g in gens:
            g.setflags(write=False)
        object.__setattr__(self, "generators", gens)

    @property
    def size(self) -> int:
        return self.generators[0].shape[0]

    @property
    def dim(self) -> int:
        return self.size - 1

    def to_json(self) -> dict:
        return {"dim": self.dim, "generators": [g.tolist() for g in self.generators]}

    @classmethod
    def from_json(cls, data: dict) -> "CuspRep":
        gens = [np.asarray(g, dtype=float) for g in data["generators"]]
        if "dim" in data and any(g.shape != (int(data["dim"]) + 1,) * 2 for g in gens):
            raise BadParams("generator shape does not match dim")
        return cls(gens)
