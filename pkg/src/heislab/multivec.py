"""Simple multivectors stored as factor lists, with Gram-determinant norms
and a Hodge dual against the fixed orientation e_1 ^ ... ^ e_{2n+1}."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space


@dataclass(frozen=True)
class Blade:
    """A simple m-vector given by its m factors (rows of length 2n+1)."""

    factors: np.ndarray

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.factors, dtype=float))
        if F.shape[0] < 1 or F.shape[0] > F.shape[1]:
            raise ValueError(f"grade must be in 1..{F.shape[1]}, got {F.shape[0]}")
        object.__setattr__(self, "factors", F)

    @property
    def grade(self) -> int:
        return self.factors.shape[0]

    @property
    def dim(self) -> int:
        return self.factors.shape[1]

    def wedge(self, other: "Blade") -> "Blade":
        if self.dim != other.dim:
            raise ValueError("ambient dimension mismatch")
        return Blade(np.vstack([self.factors, other.factors]))


def orientation_blade(dim: int) -> Blade:
    return Blade(np.eye(dim))


def blade_norm(b: Blade) -> float:
    """sqrt of the Gram determinant of the factors; 0 for dependent factors."""
    gram = b.factors @ b.factors.T
    det = np.linalg.det(gram)
    return float(np.sqrt(max(det, 0.0)))


def blade_inner(a: Blade, b: Blade) -> float:
    """Determinant of the mixed Gram matrix; grades must agree."""
    if a.grade != b.grade:
        raise ValueError(f"grade mismatch: {a.grade} vs {b.grade}")
    if a.dim != b.dim:
        raise ValueError("ambient dimension mismatch")
    return float(np.linalg.det(a.factors @ b.factors.T))


def hodge_star(b: Blade) -> Blade:
    """Signed orthogonal complement: the unique (dim - m)-vector with
    xi ^ *b = <xi, b> e for every m-vector xi, e the fixed orientation.

    The factor list is orthonormalized, completed to a positively oriented
    orthonormal basis, and the norm of b is absorbed into the first
    complement factor.
    """
    F = b.factors
    m, dim = F.shape
    if m == dim:
        raise ValueError("duals of top-grade blades are scalars, not blades")
    # QR with positive diagonal keeps the orientation of the factor list
    q, r = np.linalg.qr(F.T)
    diag = np.diag(r)
    if np.min(np.abs(diag)) < 1e-12:
        raise ValueError("dependent factors have no Hodge dual")
    signs = np.sign(diag)
    q = q * signs[None, :]
    scale = float(np.prod(diag * signs))  # = blade norm
    u = q.T  # orthonormal rows spanning the factors, same orientation
    comp = null_space(F).T  # orthonormal rows spanning the complement
    full = np.vstack([u, comp])
    if np.linalg.det(full) < 0:
        comp = comp.copy()
        comp[-1] = -comp[-1]
    out = comp.copy()
    out[0] *= scale
    return Blade(out)
