"""Heisenberg group arithmetic in symplectic coordinates.

A point of H^n is an ndarray of length 2n+1.  Coordinates 1..2n span the
horizontal layer, the last coordinate spans the center.  All operations
broadcast over leading axes, so batches of points are first class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Tolerance for exact algebraic identities; module-global so callers can
# tighten or relax it in one place.
ALG_TOL = 1e-12


def dim_n(p: np.ndarray) -> int:
    """Heisenberg index n of a coordinate array of length 2n+1."""
    m = np.asarray(p).shape[-1]
    if m < 3 or m % 2 == 0:
        raise ValueError(f"coordinate length {m} is not 2n+1 with n >= 1")
    return (m - 1) // 2


def _check_same_dim(p: np.ndarray, q: np.ndarray) -> int:
    n = dim_n(p)
    if np.asarray(q).shape[-1] != 2 * n + 1:
        raise ValueError(
            f"dimension mismatch: {np.asarray(p).shape[-1]} vs {np.asarray(q).shape[-1]}"
        )
    return n


def horizontal(p: np.ndarray) -> np.ndarray:
    return np.asarray(p, dtype=float)[..., :-1]


def vertical(p: np.ndarray) -> np.ndarray:
    return np.asarray(p, dtype=float)[..., -1]


def omega(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Symplectic pairing of the horizontal parts of two points."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = _check_same_dim(p, q)
    a, b = p[..., :n], p[..., n : 2 * n]
    c, d = q[..., :n], q[..., n : 2 * n]
    return np.einsum("...i,...i->...", a, d) - np.einsum("...i,...i->...", b, c)


def group_product(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Group law p*q: coordinates add, the center picks up half the bracket."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _check_same_dim(p, q)
    out = p + q
    out = np.array(out, dtype=float)
    out[..., -1] += 0.5 * omega(p, q)
    return out


def group_inverse(p: np.ndarray) -> np.ndarray:
    """Inverse is negation in these coordinates."""
    return -np.asarray(p, dtype=float)


def dilate(t, p: np.ndarray) -> np.ndarray:
    """Intrinsic dilation: t on the horizontal layer, t^2 on the center."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("dilation factor must be positive")
    p = np.asarray(p, dtype=float)
    out = np.array(p, dtype=float)
    out[..., :-1] *= t[..., None]
    out[..., -1] *= t * t
    return out


def bracket(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Lie bracket: purely vertical, equal to the symplectic pairing."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _check_same_dim(p, q)
    out = np.zeros(np.broadcast_shapes(p.shape, q.shape))
    out[..., -1] = omega(p, q)
    return out


def jmap(h: np.ndarray) -> np.ndarray:
    """Rotation J of the horizontal layer: J e_i = e_{n+i}, J e_{n+i} = -e_i.

    Requires a point with vanishing vertical part.
    """
    h = np.asarray(h, dtype=float)
    n = dim_n(h)
    if np.any(np.abs(h[..., -1]) > ALG_TOL):
        raise ValueError("jmap requires a horizontal point (zero vertical part)")
    out = np.zeros_like(h)
    out[..., :n] = -h[..., n : 2 * n]
    out[..., n : 2 * n] = h[..., :n]
    return out


def embed_horizontal(a: np.ndarray) -> np.ndarray:
    """Lift a length-2n horizontal coordinate array to a point of H^n."""
    a = np.asarray(a, dtype=float)
    out = np.zeros(a.shape[:-1] + (a.shape[-1] + 1,))
    out[..., :-1] = a
    return out


@dataclass(frozen=True)
class HeisenbergBasis:
    """Orthonormal symplectic basis (v_1..v_n, w_1..w_n, e_{2n+1}), rows."""

    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vectors", np.asarray(self.vectors, dtype=float))
        errs = self.validation_errors()
        worst = max(errs.values())
        if worst > 1e-10:
            raise ValueError(f"not a Heisenberg basis: {errs}")

    @property
    def n(self) -> int:
        return dim_n(self.vectors[0])

    @property
    def v_vectors(self) -> np.ndarray:
        return self.vectors[: self.n]

    @property
    def w_vectors(self) -> np.ndarray:
        return self.vectors[self.n : 2 * self.n]

    def validation_errors(self) -> dict:
        B = self.vectors
        m = B.shape[0]
        n = (m - 1) // 2
        gram = B @ B.T
        ortho = float(np.max(np.abs(gram - np.eye(m))))
        # omega matrix on the first 2n rows must be the standard symplectic form
        om = np.empty((2 * n, 2 * n))
        for i in range(2 * n):
            om[i] = omega(B[i], B[: 2 * n])
        std = np.zeros((2 * n, 2 * n))
        std[:n, n:] = np.eye(n)
        std[n:, :n] = -np.eye(n)
        sympl = float(np.max(np.abs(om - std)))
        e = np.zeros(m)
        e[-1] = 1.0
        center = float(np.min([np.linalg.norm(B[-1] - e), np.linalg.norm(B[-1] + e)]))
        return {"orthonormality": ortho, "symplectic": sympl, "center": center}


def _mgs_residual(v: np.ndarray, span_rows: list[np.ndarray]) -> np.ndarray:
    """One modified Gram-Schmidt sweep of v against a list of unit rows."""
    r = np.array(v, dtype=float)
    for u in span_rows:
        r -= (r @ u) * u
    return r


def extend_heisenberg_basis(v_basis) -> HeisenbergBasis:
    """Complete orthonormal, pairwise isotropic horizontal vectors to a full basis.

    The input vectors become v_1..v_k; their J images give w_1..w_k and the
    remaining symplectic pairs are grown by repeated orthogonal completion
    inside the horizontal layer.
    """
    V = np.atleast_2d(np.asarray(v_basis, dtype=float))
    n = dim_n(V[0])
    k = V.shape[0]
    if k > n:
        raise ValueError(f"at most n={n} isotropic directions, got {k}")
    if np.any(np.abs(V[:, -1]) > 1e-10):
        raise ValueError("input vectors must be horizontal")
    gram = V @ V.T
    if np.max(np.abs(gram - np.eye(k))) > 1e-10:
        raise ValueError("input vectors must be orthonormal")
    for i in range(k):
        for j in range(i + 1, k):
            if abs(omega(V[i], V[j])) > 1e-10:
                raise ValueError("input vectors must be pairwise isotropic")

    vs = [V[i].copy() for i in range(k)]
    ws = [jmap(v) for v in vs]
    dim = 2 * n + 1
    while len(vs) < n:
        span = vs + ws
        # deterministic candidate: the coordinate axis with the largest
        # residual after projecting out the current symplectic span
        best, best_norm = None, -1.0
        for j in range(2 * n):
            cand = np.zeros(dim)
            cand[j] = 1.0
            r = _mgs_residual(_mgs_residual(cand, span), span)
            rn = np.linalg.norm(r)
            if rn > best_norm:
                best, best_norm = r, rn
        v_new = best / best_norm
        w_new = jmap(v_new)
        w_new = _mgs_residual(w_new, vs + ws + [v_new])
        w_new /= np.linalg.norm(w_new)
        vs.append(v_new)
        ws.append(w_new)
    e = np.zeros(dim)
    e[-1] = 1.0
    return HeisenbergBasis(np.vstack(vs + ws + [e]))


def random_points(n: int, size: int, rng: np.random.Generator, scale: float = 5.0) -> np.ndarray:
    """Seeded box samples: horizontal in [-s, s], vertical in [-s^2, s^2]."""
    pts = rng.uniform(-scale, scale, size=(size, 2 * n + 1))
    pts[:, -1] *= scale
    return pts


def random_isotropic_frame(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Random orthonormal, pairwise isotropic horizontal k-frame in H^n."""
    if k > n:
        raise ValueError(f"isotropic frames have at most n={n} vectors")
    dim = 2 * n + 1
    rows: list[np.ndarray] = []
    kill: list[np.ndarray] = []
    while len(rows) < k:
        cand = np.zeros(dim)
        cand[: 2 * n] = rng.normal(size=2 * n)
        r = _mgs_residual(_mgs_residual(cand, kill), kill)
        rn = np.linalg.norm(r)
        if rn < 1e-6:
            continue
        v = r / rn
        rows.append(v)
        kill.extend([v, jmap(v)])
    return np.vstack(rows)


@dataclass(frozen=True)
class GroupAxiomReport:
    max_associativity_error: float
    max_inverse_error: float
    max_dilation_error: float
    max_basis_error: float
    n_samples: int
    seed: int

    @property
    def passed(self) -> bool:
        return (
            max(
                self.max_associativity_error,
                self.max_inverse_error,
                self.max_dilation_error,
                self.max_basis_error,
            )
            <= ALG_TOL
        )


def validate_group_axioms(n: int, n_samples: int, seed: int) -> GroupAxiomReport:
    """Sampled check of associativity, inverses, dilation homomorphism and
    symplectic basis extension."""
    rng = np.random.default_rng(seed)
    p = random_points(n, n_samples, rng, scale=2.0)
    q = random_points(n, n_samples, rng, scale=2.0)
    r = random_points(n, n_samples, rng, scale=2.0)
    assoc = np.max(
        np.abs(group_product(group_product(p, q), r) - group_product(p, group_product(q, r)))
    )
    inv = np.max(np.abs(group_product(p, group_inverse(p))))
    t = rng.uniform(0.2, 3.0, size=n_samples)
    dil = np.max(
        np.abs(dilate(t, group_product(p, q)) - group_product(dilate(t, p), dilate(t, q)))
    )
    basis_err = 0.0
    for _ in range(25):
        k = int(rng.integers(1, n + 1))
        frame = random_isotropic_frame(n, k, rng)
        basis = extend_heisenberg_basis(frame)
        basis_err = max(basis_err, max(basis.validation_errors().values()))
    return GroupAxiomReport(
        max_associativity_error=float(assoc),
        max_inverse_error=float(inv),
        max_dilation_error=float(dil),
        max_basis_error=float(basis_err),
        n_samples=n_samples,
        seed=seed,
    )
