"""Vertical/horizontal subgroups, semidirect factorizations and the
projection machinery, including the sampled verification of the
area-scaling lemma for projections between complementary vertical subgroups."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import (
    ALG_TOL,
    dilate,
    dim_n,
    extend_heisenberg_basis,
    group_inverse,
    group_product,
    omega,
    random_isotropic_frame,
)
from .metrics import HomogeneousDistance
from .multivec import Blade, blade_norm
from .sampling import Box, chunk_rng, chunk_sizes


@dataclass(frozen=True)
class HorizontalSubgroup:
    """Horizontal subgroup given by an orthonormal isotropic basis (rows)."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.basis, dtype=float))
        n = dim_n(B[0])
        k = B.shape[0]
        if k > n:
            raise ValueError(f"horizontal subgroups have dimension at most n={n}")
        if np.any(np.abs(B[:, -1]) > 1e-10):
            raise ValueError("basis vectors must be horizontal")
        if np.max(np.abs(B @ B.T - np.eye(k))) > 1e-10:
            raise ValueError("basis must be orthonormal")
        for i in range(k):
            for j in range(i + 1, k):
                if abs(omega(B[i], B[j])) > ALG_TOL * 10:
                    raise ValueError("basis must be pairwise isotropic")
        object.__setattr__(self, "basis", B)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_n(self) -> int:
        return dim_n(self.basis[0])

    def to_coords(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.basis.T

    def from_coords(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords, dtype=float) @ self.basis

    def contains(self, pts: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        resid = pts - self.from_coords(self.to_coords(pts))
        return np.linalg.norm(resid, axis=-1) <= tol


@dataclass(frozen=True)
class VerticalSubgroup:
    """Vertical subgroup: orthonormal horizontal directions plus the center.

    ``horizontal_basis`` holds the horizontal rows; the center direction is
    implicit and appended last in ``basis``.
    """

    horizontal_basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.horizontal_basis, dtype=float)
        if B.ndim == 1:
            B = B[None, :]
        if B.shape[0] > 0:
            if np.any(np.abs(B[:, -1]) > 1e-10):
                raise ValueError("horizontal rows must have zero vertical part")
            if np.max(np.abs(B @ B.T - np.eye(B.shape[0]))) > 1e-10:
                raise ValueError("horizontal rows must be orthonormal")
        object.__setattr__(self, "horizontal_basis", B)

    @cached_property
    def basis(self) -> np.ndarray:
        dim = self.horizontal_basis.shape[1]
        e = np.zeros((1, dim))
        e[0, -1] = 1.0
        return np.vstack([self.horizontal_basis, e])

    @property
    def dim(self) -> int:
        return self.horizontal_basis.shape[0] + 1

    @property
    def ambient_n(self) -> int:
        return (self.horizontal_basis.shape[1] - 1) // 2

    def to_coords(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.basis.T

    def from_coords(self, coords: np.ndarray) -> np.ndarray:
        return np.asarray(coords, dtype=float) @ self.basis

    def contains(self, pts: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        resid = pts - self.from_coords(self.to_coords(pts))
        return np.linalg.norm(resid, axis=-1) <= tol

    def blade(self) -> Blade:
        return Blade(self.basis)


@dataclass
class Split:
    """Semidirect factorization of H^n into a vertical and a horizontal
    subgroup, with cached multivectors and projection matrices.

    ``adapted`` marks splits whose W-horizontal rows follow the adapted
    Heisenberg-basis order used by the intrinsic derivative fields.
    """

    W: VerticalSubgroup
    V: HorizontalSubgroup
    adapted: bool = False

    def __post_init__(self):
        n = self.W.ambient_n
        if self.V.ambient_n != n:
            raise ValueError("subgroups live in different ambient groups")
        if self.W.dim + self.V.dim != 2 * n + 1:
            raise ValueError(
                f"dimensions {self.W.dim}+{self.V.dim} do not factor H^{n}"
            )
        stacked = np.vstack([self.W.horizontal_basis[:, :-1], self.V.basis[:, :-1]])
        if stacked.shape[0] != 2 * n:
            raise ValueError("horizontal parts do not fill the horizontal layer")
        smin = np.linalg.svd(stacked, compute_uv=False)[-1]
        if smin < 1e-10:
            raise ValueError("subgroups are not complementary (singular stacked basis)")
        self._horizontal_solve = np.linalg.inv(stacked.T)

    @property
    def ambient_n(self) -> int:
        return self.W.ambient_n

    @cached_property
    def v_wedge_n_norm(self) -> float:
        """Norm of the wedge of the V factors with the W factors."""
        return blade_norm(Blade(np.vstack([self.V.basis, self.W.basis])))

    def project(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Unique (w, v) with w*v = x, w in W, v in V.

        The horizontal layer splits linearly; the vertical coordinate of w
        then comes from w = x * v^{-1}.
        """
        x = np.asarray(x, dtype=float)
        coeffs = x[..., :-1] @ self._horizontal_solve.T
        v_coeffs = coeffs[..., self.W.dim - 1 :]
        v = v_coeffs @ self.V.basis
        w = group_product(x, group_inverse(v))
        w[..., :-1] = coeffs[..., : self.W.dim - 1] @ self.W.horizontal_basis[:, :-1]
        return w, v

    def project_v_coords(self, x: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(x, dtype=float)[..., :-1] @ self._horizontal_solve.T
        return coeffs[..., self.W.dim - 1 :]

    def sigma(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Left-translation action on W: sigma_x(w) = x * w * pi_V(x)^{-1}."""
        w = np.asarray(w, dtype=float)
        if not np.all(self.W.contains(w)):
            raise ValueError("sigma requires points of W")
        _, v = self.project(x)
        return group_product(group_product(x, w), group_inverse(v))


def coordinate_split(n: int, k: int) -> Split:
    """V spanned by the first k coordinate axes, W by the rest, in the
    adapted order (v_{k+1}..v_n, w_1..w_k, w_{k+1}..w_n, center)."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    dim = 2 * n + 1
    eye = np.eye(dim)
    V = HorizontalSubgroup(eye[:k])
    order = list(range(k, n)) + list(range(n, n + k)) + list(range(n + k, 2 * n))
    W = VerticalSubgroup(eye[order])
    return Split(W=W, V=V, adapted=True)


def center_subgroup(n: int) -> VerticalSubgroup:
    """The one-dimensional vertical subgroup spanned by the center."""
    return VerticalSubgroup(np.zeros((0, 2 * n + 1)))


def orthogonal_split(v_basis) -> Split:
    """Split with W the orthogonal complement of V, W-horizontal rows in the
    adapted Heisenberg-basis order."""
    basis = extend_heisenberg_basis(v_basis)
    n = basis.n
    k = np.atleast_2d(np.asarray(v_basis, dtype=float)).shape[0]
    V = HorizontalSubgroup(basis.v_vectors[:k])
    rows = np.vstack(
        [basis.v_vectors[k:], basis.w_vectors[:k], basis.w_vectors[k:]]
    )
    W = VerticalSubgroup(rows)
    return Split(W=W, V=V, adapted=True)


def random_vertical_complement(
    V: HorizontalSubgroup, rng: np.random.Generator, tilt: float = 1.0
) -> VerticalSubgroup:
    """Random vertical subgroup complementary to V: the orthogonal
    complement's horizontal rows, sheared toward V and re-orthonormalized."""
    base = orthogonal_split(V.basis).W.horizontal_basis
    shear = rng.uniform(-tilt, tilt, size=(base.shape[0], V.dim))
    rows = base + shear @ V.basis
    q, r = np.linalg.qr(rows.T)
    q = q * np.sign(np.diag(r))[None, :]
    return VerticalSubgroup(q.T)


def restricted_projection_ratio(
    V: HorizontalSubgroup, M: VerticalSubgroup, W: VerticalSubgroup
) -> float:
    """Area scaling of the restricted projection M -> W induced by the two
    factorizations with the same horizontal factor V."""
    Split(W=M, V=V)
    Split(W=W, V=V)
    num = blade_norm(Blade(np.vstack([V.basis, M.basis])))
    den = blade_norm(Blade(np.vstack([V.basis, W.basis])))
    return num / den


@dataclass(frozen=True)
class ProjectionLemmaReport:
    ratio_expected: float
    area_source: float
    area_image_indicator: float
    area_image_jacobian: float
    jacobian_spread: float
    rel_error_indicator: float
    rel_error_jacobian: float
    n_samples: int
    seed: int
    tolerance: float = 0.02

    @property
    def passed(self) -> bool:
        return (
            max(self.rel_error_indicator, self.rel_error_jacobian) <= self.tolerance
        )


def verify_projection_lemma(
    V: HorizontalSubgroup,
    M: VerticalSubgroup,
    W: VerticalSubgroup,
    box: Box,
    n_samples: int = 200_000,
    seed: int = 0,
) -> ProjectionLemmaReport:
    """Push a coordinate box of M through the restricted projection onto W
    and compare its measured area with the blade-norm ratio.

    Two independent estimates are made: an indicator Monte Carlo over the
    projected cloud's bounding box (membership tested through the inverse
    restricted projection) and the finite-difference Jacobian determinant of
    the coordinate map, which the lemma predicts to be constant.
    """
    if box.dim != M.dim:
        raise ValueError(f"box must live in M coordinates (dim {M.dim})")
    split_wv = Split(W=W, V=V)
    split_mv = Split(W=M, V=V)
    ratio = restricted_projection_ratio(V, M, W)
    area_source = box.volume

    def to_w_coords(m_coords: np.ndarray) -> np.ndarray:
        pts = M.from_coords(m_coords)
        w, _ = split_wv.project(pts)
        return W.to_coords(w)

    # forward cloud fixes the bounding box of the image
    rng = chunk_rng(seed, 0)
    cloud = to_w_coords(box.sample(rng, 20_000))
    lo, hi = cloud.min(axis=0), cloud.max(axis=0)
    pad = 0.05 * (hi - lo) + 1e-9
    img_box = Box(center=0.5 * (lo + hi), half=0.5 * (hi - lo) + pad)

    hits = 0
    total = 0
    for idx, size in enumerate(chunk_sizes(n_samples, 50_000)):
        rng = chunk_rng(seed + 1, idx)
        u = img_box.sample(rng, size)
        w_pts = W.from_coords(u)
        m_back, _ = split_mv.project(w_pts)
        back = M.to_coords(m_back)
        hits += int(np.sum(box.contains(back)))
        total += size
    area_indicator = img_box.volume * hits / total

    # constant-Jacobian route: finite differences at scattered points
    probe = box.sample(chunk_rng(seed + 2, 0), 8)
    h = 1e-6
    dets = []
    for y in probe:
        cols = []
        for j in range(box.dim):
            dy = np.zeros(box.dim)
            dy[j] = h
            cols.append((to_w_coords(y + dy) - to_w_coords(y - dy)) / (2 * h))
        dets.append(abs(np.linalg.det(np.stack(cols, axis=-1))))
    dets = np.asarray(dets)
    jac = float(np.mean(dets))
    spread = float((np.max(dets) - np.min(dets)) / max(jac, 1e-300))
    area_jacobian = jac * area_source

    expected = ratio * area_source
    return ProjectionLemmaReport(
        ratio_expected=ratio,
        area_source=area_source,
        area_image_indicator=float(area_indicator),
        area_image_jacobian=float(area_jacobian),
        jacobian_spread=spread,
        rel_error_indicator=abs(area_indicator / expected - 1.0),
        rel_error_jacobian=abs(area_jacobian / expected - 1.0),
        n_samples=n_samples,
        seed=seed,
    )


def random_projection_triple(
    n: int, k: int, rng: np.random.Generator
) -> tuple[HorizontalSubgroup, VerticalSubgroup, VerticalSubgroup]:
    """Random (V, M, W) with both (M, V) and (W, V) valid factorizations."""
    V = HorizontalSubgroup(random_isotropic_frame(n, k, rng))
    while True:
        try:
            M = random_vertical_complement(V, rng)
            W = random_vertical_complement(V, rng)
            Split(W=M, V=V)
            Split(W=W, V=V)
            return V, M, W
        except ValueError:
            continue


def estimate_c0(
    split: Split,
    d: HomogeneousDistance,
    n_samples: int = 20_000,
    seed: int = 0,
    scale: float = 1.0,
) -> float:
    """Sampled lower profile of |w v| / (|w| + |v|) over the factorization.

    Each pair is drawn at unit scale and jointly dilated by ``scale``, so the
    estimate is exactly dilation invariant.  The sampled minimum upper-bounds
    the true constant; callers sizing boxes with it should keep a margin.
    """
    d.require_validated()
    n = split.ambient_n
    best = 1.0
    for idx, size in enumerate(chunk_sizes(n_samples, 50_000)):
        rng = chunk_rng(seed, idx)
        wc = rng.uniform(-1, 1, size=(size, split.W.dim))
        vc = rng.uniform(-1, 1, size=(size, split.V.dim))
        w = split.W.from_coords(wc)
        v = split.V.from_coords(vc)
        nw, nv = d.norm(w), d.norm(v)
        keep = (nw > 1e-9) & (nv > 1e-9)
        w, v, nw, nv = w[keep], v[keep], nw[keep], nv[keep]
        if scale != 1.0:
            w, v = dilate(scale, w), dilate(scale, v)
            nw, nv = nw * scale, nv * scale
        ratios = d.norm(group_product(w, v)) / (nw + nv)
        best = min(best, float(np.min(ratios)))
    return best
