"""Horizontal derivatives along group lines, Pansu differentials and the
horizontal / directional Jacobians of defining functions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import expressions
from .core import ALG_TOL, dim_n, group_product, horizontal
from .subgroups import HorizontalSubgroup

DERIVATIVE_STEP = 1e-5


@dataclass(frozen=True)
class DefiningFunction:
    """k scalar components, each a vectorized evaluator on points of H^n."""

    n: int
    components: tuple[Callable[[np.ndarray], np.ndarray], ...]
    sources: tuple[str, ...] = ()

    @property
    def k(self) -> int:
        return len(self.components)

    @classmethod
    def from_expressions(cls, sources: Sequence[str], n: int) -> "DefiningFunction":
        trees = [expressions.parse(src, n) for src in sources]
        comps = tuple(
            (lambda tree: lambda p: expressions.evaluate(tree, p))(t) for t in trees
        )
        return cls(n=n, components=comps, sources=tuple(sources))

    @classmethod
    def from_callables(
        cls, components: Sequence[Callable[[np.ndarray], np.ndarray]], n: int
    ) -> "DefiningFunction":
        return cls(n=n, components=tuple(components))

    def __call__(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.stack([comp(p) for comp in self.components], axis=-1)


@dataclass(frozen=True)
class HHomomorphism:
    """Homogeneous homomorphism H^n -> R^k: a k x 2n matrix acting on the
    horizontal part, annihilating the center by construction."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.atleast_2d(np.asarray(self.matrix, dtype=float)))

    def __call__(self, w: np.ndarray) -> np.ndarray:
        return horizontal(w) @ self.matrix.T


def _step_for(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return DERIVATIVE_STEP * (1.0 + np.linalg.norm(x, axis=-1))


def horizontal_derivative(
    fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    v: np.ndarray,
    h: float | None = None,
) -> np.ndarray:
    """Derivative of a scalar evaluator along the group line t -> x * (t v),
    by central differences with one Richardson pass."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(v[..., -1]) > ALG_TOL):
        raise ValueError("direction must be horizontal")
    steps = np.asarray(h if h is not None else _step_for(x), dtype=float)

    def central(hh):
        plus = fn(group_product(x, hh[..., None] * v))
        minus = fn(group_product(x, -hh[..., None] * v))
        return (plus - minus) / (2.0 * hh)

    coarse = central(steps)
    fine = central(steps / 2.0)
    out = (4.0 * fine - coarse) / 3.0
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite evaluations in horizontal derivative")
    return out


def horizontal_gradient(
    fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float | None = None
) -> np.ndarray:
    """Vector of derivatives along the 2n coordinate fields, shape (..., 2n)."""
    x = np.asarray(x, dtype=float)
    n = dim_n(x)
    cols = []
    for j in range(2 * n):
        v = np.zeros(2 * n + 1)
        v[j] = 1.0
        cols.append(horizontal_derivative(fn, x, v, h=h))
    return np.stack(cols, axis=-1)


def pansu_matrix(f: DefiningFunction, x: np.ndarray, h: float | None = None) -> np.ndarray:
    """Stacked horizontal gradients, shape (..., k, 2n)."""
    rows = [horizontal_gradient(comp, x, h=h) for comp in f.components]
    return np.stack(rows, axis=-2)


def pansu_differential(f: DefiningFunction, x: np.ndarray) -> HHomomorphism:
    if np.asarray(x).ndim != 1:
        raise ValueError("pansu_differential takes a single point; use pansu_matrix for batches")
    return HHomomorphism(pansu_matrix(f, x))


def _gram_sqrt_det(rows: np.ndarray) -> np.ndarray:
    gram = rows @ np.swapaxes(rows, -1, -2)
    det = np.linalg.det(gram)
    return np.sqrt(np.maximum(det, 0.0))


def jacobian_h(f: DefiningFunction, x: np.ndarray, grads: np.ndarray | None = None) -> np.ndarray:
    """Norm of the wedge of the k horizontal gradients."""
    if grads is None:
        grads = pansu_matrix(f, x)
    return _gram_sqrt_det(grads)


def jacobian_v(
    f: DefiningFunction,
    x: np.ndarray,
    V: HorizontalSubgroup,
    grads: np.ndarray | None = None,
) -> np.ndarray:
    """Norm of the wedge of the V-projected gradients; V must have dim k."""
    if V.dim != f.k:
        raise ValueError(f"V has dimension {V.dim}, expected k={f.k}")
    if grads is None:
        grads = pansu_matrix(f, x)
    coords = grads @ V.basis[:, :-1].T  # (..., k, k)
    return np.abs(np.linalg.det(coords))
