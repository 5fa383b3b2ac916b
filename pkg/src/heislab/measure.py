"""Spherical factors, the graph-area measure, Federer and upper densities,
and the numerical verification of the blow-up and area-formula identities.

Covering constructions are never evaluated directly: every route goes
through densities of the graph measure and through plane-section areas,
which is where the representation theorems place the content.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize

from .core import dilate, group_inverse, group_product, horizontal, vertical
from .differential import jacobian_h, jacobian_v, pansu_matrix
from .metrics import HomogeneousDistance
from .multivec import Blade, blade_norm
from .sampling import Box, chunk_rng, chunk_sizes, mc_mean
from .subgroups import Split, VerticalSubgroup, estimate_c0
from .surfaces import (
    DEGENERATE_JACOBIAN,
    DegenerateJacobianError,
    IntrinsicDifferential,
    SurfaceModel,
    graph_map,
    intrinsic_differential,
    intrinsic_jacobian,
    solve_v_coords,
)

C0_SAFETY = 0.8


@dataclass(frozen=True)
class Budget:
    """Sample and search budgets shared by the estimators."""

    section_samples: int = 50_000
    factor_grid: int = 500
    factor_top: int = 5
    factor_nm_iter: int = 60
    factor_final_samples: int = 200_000
    density_eval_samples: int = 40_000
    density_final_samples: int = 160_000
    density_refine_top: int = 3
    multistarts: int = 32
    rungs: int = 5
    t0: float = 0.2
    gamma: float = 0.5
    mu_samples: int = 100_000
    lemma_samples: int = 200_000
    axiom_samples: int = 10_000
    metric_samples: int = 100_000


BUDGETS = {
    "low": Budget(
        section_samples=15_000,
        factor_grid=150,
        factor_top=3,
        factor_nm_iter=30,
        factor_final_samples=60_000,
        density_eval_samples=12_000,
        density_final_samples=50_000,
        multistarts=16,
        rungs=4,
        mu_samples=30_000,
        lemma_samples=60_000,
        metric_samples=30_000,
    ),
    "default": Budget(),
    "high": Budget(
        section_samples=150_000,
        factor_grid=1_000,
        factor_nm_iter=100,
        factor_final_samples=600_000,
        density_eval_samples=120_000,
        density_final_samples=480_000,
        multistarts=48,
        rungs=6,
        mu_samples=300_000,
        lemma_samples=500_000,
        metric_samples=200_000,
    ),
}


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    std_error: float
    n_samples: int
    seed: int


@dataclass(frozen=True)
class TangentCone:
    """Homogeneous tangent cone at a surface point: the kernel of the
    differential of the defining function, a vertical subgroup."""

    subgroup: VerticalSubgroup
    point: np.ndarray


@dataclass(frozen=True)
class DensityProfile:
    exponent: int
    scales: tuple[float, ...]
    sup_values: tuple[float, ...]
    limit: float
    std_error: float
    converged: bool
    seed: int


def tangent_cone(m: SurfaceModel, x: np.ndarray) -> TangentCone:
    x = np.asarray(x, dtype=float)
    Df = pansu_matrix(m.f, x)
    sv = np.linalg.svd(Df, compute_uv=False)
    if sv[-1] < DEGENERATE_JACOBIAN:
        raise DegenerateJacobianError("differential is rank deficient at the point")
    kernel = null_space(Df, rcond=1e-10)
    if kernel.shape[1] != 2 * m.n - m.k:
        raise DegenerateJacobianError("unexpected kernel dimension")
    rows = np.zeros((kernel.shape[1], 2 * m.n + 1))
    rows[:, :-1] = kernel.T
    return TangentCone(subgroup=VerticalSubgroup(rows), point=x)


def _into_ball(d: HomogeneousDistance, z: np.ndarray, radius: float = 1.0) -> np.ndarray:
    nz = float(d.norm(z))
    if nz > radius:
        return dilate(radius / nz * (1.0 - 1e-12), z)
    return z


def plane_ball_section_area(
    plane: VerticalSubgroup,
    z: np.ndarray,
    d: HomogeneousDistance,
    n_samples: int = 50_000,
    seed: int = 0,
) -> MeasureEstimate:
    """Euclidean area of the plane's intersection with the unit ball at z,
    by indicator Monte Carlo in orthonormal plane coordinates.

    The sampling box hulls the section exactly: horizontal offsets are
    bounded by the unit-ball box, vertical offsets additionally pick up the
    bracket with the center's horizontal part.
    """
    d.require_validated()
    z = np.asarray(z, dtype=float)
    n = plane.ambient_n
    if float(d.norm(z)) > 2.0:
        return MeasureEstimate(0.0, 0.0, n_samples, seed)
    half_h, half_t = d.ball_box_halves(1.0, n)
    m = plane.dim - 1
    centers = np.concatenate([plane.horizontal_basis @ z, [vertical(z)]])
    zh = float(np.linalg.norm(horizontal(z)))
    halves = np.concatenate([np.full(m, half_h), [half_t + 0.5 * zh * half_h]])
    box = Box(center=centers, half=halves)

    def sampler(rng, size):
        coords = box.sample(rng, size)
        pts = plane.from_coords(coords)
        return (d.distance(z, pts) <= 1.0).astype(float)

    mean, se = mc_mean(sampler, n_samples, seed)
    return MeasureEstimate(mean * box.volume, se * box.volume, n_samples, seed)


@dataclass(frozen=True)
class SphericalFactorResult:
    value: float
    std_error: float
    argmax: np.ndarray
    n_samples: int
    seed: int


def spherical_factor(
    plane: VerticalSubgroup,
    d: HomogeneousDistance,
    budget: Budget = BUDGETS["default"],
    seed: int = 0,
) -> SphericalFactorResult:
    """Maximal section area over unit-ball centers.

    Seeded coarse grid over the ball, Nelder-Mead refinement of the best
    candidates (centers projected back into the ball along dilations), and
    a fresh larger evaluation of the winner to strip selection bias.
    """
    d.require_validated()
    n = plane.ambient_n
    dim = 2 * n + 1
    half_h, half_t = d.ball_box_halves(1.0, n)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(777,)))
    cands = [np.zeros(dim)]
    while len(cands) < budget.factor_grid:
        z = rng.uniform(-1, 1, size=dim)
        z[:-1] *= half_h
        z[-1] *= half_t
        cands.append(_into_ball(d, z))

    def value_at(z: np.ndarray) -> float:
        z = _into_ball(d, np.asarray(z, dtype=float))
        return plane_ball_section_area(plane, z, d, budget.section_samples, seed).value

    scored = sorted(((value_at(z), i, z) for i, z in enumerate(cands)), key=lambda t: -t[0])
    best_val, _, best_z = scored[0]
    for _, _, z0 in scored[: budget.factor_top]:
        simplex = np.vstack([z0[None, :], z0[None, :] + 0.1 * np.eye(dim)])
        res = minimize(
            lambda z: -value_at(z),
            z0,
            method="Nelder-Mead",
            options={
                "maxiter": budget.factor_nm_iter,
                "initial_simplex": simplex,
                "xatol": 1e-3,
                "fatol": 1e-4,
            },
        )
        if -res.fun > best_val:
            best_val, best_z = -res.fun, _into_ball(d, res.x)
    final = plane_ball_section_area(
        plane, best_z, d, budget.factor_final_samples, seed + 1
    )
    return SphericalFactorResult(
        value=final.value,
        std_error=final.std_error,
        argmax=best_z,
        n_samples=budget.factor_final_samples,
        seed=seed,
    )


def canonical_vertical_subgroup(n: int, p: int) -> VerticalSubgroup:
    """A fixed p-dimensional vertical subgroup (the last p-1 horizontal axes
    plus the center)."""
    if not 1 <= p <= 2 * n + 1:
        raise ValueError(f"vertical subgroups have dimension 1..{2 * n + 1}")
    eye = np.eye(2 * n + 1)
    return VerticalSubgroup(eye[2 * n - (p - 1) : 2 * n])


def constant_spherical_factor(
    d: HomogeneousDistance,
    p: int,
    n: int,
    budget: Budget = BUDGETS["default"],
    seed: int = 0,
) -> SphericalFactorResult:
    """The constant factor of a symmetric distance on p-dimensional vertical
    subgroups, evaluated on a canonical representative."""
    if not d.multiradial and d.vertically_symmetric_p != "all" and p not in d.vertically_symmetric_p:
        raise ValueError(f"distance {d.name!r} does not claim symmetry in dimension {p}")
    return spherical_factor(canonical_vertical_subgroup(n, p), d, budget, seed)


def _c0_safe(m: SurfaceModel, d: HomogeneousDistance) -> float:
    key = d.name
    if key not in m._c0_cache:
        m._c0_cache[key] = estimate_c0(m.split, d, n_samples=20_000, seed=9_871)
    return C0_SAFETY * m._c0_cache[key]


def _w_sample_box(m: SurfaceModel, d: HomogeneousDistance, radius: float) -> Box:
    half_h, half_t = d.ball_box_halves(1.0, m.n)
    mdim = m.split.W.dim
    halves = np.concatenate(
        [np.full(mdim - 1, half_h * radius), [half_t * radius * radius]]
    )
    return Box(center=np.zeros(mdim), half=halves)


def _alpha_at(m: SurfaceModel, pts: np.ndarray) -> np.ndarray:
    grads = pansu_matrix(m.f, pts)
    jh = jacobian_h(m.f, pts, grads=grads)
    jv = jacobian_v(m.f, pts, m.split.V, grads=grads)
    if np.any(jv <= DEGENERATE_JACOBIAN):
        raise DegenerateJacobianError("vanishing V-Jacobian inside the integration patch")
    return jh / jv


def mu_ball(
    m: SurfaceModel,
    y: np.ndarray,
    t: float,
    d: HomogeneousDistance,
    n_samples: int = 100_000,
    seed: int = 0,
) -> MeasureEstimate:
    """Graph measure of the ball B(y, t).

    The pullback of the ball lies in a left-translate of a W-ball whose
    radius comes from the factorization constant; that set is sampled in W
    coordinates (the translation has unit Jacobian on W).
    """
    d.require_validated()
    if t < 0:
        raise ValueError("radius must be nonnegative")
    if t == 0:
        return MeasureEstimate(0.0, 0.0, n_samples, seed)
    y = np.asarray(y, dtype=float)
    w_y, _ = m.split.project(y)
    x_star = graph_map(m, w_y)
    radius = (float(d.distance(x_star, y)) + t) / _c0_safe(m, d)
    box = _w_sample_box(m, d, radius)
    v_star = m.split.project(x_star)[1]
    prefactor = m.split.v_wedge_n_norm * box.volume
    shell_hits = 0
    total_hits = 0

    def sampler(rng, size):
        nonlocal shell_hits, total_hits
        coords = box.sample(rng, size)
        eta = m.split.W.from_coords(coords)
        w = group_product(group_product(x_star, eta), group_inverse(v_star))
        s = solve_v_coords(m, w)
        pts = group_product(w, s @ m.split.V.basis)
        inside = d.distance(y, pts) <= t
        shell = np.any(np.abs(coords - box.center) > 0.95 * box.half, axis=-1)
        shell_hits += int(np.sum(inside & shell))
        total_hits += int(np.sum(inside))
        return inside * _alpha_at(m, pts)

    mean, se = mc_mean(sampler, n_samples, seed)
    if total_hits and shell_hits / max(total_hits, 1) > 1e-3:
        warnings.warn(
            "ball pullback touches the sampling box boundary; "
            "the factorization-constant margin may be too tight",
            stacklevel=2,
        )
    return MeasureEstimate(prefactor * mean, prefactor * se, n_samples, seed)


def mu_region(
    m: SurfaceModel,
    region: Box,
    w_box: Box,
    n_samples: int = 100_000,
    seed: int = 0,
) -> MeasureEstimate:
    """Graph measure of an ambient axis box, integrated over a covering
    W-coordinate box."""
    prefactor = m.split.v_wedge_n_norm * w_box.volume

    def sampler(rng, size):
        w = m.split.W.from_coords(w_box.sample(rng, size))
        s = solve_v_coords(m, w)
        pts = group_product(w, s @ m.split.V.basis)
        inside = region.contains(pts)
        return inside * _alpha_at(m, pts)

    mean, se = mc_mean(sampler, n_samples, seed)
    return MeasureEstimate(prefactor * mean, prefactor * se, n_samples, seed)


def density_ratio(m: SurfaceModel, x: np.ndarray) -> float:
    """Ratio of the horizontal to the V-directional Jacobian at a point."""
    x = np.asarray(x, dtype=float)
    grads = pansu_matrix(m.f, x)
    jv = float(jacobian_v(m.f, x, m.split.V, grads=grads))
    if jv <= DEGENERATE_JACOBIAN:
        raise DegenerateJacobianError("V-Jacobian vanishes at the point")
    return float(jacobian_h(m.f, x, grads=grads)) / jv


def _density_schedule(budget: Budget) -> list[float]:
    return [budget.t0 * budget.gamma**j for j in range(budget.rungs)]


def _rung_precompute(m, x, t, d, n_eval, seed_rung):
    """Shared surface patch samples for every candidate center at one scale."""
    radius = 2.0 * t / _c0_safe(m, d)
    box = _w_sample_box(m, d, radius)
    v_x = m.split.project(x)[1]
    etas = []
    for idx, size in enumerate(chunk_sizes(n_eval, 50_000)):
        etas.append(box.sample(chunk_rng(seed_rung, idx), size))
    eta = m.split.W.from_coords(np.vstack(etas))
    w = group_product(group_product(x, eta), group_inverse(v_x))
    s = solve_v_coords(m, w)
    pts = group_product(w, s @ m.split.V.basis)
    weights = _alpha_at(m, pts)
    prefactor = m.split.v_wedge_n_norm * box.volume
    return pts, weights, prefactor


def federer_density(
    m: SurfaceModel,
    x: np.ndarray,
    d: HomogeneousDistance,
    budget: Budget = BUDGETS["default"],
    seed: int = 0,
) -> DensityProfile:
    """Spherical Federer density profile at a surface point.

    Per scale, the ball-center supremum is searched with seeded multistarts
    on the 0.9-sphere plus the point itself, Nelder-Mead refinement of the
    best starts, and a fresh larger re-evaluation of the winner.  The limit
    is the last rung's supremum; rung-to-rung drift above 5% flags
    non-convergence instead of being averaged away.
    """
    d.require_validated()
    x = np.asarray(x, dtype=float)
    n, k = m.n, m.k
    exponent = 2 * n + 2 - k
    dim = 2 * n + 1
    scales = _density_schedule(budget)
    sups = []
    final_se = 0.0
    for j, t in enumerate(scales):
        seed_rung = int(
            np.random.SeedSequence(entropy=seed, spawn_key=(j,)).generate_state(1)[0]
        )
        pts, weights, prefactor = _rung_precompute(
            m, x, t, d, budget.density_eval_samples, seed_rung
        )

        def value_for(z: np.ndarray, P=pts, A=weights, pref=prefactor, t=t) -> float:
            z = _into_ball(d, np.asarray(z, dtype=float))
            y = group_product(x, dilate(t, z))
            hit = d.distance(y, P) <= t
            return pref * float(np.mean(hit * A)) / t**exponent

        rng = np.random.default_rng(seed_rung + 1)
        starts = [np.zeros(dim)]
        half_h, half_t = d.ball_box_halves(1.0, n)
        while len(starts) < budget.multistarts + 1:
            z = rng.uniform(-1, 1, size=dim)
            z[:-1] *= half_h
            z[-1] *= half_t
            nz = float(d.norm(z))
            if nz > 1e-9:
                starts.append(dilate(0.9 / nz, z))
        scored = sorted(
            ((value_for(z), float(d.norm(z)), i, z) for i, z in enumerate(starts)),
            key=lambda s: (-s[0], s[1]),
        )
        best_val, _, _, best_z = scored[0]
        for sv, _, _, z0 in scored[: budget.density_refine_top]:
            simplex = np.vstack([z0[None, :], z0[None, :] + 0.15 * np.eye(dim)])
            res = minimize(
                lambda z: -value_for(z),
                z0,
                method="Nelder-Mead",
                options={
                    "maxiter": budget.factor_nm_iter,
                    "initial_simplex": simplex,
                    "xatol": 1e-3,
                    "fatol": 1e-4,
                },
            )
            if -res.fun > best_val:
                best_val, best_z = -res.fun, _into_ball(d, res.x)
        y_best = group_product(x, dilate(t, _into_ball(d, best_z)))
        est = mu_ball(m, y_best, t, d, budget.density_final_samples, seed_rung + 2)
        sups.append(est.value / t**exponent)
        final_se = est.std_error / t**exponent
    converged = (
        len(sups) >= 2 and abs(sups[-1] / max(sups[-2], 1e-300) - 1.0) <= 0.05
    )
    return DensityProfile(
        exponent=exponent,
        scales=tuple(scales),
        sup_values=tuple(sups),
        limit=sups[-1],
        std_error=final_se,
        converged=converged,
        seed=seed,
    )


def upper_density(
    m: SurfaceModel,
    x: np.ndarray,
    d: HomogeneousDistance,
    budget: Budget = BUDGETS["default"],
    seed: int = 0,
) -> DensityProfile:
    """Centered density profile: the same schedule with the ball center
    fixed at the point."""
    d.require_validated()
    x = np.asarray(x, dtype=float)
    exponent = 2 * m.n + 2 - m.k
    scales = _density_schedule(budget)
    sups = []
    final_se = 0.0
    for j, t in enumerate(scales):
        seed_rung = int(
            np.random.SeedSequence(entropy=seed, spawn_key=(j, 17)).generate_state(1)[0]
        )
        est = mu_ball(m, x, t, d, budget.density_final_samples, seed_rung)
        sups.append(est.value / t**exponent)
        final_se = est.std_error / t**exponent
    converged = (
        len(sups) >= 2 and abs(sups[-1] / max(sups[-2], 1e-300) - 1.0) <= 0.05
    )
    return DensityProfile(
        exponent=exponent,
        scales=tuple(scales),
        sup_values=tuple(sups),
        limit=sups[-1],
        std_error=final_se,
        converged=converged,
        seed=seed,
    )


@dataclass(frozen=True)
class BlowupRow:
    point: np.ndarray
    federer: float
    beta_tangent: float
    upper: float
    section_at_origin: float
    federer_gap: float
    upper_gap: float
    coincidence_gap: float | None
    passed: bool


@dataclass(frozen=True)
class BlowupReport:
    rows: list[BlowupRow]
    tolerance: float
    passed: bool


def verify_blowup_suite(
    m: SurfaceModel,
    points: np.ndarray,
    d: HomogeneousDistance,
    budget: Budget = BUDGETS["default"],
    seed: int = 0,
    tangent_override: VerticalSubgroup | None = None,
    tolerance: float = 0.05,
) -> BlowupReport:
    """Blow-up table: Federer density against the tangent's spherical
    factor, centered density against the tangent's section at the origin,
    and (for convex-ball distances) the coincidence of the two densities.

    ``tangent_override`` replaces the computed tangent cone everywhere; a
    deliberately wrong plane is the suite's negative control.
    """
    rows = []
    for i, x in enumerate(np.atleast_2d(np.asarray(points, dtype=float))):
        row_seed = int(
            np.random.SeedSequence(entropy=seed, spawn_key=(i, 23)).generate_state(1)[0]
        )
        tan = tangent_override or tangent_cone(m, x).subgroup
        fed = federer_density(m, x, d, budget, row_seed)
        beta = spherical_factor(tan, d, budget, row_seed + 1)
        upper = upper_density(m, x, d, budget, row_seed + 2)
        section = plane_ball_section_area(
            tan, np.zeros(2 * m.n + 1), d, budget.factor_final_samples, row_seed + 3
        )
        federer_gap = abs(fed.limit / beta.value - 1.0)
        upper_gap = abs(upper.limit / section.value - 1.0)
        if d.convex_ball:
            coincidence_gap = abs(fed.limit / max(upper.limit, 1e-300) - 1.0)
        else:
            coincidence_gap = None
        ok = federer_gap <= tolerance and upper_gap <= tolerance
        if coincidence_gap is not None:
            ok = ok and coincidence_gap <= tolerance
        rows.append(
            BlowupRow(
                point=x,
                federer=fed.limit,
                beta_tangent=beta.value,
                upper=upper.limit,
                section_at_origin=section.value,
                federer_gap=federer_gap,
                upper_gap=upper_gap,
                coincidence_gap=coincidence_gap,
                passed=ok,
            )
        )
    return BlowupReport(rows=rows, tolerance=tolerance, passed=all(r.passed for r in rows))


@dataclass(frozen=True)
class IdentityReport:
    max_residual: float
    n_points: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def _domain_grid(m: SurfaceModel, n_points: int, seed: int, shrink: float = 0.5) -> np.ndarray:
    rng = np.random.default_rng(seed)
    coords = m.domain.center + rng.uniform(-1, 1, size=(n_points, m.domain.dim)) * (
        m.domain.half * shrink
    )
    return m.split.W.from_coords(coords)


def verify_claim2_identity(
    m: SurfaceModel, n_points: int = 100, seed: int = 0, tolerance: float = 1e-6
) -> IdentityReport:
    """Jacobian ratio times the wedge norm of V with the tangent equals one
    at surface points."""
    w = _domain_grid(m, n_points, seed)
    pts = graph_map(m, w)
    worst = 0.0
    for x in pts:
        ratio = density_ratio(m, x)
        tan = tangent_cone(m, x)
        wedge = blade_norm(Blade(np.vstack([m.split.V.basis, tan.subgroup.basis])))
        worst = max(worst, abs(ratio * wedge - 1.0))
    return IdentityReport(max_residual=worst, n_points=n_points, tolerance=tolerance)


def verify_integrand_identity(
    m: SurfaceModel, n_points: int = 100, seed: int = 0, tolerance: float = 1e-6
) -> IdentityReport:
    """For orthogonal factorizations the weighted Jacobian ratio matches the
    intrinsic Jacobian of the parametrization."""
    if not m.split.adapted:
        raise ValueError("integrand identity requires an adapted orthogonal split")
    w = _domain_grid(m, n_points, seed)
    pts = graph_map(m, w)
    pref = m.split.v_wedge_n_norm
    worst = 0.0
    for x in pts:
        lhs = pref * density_ratio(m, x)
        rhs = intrinsic_jacobian(intrinsic_differential(m, x))
        worst = max(worst, abs(lhs - rhs))
    return IdentityReport(max_residual=worst, n_points=n_points, tolerance=tolerance)


@dataclass(frozen=True)
class InvarianceRow:
    label: str
    mu_value: float
    mu_std_error: float
    normalized: float


@dataclass(frozen=True)
class InvarianceReport:
    rows: list[InvarianceRow]
    omega: float
    spread: float
    tolerance: float
    passed: bool


def verify_area_invariance(
    models: dict[str, SurfaceModel],
    region: Box,
    d: HomogeneousDistance,
    budget: Budget = BUDGETS["default"],
    seed: int = 0,
    tolerance: float = 0.03,
) -> InvarianceReport:
    """The normalized graph measure of a fixed ambient box must agree across
    defining functions and factorizations of the same surface."""
    some = next(iter(models.values()))
    p = 2 * some.n + 1 - some.k
    omega = constant_spherical_factor(d, p, some.n, budget, seed + 99).value
    out_rows = []
    for i, (label, model) in enumerate(models.items()):
        # the covering W-box comes from the region's corners: the projection
        # is multilinear per coordinate, so corner images hull the shadow
        signs = np.array(list(np.ndindex(*(2,) * region.dim))) * 2 - 1
        corners = region.center + signs * region.half
        w_corners = model.split.W.to_coords(model.split.project(corners)[0])
        lo, hi = w_corners.min(axis=0), w_corners.max(axis=0)
        pad = 0.05 * (hi - lo) + 1e-9
        w_box = Box(center=0.5 * (lo + hi), half=0.5 * (hi - lo) + pad)
        est = mu_region(model, region, w_box, budget.mu_samples, seed + i)
        out_rows.append(
            InvarianceRow(
                label=label,
                mu_value=est.value,
                mu_std_error=est.std_error,
                normalized=est.value / omega,
            )
        )
    vals = np.array([r.normalized for r in out_rows])
    spread = float((vals.max() - vals.min()) / vals.mean())
    return InvarianceReport(
        rows=out_rows,
        omega=omega,
        spread=spread,
        tolerance=tolerance,
        passed=spread <= tolerance,
    )
