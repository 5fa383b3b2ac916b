"""Heisenberg group calculus, homogeneous metrics, intrinsic graphs and
surface-measure verification suites."""

from .core import (
    ALG_TOL,
    HeisenbergBasis,
    bracket,
    dilate,
    dim_n,
    extend_heisenberg_basis,
    group_inverse,
    group_product,
    jmap,
    omega,
    validate_group_axioms,
)
from .differential import (
    DefiningFunction,
    HHomomorphism,
    horizontal_derivative,
    horizontal_gradient,
    jacobian_h,
    jacobian_v,
    pansu_differential,
    pansu_matrix,
)
from .metrics import (
    HomogeneousDistance,
    ball_convexity_probe,
    calibrate_constant,
    dinf_distance,
    dinf_norm,
    distance_from_config,
    koranyi_distance,
    koranyi_norm,
    validate_distance,
)
from .multivec import Blade, blade_inner, blade_norm, hodge_star
from .measure import (
    BUDGETS,
    Budget,
    DensityProfile,
    MeasureEstimate,
    TangentCone,
    density_ratio,
    federer_density,
    mu_ball,
    mu_region,
    plane_ball_section_area,
    spherical_factor,
    tangent_cone,
    upper_density,
    verify_area_invariance,
    verify_blowup_suite,
    verify_claim2_identity,
    verify_integrand_identity,
)
from .sampling import Box
from .subgroups import (
    HorizontalSubgroup,
    Split,
    VerticalSubgroup,
    coordinate_split,
    estimate_c0,
    orthogonal_split,
    restricted_projection_ratio,
    verify_projection_lemma,
)
from .surfaces import (
    IntrinsicDifferential,
    SurfaceModel,
    graph_map,
    implicit_solve,
    intrinsic_derivatives,
    intrinsic_differential,
    intrinsic_jacobian,
    translated_phi,
    verify_chain_rule,
    verify_uid,
)

__version__ = "0.1.0"
