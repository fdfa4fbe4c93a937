"""Gaussian volumes, surface and cone measures, and Minkowski-type solvers
for polyhedral pseudo-cones determined by a finite set of directions."""

__version__ = "0.1.0"

from .errors import (
    BadReferenceDirection,
    DegenerateMeasure,
    DimensionMismatch,
    DirectionOutsideCone,
    EmptyOmegaC,
    InactiveFacetWarning,
    InconsistentDualData,
    InfeasibleWeight,
    InvalidOptions,
    LPInfeasible,
    LPUnbounded,
    MismatchedOmega,
    NotFullDimensional,
    NotPointed,
    ParseError,
    PeakNotFound,
    PseudoConeError,
    StepTooLarge,
    ValidationError,
    VerificationFailed,
    ZeroVolume,
)
from .geometry import (
    ConvexCone,
    DirectionSet,
    WulffShape,
    build_cone,
    combine_support,
    cone_contains,
    contains,
    direction_set,
    dual_contains,
    effective_support,
    facet_arcs,
    make_wulff,
    normals_from_generators_2d,
    radial,
    scale_shape,
    wulff_vertices,
)
from .gaussian import (
    MCConfig,
    MCEstimate,
    boundary_gauss_integral_2d,
    cone_gauss_volume_exact,
    covolume,
    covolume_radial,
    exact_estimate,
    facet_surface,
    facet_surface_exact,
    gauss_volume,
    gauss_volume_cone,
    gauss_volume_direct,
    halfspace_gauss_volume,
    phi_cdf,
    phi_inv,
    radial_mass,
    sector_cone_volume,
    surface_radial,
)
from .measures import (
    DiscreteMeasure,
    cone_measure,
    functional_I,
    functional_L,
    mixed_volume,
    normalization_c,
    surface_measure,
    surface_measure_exact,
)
from .solver import (
    FeasibilityScreen,
    SolveOptions,
    SolveReport,
    feasibility_screen,
    residual,
    solve_gaussian_minkowski,
    solve_log_minkowski,
)
from .checks import (
    CheckReport,
    NonUniquenessPair,
    check_cone_volume_bound,
    check_ehrhard_wulff,
    check_log_concavity,
    check_minkowski_inequality,
    check_mixed_minkowski,
    check_mixed_volume_bound,
    check_variational_log,
    check_variational_volume,
    find_nonuniqueness,
    octant_cone,
    quarter_cone,
    random_cone,
    random_direction_set,
    random_wulff,
    random_wulff_pair,
    square_cone,
    uniqueness_compare,
)
from .cli import ProblemFile, RunRecord, emit_scan, parse_problem, run
