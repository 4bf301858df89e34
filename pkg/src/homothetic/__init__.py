"""Twisted discrete exterior calculus and penalized interface solvers."""

from .errors import ConfigurationError, NumericalError
from .grid import (
    IntervalGrid,
    RadialGrid,
    SquareGrid,
    TorusMesh,
    build_interval_grid,
    build_radial_grid,
    build_square_grid,
    build_torus_mesh,
    incidence_matrices,
    mass_matrices,
)
from .scale import (
    CircleSurface,
    CutoffProfile,
    PointSurface,
    SphereSurface,
    branch_vanishing_orders,
    distance_field,
    indicial_roots,
    lambda_coefficients,
    profile_eval,
    scale_field,
)
from .twisted import (
    Cochain,
    DressedComplex,
    chain_map_check,
    cohomology_dims,
    dress_complex,
    harmonic_space,
    hodge_decompose,
    random_smooth_lambda,
    twisted_codifferential,
    twisted_d,
    twisted_laplacian,
)
from .solver import (
    PenalizedProblem,
    SolveResult,
    assemble_operator,
    distributional_identity_check,
    harmonic_extension,
    jump_diagnostics,
    solve,
)
from .experiments import (
    PointSourceSpec,
    branch_exponent_measure,
    field_energy,
    penalization_convergence,
    point_source_run,
)

__version__ = "0.1.0"
