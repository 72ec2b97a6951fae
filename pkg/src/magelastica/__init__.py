"""Shape programming of a permanently magnetized planar cantilever.

Library + CLI that, given target shapes for a clamped magneto-elastic beam,
computes the magnetization angle profile (the design) and the applied-field
pairs (the controls) whose equilibrium shapes best match the targets, with
independent analytic and gradient-based oracles auditing every solve.
"""

from .bvp import (
    PointwiseSource,
    SLSpectrum,
    SolveOptions,
    double_integral_representation,
    poincare_constant_check,
    sl_eigen,
    solve_linear_bvp,
    solve_nonlinear_bvp,
)
from .analysis import (
    BranchPoint,
    RegularityReport,
    SweepRow,
    attainable_design,
    bifurcation_profile,
    bifurcation_tip,
    complete_elliptic_K,
    epsilon_sweep,
    regularity_check,
)
from .errors import (
    BoundaryMismatchError,
    CapExceededWarning,
    ConfigError,
    HTooSmallError,
    LineSearchError,
    MagelasticaError,
    NoNontrivialBranchError,
    NonConvergenceError,
    NonFiniteValueError,
    SingularOperatorError,
)
from .estimator import ShapeProgrammer
from .grid import (
    Grid,
    ScalarField,
    derivative,
    h1_seminorm,
    integral,
    l2_norm,
    read_field_csv,
    second_derivative_interior,
    sup_norm,
    write_field_csv,
)
from .magnetics import (
    POINCARE_CONSTANT,
    UNIQUENESS_THRESHOLD,
    Control,
    ControlSet,
    PhysicalScaling,
    control_update,
    curve,
    design_update,
    energy,
    m_derivative,
    renormalize,
    solve_adjoint,
    solve_state,
    state_residual,
)
from .presets import preset_field
from .programming import (
    DEFAULT_CAP,
    BoundsCheck,
    DesignState,
    ProblemSpec,
    SolveReport,
    attainment_error,
    bounds_audit,
    cost,
    direct_minimize,
    equation_residuals,
    inner_loop,
    outer_loop,
    reduced_cost_gradient,
    residual_cost,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryMismatchError",
    "BoundsCheck",
    "BranchPoint",
    "CapExceededWarning",
    "ConfigError",
    "Control",
    "ControlSet",
    "DEFAULT_CAP",
    "DesignState",
    "Grid",
    "HTooSmallError",
    "LineSearchError",
    "MagelasticaError",
    "NoNontrivialBranchError",
    "NonConvergenceError",
    "NonFiniteValueError",
    "POINCARE_CONSTANT",
    "PhysicalScaling",
    "PointwiseSource",
    "ProblemSpec",
    "RegularityReport",
    "SLSpectrum",
    "ScalarField",
    "ShapeProgrammer",
    "SingularOperatorError",
    "SolveOptions",
    "SolveReport",
    "SweepRow",
    "UNIQUENESS_THRESHOLD",
    "attainable_design",
    "attainment_error",
    "bifurcation_profile",
    "bifurcation_tip",
    "bounds_audit",
    "complete_elliptic_K",
    "control_update",
    "cost",
    "curve",
    "derivative",
    "design_update",
    "direct_minimize",
    "double_integral_representation",
    "energy",
    "epsilon_sweep",
    "equation_residuals",
    "h1_seminorm",
    "inner_loop",
    "integral",
    "l2_norm",
    "m_derivative",
    "outer_loop",
    "poincare_constant_check",
    "preset_field",
    "read_field_csv",
    "reduced_cost_gradient",
    "regularity_check",
    "renormalize",
    "residual_cost",
    "second_derivative_interior",
    "sl_eigen",
    "solve_adjoint",
    "solve_linear_bvp",
    "solve_nonlinear_bvp",
    "solve_state",
    "state_residual",
    "sup_norm",
    "write_field_csv",
]
