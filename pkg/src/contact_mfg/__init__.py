"""Weak KAM solvers for contact Hamilton-Jacobi equations and mean field games on the circle."""

from .exceptions import (
    AssumptionViolation,
    ConfigError,
    ContactMFGError,
    DivergenceError,
    EmptyKSetError,
    SchemeError,
)
from .grid import (
    ContactState,
    GridFunction,
    GridMeasure,
    PeriodicGrid,
    PhaseMeasure,
    d1_distance,
    gradient,
    interpolate,
    measure_integral,
    pushforward,
    quadrature,
)
from .model import (
    Bounds,
    ContactModel,
    Coupling,
    Func1D,
    Theta,
    WrappedGaussian,
    check_assumptions,
    compute_bounds,
    eval_H,
    eval_L,
    eval_partials,
    solve_a_m,
)
from .weak_kam import (
    SemigroupConfig,
    WeakKamSolution,
    backward_step,
    critical_value,
    finite_action,
    forward_step,
    frozen_level_solution,
    solve_u_minus,
    solve_u_plus,
)
from .dynamics import FlowConfig, fixed_point_drift, integrate_orbit, invariance_check, vector_field
from .mather import KSet, aubry_proxy, build_mather_measure, extract_kset
from .mfg import (
    EquilibriumConfig,
    EquilibriumResult,
    best_response,
    continuity_residual,
    hj_residual,
    iterate_equilibrium,
)
from .expr import parse_expression
from .estimators import ContactHJSolver, ContactMFG

__version__ = "0.1.0"
