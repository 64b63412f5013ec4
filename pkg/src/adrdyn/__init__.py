"""Adaptive Douglas-Rachford dynamical systems: operators, integrators and rate diagnostics."""

from .adr import Case, DROperator, DRParams, ValidationReport, apply_averaged, apply_dr, lipschitz_zeta, residual, shadow, validate
from .diagnostics import (
    RateReport,
    check_regularity_bound,
    empirical_lipschitz,
    estimate_kappa,
    fit_exponential,
    fit_power,
    predict_rate,
)
from .dynamics import (
    PerturbationSchedule,
    StepPolicy,
    ThetaSchedule,
    Trajectory,
    integrate,
    km_iterate,
    step_policy_capped,
    step_policy_fixed,
)
from .operators import (
    OperatorSpec,
    ProxFunction,
    affine_operator,
    prox_l1,
    prox_quadratic,
    relaxed_resolvent,
    resolvent,
    spec_from_prox,
    zero_operator,
)
from .problems import ProblemSpec, brute_force_minimizer, catalog, problem_affine, problem_quad_l1, problem_quad_quad

__version__ = "0.1.0"
