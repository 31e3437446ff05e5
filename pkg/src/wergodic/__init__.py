"""Wasserstein ergodicity lab: metrics on measures, Markov kernels, Monte Carlo
estimators of ergodic rates, and exact oracles for finite chains."""

from .errors import *  # noqa: F401,F403
from .measures import (
    DiscreteMeasure,
    EmpiricalMeasure,
    MetricSpace,
    TransportPlan,
    discrete_metric_space,
    finite_space,
    interval_space,
    lebesgue_midpoints,
    path_space,
    real_line,
    truncate_metric,
    tv_discrete,
    w1_1d,
    w1_dual,
    w1_exact,
    wasserstein,
)
from .kernels import (
    Kernel,
    PathSegment,
    Trajectory,
    ar1_kernel,
    default_diffusion,
    delay_sde_kernel,
    dyadic_exact_marginal,
    dyadic_kernel,
    finite_kernel,
    marginal_sample,
    propagate,
    simulate,
)
from .oracle import (
    FiniteChain,
    enumerate_time_averages,
    exact_lp_error,
    exact_marginal_w1,
    exact_second_moment,
    matrix_power_marginal,
    stationary_distribution,
)
from .ergodic import (
    ConvergenceCurve,
    Estimate,
    RateFit,
    TestFunction,
    contraction_factor,
    invariance_check,
    lipschitz_constant_estimate,
    lp_error,
    lp_error_curve,
    marginal_convergence,
    rate_fit,
    second_moment_gap,
    synchronous_coupling_curve,
    time_average,
    uniform_condition,
)

__version__ = "0.1.0"
