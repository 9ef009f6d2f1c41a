"""Bounds and simulation for self-training on a two-component Gaussian mixture.

The package has two halves that meet in the middle:

* an analytic half (``specfn``, ``quadrature``, ``evolution``,
  ``divergence``, ``bounds``) that evaluates information-theoretic
  upper bounds on the generalization error of iterative pseudo-label
  self-training, and
* an empirical half (``simulator``) that runs the same self-training
  procedure on sampled data so the two can be compared.

``cli`` exposes both as the ``gmm-selftrain`` command.
"""

from .bounds import (
    BOUND_METHODS,
    BoundConfig,
    BoundCurve,
    CrossoverResult,
    ExpectationResult,
    bound_curve,
    c_tilde1,
    delta_rd,
    expect_over_init,
    gen0_bound,
    gen01_crossover,
    gen1_bound_taylor,
    gen_t_bound,
    gen_t_bound_reuse,
    mi_theta0_sample,
    solve_r,
    sub_gaussian_constants,
)
from .divergence import GsigmaQuery, g_sigma, g_sigma_mc, g_sigma_mc_fulldim, g_sigma_result
from .evolution import (
    InitDecomposition,
    MixtureParams,
    alpha_of,
    f_sigma,
    f_sigma_iter,
    f_tilde,
    f_tilde_iter,
)
from .quadrature import IntegrationResult, QuadratureConvergenceError, integrate_1d, integrate_2d
from .simulator import (
    TrialConfig,
    TrialResults,
    bayes_error,
    empirical_risk,
    erm_initial,
    erm_refine,
    erm_refine_reuse,
    loss,
    population_risk,
    population_risk_mc,
    pseudo_label,
    run_trials,
    sample_labelled,
)
from .specfn import q_function, std_normal_cdf, std_normal_pdf, std_normal_quantile
from .svg import render_line_svg

__version__ = "0.1.0"

__all__ = [
    "BOUND_METHODS",
    "BoundConfig",
    "BoundCurve",
    "CrossoverResult",
    "ExpectationResult",
    "bound_curve",
    "GsigmaQuery",
    "InitDecomposition",
    "IntegrationResult",
    "MixtureParams",
    "QuadratureConvergenceError",
    "TrialConfig",
    "TrialResults",
    "alpha_of",
    "bayes_error",
    "c_tilde1",
    "delta_rd",
    "empirical_risk",
    "erm_initial",
    "erm_refine",
    "erm_refine_reuse",
    "expect_over_init",
    "f_sigma",
    "f_sigma_iter",
    "f_tilde",
    "f_tilde_iter",
    "g_sigma",
    "g_sigma_mc",
    "g_sigma_mc_fulldim",
    "g_sigma_result",
    "gen0_bound",
    "gen01_crossover",
    "gen1_bound_taylor",
    "gen_t_bound",
    "gen_t_bound_reuse",
    "integrate_1d",
    "integrate_2d",
    "loss",
    "mi_theta0_sample",
    "population_risk",
    "population_risk_mc",
    "pseudo_label",
    "q_function",
    "render_line_svg",
    "run_trials",
    "sample_labelled",
    "solve_r",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
    "sub_gaussian_constants",
]
