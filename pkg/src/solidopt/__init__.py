"""Bayesian optimization with global and local variable selection for
expensive noisy black-box functions on the unit cube."""

from solidopt.acquisition import (
    AeiObjective,
    CandidateSet,
    aei,
    aei_gradient,
    build_active_region,
    build_candidates,
    build_restricted_region,
    choose_candidate_set,
    ei,
    line_search_maximize,
    select_incumbent,
)
from solidopt.design import maximin_lhs, random_lhs, rescale_to_box, truncated_normal_cloud
from solidopt.errors import ConfigError, EmptyModelError, NotPositiveDefiniteError
from solidopt.gp import (
    FittedSurface,
    GpParams,
    MarginalSurface,
    build_surface,
    kernel,
    log_likelihood,
    marginal_surface,
    predict,
    predict_gradients,
)
from solidopt.kernels import BACKEND
from solidopt.loop import RunConfig, RunTrace, improvement, overall_improvement, run_baseline, run_solid
from solidopt.mcmc import ChainConfig, PosteriorDraws, Priors, run_chain
from solidopt.optimum import estimate_chi_marginal, estimate_chi_t, maximize_in_box
from solidopt.region import SearchRegion
from solidopt.testbed import (
    Objective,
    SmoothedDataset,
    beach_f,
    cv_bandwidth,
    drum_f,
    load_dataset,
    make_objective,
    noisy_eval,
    simba_f,
    smoothed_objective,
    toy_f,
)
from solidopt.varsel import apply_global_selection, global_activity, local_importance

__version__ = "0.1.0"
