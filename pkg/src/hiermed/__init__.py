"""Shrinkage prediction and criterion-optimal allocation for multi-center trials.

The package covers the full chain for a two-level random-coefficient
model of a two-arm multi-center trial: immutable domain types, best
linear unbiased prediction of center-specific intercepts and treatment
effects, the prediction-MSE matrices and their trace criterion, search
for the criterion-optimal treatment allocation rate (continuous and
exact), sweep tables over rescaled variance ratios, and a Monte Carlo
harness validating the analytic formulas.
"""

from .blup import (
    BlupWeights,
    CenterPredictions,
    CenterSummaries,
    blup_weights,
    individual_estimates,
    population_blue,
    predict_matrix,
    predict_scalar,
)
from .criterion import (
    CompoundSymmetricMatrix,
    CriterionValue,
    FullMseMatrix,
    a_criterion,
    efficiency,
    mse_alpha,
    mse_full,
)
from .model import (
    ApproxDesign,
    ExactDesign,
    ModelDims,
    MomentMatrix2,
    VarianceRatios,
    information_matrix_approx,
    information_matrix_exact,
)
from .montecarlo import McReport, SimConfig, SimDataset, empirical_mse, simulate_trial
from .optimizer import (
    Optimum,
    SweepRow,
    SweepSpec,
    adjacent_exact_designs,
    brute_force_exact,
    halfstep_grid,
    optimal_exact,
    optimize_allocation,
    rescale_ratio,
    run_sweep,
    unrescale_ratio,
)

__version__ = "0.1.0"

__all__ = [
    "ApproxDesign",
    "BlupWeights",
    "CenterPredictions",
    "CenterSummaries",
    "CompoundSymmetricMatrix",
    "CriterionValue",
    "ExactDesign",
    "FullMseMatrix",
    "McReport",
    "ModelDims",
    "MomentMatrix2",
    "Optimum",
    "SimConfig",
    "SimDataset",
    "SweepRow",
    "SweepSpec",
    "VarianceRatios",
    "a_criterion",
    "adjacent_exact_designs",
    "blup_weights",
    "brute_force_exact",
    "efficiency",
    "empirical_mse",
    "halfstep_grid",
    "individual_estimates",
    "information_matrix_approx",
    "information_matrix_exact",
    "mse_alpha",
    "mse_full",
    "optimal_exact",
    "optimize_allocation",
    "population_blue",
    "predict_matrix",
    "predict_scalar",
    "rescale_ratio",
    "run_sweep",
    "simulate_trial",
    "unrescale_ratio",
]
