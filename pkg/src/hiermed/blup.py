"""Best linear unbiased prediction of center intercepts and treatment effects.

The predictor for each center is a weighted compromise between the
center's own least-squares estimate and the population estimate pooled
across all centers; the weights depend only on (K, N, n) and the variance
ratios, never on the observed responses.

Two equivalent computation routes are provided and cross-check each
other: closed-form scalar weights applied to group means, and the
per-center 2x2 linear system in matrix form.  Predictions consume group
means only, because the predictors depend on the data through the four
means per center alone; raw-response ingestion lives in the simulation
and CLI layers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ExactDesign, ModelDims, VarianceRatios

__all__ = [
    "BlupWeights",
    "CenterSummaries",
    "CenterPredictions",
    "blup_weights",
    "individual_estimates",
    "population_blue",
    "predict_scalar",
    "predict_matrix",
]


@dataclass(frozen=True)
class BlupWeights:
    """Shrinkage coefficients of the scalar predictor form.

    All four weights lie in [0, 1].  delta is the common positive
    denominator (N*u + 1)*(n*v + 1) - n^2*u*v, computed in the expanded
    form n*u*v*(N - n) + N*u + n*v + 1 which is a sum of nonnegative
    terms and therefore free of cancellation.

    The intercept predictor is
        c0*(YiT - Y.T) + c*YiC + (1 - c)*Y.C
    and the treatment-effect predictor is
        c1*YiT + (1 - c1)*Y.T - (1 - c2)*YiC - c2*Y.C,
    where YiT/YiC are the per-center treatment/control means and Y.T/Y.C
    the overall ones.  Note the control weights of the effect predictor:
    expanding the matrix form places (1 - c2) = n*u*v*(N - n)/delta on
    the per-center mean and c2 = (N*u + n*v + 1)/delta on the overall
    mean.  The homogeneous limit u = v = 0 then correctly collapses to
    the pooled estimate Y.T - Y.C.
    """

    c0: float
    c: float
    c1: float
    c2: float
    delta: float


def blup_weights(dims: ModelDims, ratios: VarianceRatios, design: ExactDesign) -> BlupWeights:
    """Closed-form shrinkage weights for an exact allocation."""
    N, n = dims.N, design.n
    u, v = ratios.u, ratios.v
    delta = n * u * v * (N - n) + N * u + n * v + 1.0
    c0 = n * u / delta
    c = u * (N - n) * (n * v + 1.0) / delta
    c1 = n * v * (u * (N - n) + 1.0) / delta
    c2 = (N * u + n * v + 1.0) / delta
    return BlupWeights(c0=c0, c=c, c1=c1, c2=c2, delta=delta)


@dataclass(frozen=True)
class CenterSummaries:
    """Per-center treatment and control group means, one entry per center.

    Overall means are always the arithmetic average of the per-center
    means, so they are computed on demand rather than stored.
    """

    treat_mean: np.ndarray
    control_mean: np.ndarray

    def __post_init__(self):
        tm = np.asarray(self.treat_mean, dtype=float)
        cm = np.asarray(self.control_mean, dtype=float)
        if tm.ndim != 1 or cm.ndim != 1 or tm.shape != cm.shape:
            raise ValueError(
                f"group means must be two 1-d arrays of equal length "
                f"(got shapes {tm.shape} and {cm.shape})"
            )
        if tm.size < 1:
            raise ValueError("summaries must cover at least one center")
        if not (np.all(np.isfinite(tm)) and np.all(np.isfinite(cm))):
            raise ValueError("group means must be finite")
        object.__setattr__(self, "treat_mean", tm)
        object.__setattr__(self, "control_mean", cm)

    @property
    def n_centers(self) -> int:
        return self.treat_mean.size

    @property
    def overall_treat_mean(self) -> float:
        return float(np.mean(self.treat_mean))

    @property
    def overall_control_mean(self) -> float:
        return float(np.mean(self.control_mean))


@dataclass(frozen=True)
class CenterPredictions:
    """Per-center predicted (intercept, treatment effect) pairs."""

    intercept: np.ndarray
    effect: np.ndarray

    def __post_init__(self):
        ic = np.asarray(self.intercept, dtype=float)
        ef = np.asarray(self.effect, dtype=float)
        if ic.ndim != 1 or ef.ndim != 1 or ic.shape != ef.shape:
            raise ValueError("predictions must be two 1-d arrays of equal length")
        object.__setattr__(self, "intercept", ic)
        object.__setattr__(self, "effect", ef)

    @property
    def n_centers(self) -> int:
        return self.intercept.size


def individual_estimates(summaries: CenterSummaries) -> CenterPredictions:
    """Per-center least squares: intercept = control mean, effect = mean difference."""
    return CenterPredictions(
        intercept=summaries.control_mean.copy(),
        effect=summaries.treat_mean - summaries.control_mean,
    )


def population_blue(summaries: CenterSummaries) -> tuple[float, float]:
    """Pooled estimate of the population (intercept, effect) from overall means."""
    mu0 = summaries.overall_control_mean
    return mu0, summaries.overall_treat_mean - mu0


def predict_scalar(summaries: CenterSummaries, weights: BlupWeights) -> CenterPredictions:
    """Apply the scalar weight form to group means.

    The weights must have been computed for the same (dims, ratios,
    design) that produced the summaries.
    """
    tm, cm = summaries.treat_mean, summaries.control_mean
    yT, yC = summaries.overall_treat_mean, summaries.overall_control_mean
    c0, c, c1, c2 = weights.c0, weights.c, weights.c1, weights.c2
    intercept = c0 * (tm - yT) + c * cm + (1.0 - c) * yC
    effect = c1 * tm + (1.0 - c1) * yT - (1.0 - c2) * cm - c2 * yC
    return CenterPredictions(intercept=intercept, effect=effect)


def predict_matrix(
    summaries: CenterSummaries,
    dims: ModelDims,
    ratios: VarianceRatios,
    design: ExactDesign,
) -> CenterPredictions:
    """Per-center 2x2 linear-system route; cross-check for predict_scalar.

    Solves (M + D^-1) b_i = M b_ind_i + D^-1 b_0 for every center, where
    M is the within-center moment matrix and D = diag(u, v).  Requires
    u > 0 and v > 0 so that D is invertible; at the boundary use
    predict_scalar, whose weights are continuous there.  The 2x2 system
    is solved by explicit cofactor inversion.
    """
    u, v = ratios.u, ratios.v
    if u == 0.0 or v == 0.0:
        raise ValueError(
            "dispersion matrix is singular for u = 0 or v = 0; "
            "use predict_scalar for the boundary case"
        )
    N, n = float(dims.N), float(design.n)

    ind = individual_estimates(summaries)
    b_ind = np.vstack([ind.intercept, ind.effect])  # shape (2, K)
    mu0, alpha0 = population_blue(summaries)

    # rhs = M @ b_ind + D^-1 @ b_0, with M = [[N, n], [n, n]]
    rhs0 = N * b_ind[0] + n * b_ind[1] + mu0 / u
    rhs1 = n * b_ind[0] + n * b_ind[1] + alpha0 / v

    a11 = N + 1.0 / u
    a12 = n
    a22 = n + 1.0 / v
    det = a11 * a22 - a12 * a12
    intercept = (a22 * rhs0 - a12 * rhs1) / det
    effect = (a11 * rhs1 - a12 * rhs0) / det
    return CenterPredictions(intercept=intercept, effect=effect)
