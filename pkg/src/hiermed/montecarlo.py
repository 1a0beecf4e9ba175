"""Monte Carlo validation of the analytic prediction MSEs.

Simulates the full hierarchical model (random center intercepts and
effects plus individual noise) and compares the empirical effect
prediction MSE against the analytic criterion value.

Distributional choice: the model itself only fixes means, variances and
uncorrelatedness; the simulator completes it with Gaussian draws, the
conventional choice under which the linear predictor is the best
predictor outright.

Reproducibility contract: replicate j of a run with master seed s draws
from a counter-based Philox stream keyed by (s, j), so results are
independent of evaluation order or any concurrency; per-replicate
statistics are stored and reduced with numpy's pairwise summation, which
is deterministic for a given array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blup import CenterSummaries, blup_weights, predict_scalar
from .criterion import mse_alpha
from .model import ExactDesign, ModelDims, VarianceRatios

__all__ = [
    "SimConfig",
    "SimDataset",
    "McReport",
    "simulate_trial",
    "empirical_mse",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce one simulation study."""

    dims: ModelDims
    ratios: VarianceRatios
    design: ExactDesign
    mu: float = 0.0
    alpha: float = 1.0
    sigma: float = 1.0
    replications: int = 10_000
    master_seed: int = 0

    def __post_init__(self):
        if self.design.dims != self.dims:
            raise ValueError(
                f"design dimensions {self.design.dims} do not match config dimensions {self.dims}"
            )
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "sigma", float(self.sigma))
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValueError(f"residual standard deviation must be positive (got {self.sigma})")
        if not (math.isfinite(self.mu) and math.isfinite(self.alpha)):
            raise ValueError("population means must be finite")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1 (got {self.replications})")


@dataclass(frozen=True)
class SimDataset:
    """One simulated trial: responses plus the true drawn center parameters.

    responses has shape (K, N) with the first n_treatment columns holding
    the treatment group; individuals are exchangeable within groups, so
    sorting them this way loses nothing.
    """

    responses: np.ndarray
    intercepts: np.ndarray
    effects: np.ndarray
    n_treatment: int

    def __post_init__(self):
        y = np.asarray(self.responses, dtype=float)
        mu_i = np.asarray(self.intercepts, dtype=float)
        al_i = np.asarray(self.effects, dtype=float)
        if y.ndim != 2:
            raise ValueError("responses must be a (K, N) array")
        K, N = y.shape
        if mu_i.shape != (K,) or al_i.shape != (K,):
            raise ValueError("center parameters must be length-K vectors")
        if not 1 <= self.n_treatment <= N - 1:
            raise ValueError(
                f"treatment column count must lie in 1..{N - 1} (got {self.n_treatment})"
            )
        object.__setattr__(self, "responses", y)
        object.__setattr__(self, "intercepts", mu_i)
        object.__setattr__(self, "effects", al_i)

    def summaries(self) -> CenterSummaries:
        """Per-center group means of the simulated responses."""
        n = self.n_treatment
        return CenterSummaries(
            treat_mean=self.responses[:, :n].mean(axis=1),
            control_mean=self.responses[:, n:].mean(axis=1),
        )


def _replicate_rng(master_seed: int, replicate_index: int) -> np.random.Generator:
    # 128-bit Philox key: low word the seed, high word the replicate counter.
    key = (int(master_seed) & _MASK64) | ((int(replicate_index) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def simulate_trial(config: SimConfig, replicate_index: int = 0) -> SimDataset:
    """Draw one full trial; bit-identical for the same (master_seed, replicate_index).

    Draw order is fixed: K intercepts, then K effects, then the K x N
    residual block in row-major order.
    """
    rng = _replicate_rng(config.master_seed, replicate_index)
    K, N = config.dims.K, config.dims.N
    n = config.design.n
    sigma = config.sigma
    intercepts = config.mu + math.sqrt(config.ratios.u) * sigma * rng.standard_normal(K)
    effects = config.alpha + math.sqrt(config.ratios.v) * sigma * rng.standard_normal(K)
    responses = intercepts[:, None] + sigma * rng.standard_normal((K, N))
    responses[:, :n] += effects[:, None]
    return SimDataset(
        responses=responses, intercepts=intercepts, effects=effects, n_treatment=n
    )


@dataclass(frozen=True)
class McReport:
    """Empirical vs analytic effect-prediction MSE, in residual-variance units.

    The trace splits into an averaging part (squared error of the mean
    prediction, scaled by K) and a centering part (squared error of the
    deviations from the mean); their analytic counterparts are the two
    eigenvalue coefficients of the MSE matrix.  With a single replication
    the standard error is reported as infinity.
    """

    replications: int
    empirical_trace: float
    analytic_trace: float
    relative_error: float
    standard_error: float
    empirical_average_part: float
    analytic_average_part: float
    empirical_centering_part: float
    analytic_centering_part: float
    within_three_se: bool


def empirical_mse(config: SimConfig) -> McReport:
    """Estimate the effect-prediction MSE trace by simulation.

    Each replicate simulates a trial, predicts with the true variance
    ratios (known-variance prediction, no estimation loop), and records
    the normalized squared prediction error of the effects.  The caller
    is responsible for choosing enough replications; the report always
    carries the standard error of the estimate.
    """
    dims, ratios, design = config.dims, config.ratios, config.design
    weights = blup_weights(dims, ratios, design)
    K = dims.K
    sigma2 = config.sigma * config.sigma
    reps = config.replications

    traces = np.empty(reps)
    avg_parts = np.empty(reps)
    for j in range(reps):
        dataset = simulate_trial(config, j)
        predicted = predict_scalar(dataset.summaries(), weights)
        err = predicted.effect - dataset.effects
        total = float(err @ err)
        along_mean = err.sum() ** 2 / K
        traces[j] = total / sigma2
        avg_parts[j] = along_mean / sigma2
    ctr_parts = traces - avg_parts

    matrix = mse_alpha(dims, ratios, design.as_approx())
    analytic = matrix.trace
    empirical = float(np.mean(traces))
    if reps > 1:
        std_err = float(np.std(traces, ddof=1) / math.sqrt(reps))
    else:
        std_err = math.inf
    deviation = abs(empirical - analytic)
    return McReport(
        replications=reps,
        empirical_trace=empirical,
        analytic_trace=analytic,
        relative_error=deviation / analytic,
        standard_error=std_err,
        empirical_average_part=float(np.mean(avg_parts)),
        analytic_average_part=matrix.a,
        empirical_centering_part=float(np.mean(ctr_parts)),
        analytic_centering_part=(K - 1) * matrix.b,
        within_three_se=bool(deviation <= 3.0 * std_err),
    )
