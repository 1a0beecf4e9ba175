"""Prediction MSE matrices and the allocation criterion.

Every matrix here is reported in units of the residual variance: the
residual variance is a common positive factor of all prediction MSEs and
therefore drops out of the optimization.

The MSE matrix of the per-center effect predictions has a two-projector
compound-symmetric structure: a population part acting on the all-ones
direction and a shrinkage part acting on its orthogonal complement.  The
allocation criterion is its trace, i.e. the summed per-center prediction
MSE.  Compound-symmetric matrices are stored as (a, b, K) coefficients,
never as dense arrays, so traces and eigenvalues are exact at any K;
densification exists only for cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ApproxDesign, ExactDesign, ModelDims, VarianceRatios, information_matrix_exact

__all__ = [
    "CompoundSymmetricMatrix",
    "FullMseMatrix",
    "CriterionValue",
    "mse_full",
    "mse_alpha",
    "a_criterion",
    "efficiency",
]


@dataclass(frozen=True)
class CompoundSymmetricMatrix:
    """K x K matrix a * (1/K) J + b * (I - (1/K) J), J the all-ones matrix.

    Eigenvalues are exactly a (once, eigenvector all-ones) and b (K - 1
    times, the centered complement).
    """

    a: float
    b: float
    K: int

    def __post_init__(self):
        if self.a < 0.0 or self.b < 0.0:
            raise ValueError(f"coefficients must be nonnegative (got a={self.a}, b={self.b})")
        if self.K < 1:
            raise ValueError(f"dimension K must be >= 1 (got {self.K})")

    @property
    def trace(self) -> float:
        return self.a + (self.K - 1) * self.b

    def eigenvalues(self) -> np.ndarray:
        """All K eigenvalues in ascending order: {a once, b with multiplicity K-1}."""
        return np.sort(np.concatenate([[self.a], np.full(self.K - 1, self.b)]))

    def dense(self) -> np.ndarray:
        """Materialize the K x K matrix; intended for cross-checks only."""
        avg = np.full((self.K, self.K), 1.0 / self.K)
        return self.a * avg + self.b * (np.eye(self.K) - avg)


@dataclass(frozen=True)
class FullMseMatrix:
    """Prediction MSE of all K (intercept, effect) pairs, in residual-variance units.

    Represents the 2K x 2K matrix
        (1/K) J (x) pop_block  +  (I - (1/K) J) (x) dev_block,
    where pop_block is the inverse moment matrix (population estimation
    error) and dev_block the shrinkage block including the inverse
    dispersion.  Only the two 2x2 blocks are stored.
    """

    pop_block: np.ndarray
    dev_block: np.ndarray
    K: int

    def __post_init__(self):
        pop = np.asarray(self.pop_block, dtype=float)
        dev = np.asarray(self.dev_block, dtype=float)
        if pop.shape != (2, 2) or dev.shape != (2, 2):
            raise ValueError("blocks must be 2x2 matrices")
        object.__setattr__(self, "pop_block", pop)
        object.__setattr__(self, "dev_block", dev)
        if self.K < 1:
            raise ValueError(f"dimension K must be >= 1 (got {self.K})")

    def effect_mse(self) -> CompoundSymmetricMatrix:
        """MSE matrix of the effect predictions: the (2,2) entries of both blocks."""
        return CompoundSymmetricMatrix(
            a=float(self.pop_block[1, 1]), b=float(self.dev_block[1, 1]), K=self.K
        )

    def intercept_mse(self) -> CompoundSymmetricMatrix:
        """MSE matrix of the intercept predictions: the (1,1) entries of both blocks."""
        return CompoundSymmetricMatrix(
            a=float(self.pop_block[0, 0]), b=float(self.dev_block[0, 0]), K=self.K
        )

    def dense(self) -> np.ndarray:
        """Materialize the 2K x 2K matrix; intended for cross-checks only."""
        avg = np.full((self.K, self.K), 1.0 / self.K)
        return np.kron(avg, self.pop_block) + np.kron(np.eye(self.K) - avg, self.dev_block)


@dataclass(frozen=True)
class CriterionValue:
    """Trace of the effect-prediction MSE matrix, in residual-variance units."""

    phi: float

    def __post_init__(self):
        if not (math.isfinite(self.phi) and self.phi > 0.0):
            raise ValueError(f"criterion value must be finite and positive (got {self.phi})")

    def __float__(self) -> float:
        return self.phi


def mse_full(dims: ModelDims, ratios: VarianceRatios, design: ExactDesign) -> FullMseMatrix:
    """Full prediction MSE for an exact allocation.

    Requires u > 0 and v > 0 because the shrinkage block contains the
    inverse dispersion matrix.  The trace-only route (mse_alpha,
    a_criterion) stays finite at the boundary instead.
    """
    u, v = ratios.u, ratios.v
    if u == 0.0 or v == 0.0:
        raise ValueError(
            "dispersion matrix is singular for u = 0 or v = 0; "
            "use mse_alpha / a_criterion for the boundary case"
        )
    m = information_matrix_exact(design)
    pop = m.inverse().as_array()
    shrunk = type(m)(m.m11 + 1.0 / u, m.m12, m.m22 + 1.0 / v)
    dev = shrunk.inverse().as_array()
    return FullMseMatrix(pop_block=pop, dev_block=dev, K=dims.K)


def mse_alpha(
    dims: ModelDims, ratios: VarianceRatios, design: ApproxDesign
) -> CompoundSymmetricMatrix:
    """Effect-prediction MSE for a continuous allocation rate.

    a = 1 / (N w (1 - w)) is the population part; the shrinkage part is
        b = v (N u + 1) / ((N u + 1)(N w v + 1) - N^2 w^2 u v).
    The denominator is evaluated in the expanded form
    N^2 w u v (1 - w) + N u + N w v + 1, a sum of nonnegative terms, so
    it is provably positive for w in (0, 1) and free of cancellation.
    Valid for u = 0 and v = 0 as continuous limits (v = 0 gives b = 0).
    """
    N, K = dims.N, dims.K
    u, v = ratios.u, ratios.v
    w = design.w
    a = 1.0 / (N * w * (1.0 - w))
    denom = N * N * w * u * v * (1.0 - w) + N * u + N * w * v + 1.0
    b = v * (N * u + 1.0) / denom
    return CompoundSymmetricMatrix(a=a, b=b, K=K)


def a_criterion(dims: ModelDims, ratios: VarianceRatios, design: ApproxDesign) -> CriterionValue:
    """Summed per-center effect-prediction MSE: trace of mse_alpha."""
    return CriterionValue(mse_alpha(dims, ratios, design).trace)


def efficiency(
    dims: ModelDims,
    ratios: VarianceRatios,
    w_ref: ApproxDesign,
    w_opt: ApproxDesign,
) -> float:
    """Criterion ratio of the optimal to the reference allocation, in (0, 1].

    w_opt is expected to be the minimizer; the ratio then equals 1 exactly
    when the reference achieves the minimum, and its reciprocal
    approximates the sample-size inflation the reference design needs.
    """
    return a_criterion(dims, ratios, w_opt).phi / a_criterion(dims, ratios, w_ref).phi
