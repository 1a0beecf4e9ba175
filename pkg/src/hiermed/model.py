"""Domain types for a two-level model of a multi-center two-arm trial.

A trial consists of K centers with N individuals each.  Within every
center, n individuals receive the active treatment and the remaining
N - n the control.  Center-specific intercepts and treatment effects are
random, with between-center variability expressed as variance ratios
relative to the residual variance.

All types are immutable values and all operations are pure functions, so
everything here is safe for unrestricted concurrent use.  Degenerate
allocations (n = 0, n = N, w = 0, w = 1) are rejected at construction:
downstream prediction variances diverge there.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelDims",
    "VarianceRatios",
    "ApproxDesign",
    "ExactDesign",
    "MomentMatrix2",
    "information_matrix_exact",
    "information_matrix_approx",
]


def _as_int(value, name: str) -> int:
    try:
        return operator.index(value)
    except TypeError:
        raise ValueError(f"{name} must be an integer (got {value!r})") from None


@dataclass(frozen=True)
class ModelDims:
    """Counts of the trial layout: K centers, N individuals per center."""

    K: int
    N: int

    def __post_init__(self):
        object.__setattr__(self, "K", _as_int(self.K, "number of centers K"))
        object.__setattr__(self, "N", _as_int(self.N, "center size N"))
        if self.K < 1:
            raise ValueError(f"number of centers K must be >= 1 (got {self.K})")
        if self.N < 2:
            raise ValueError(f"center size N must be >= 2 (got {self.N})")


@dataclass(frozen=True)
class VarianceRatios:
    """Between-center variance ratios relative to the residual variance.

    u is the intercept ratio, v the treatment-effect ratio.  Zero is
    admitted as the homogeneous limit; operations that need to invert the
    dispersion matrix (and therefore require strictly positive ratios)
    say so individually.
    """

    u: float
    v: float

    def __post_init__(self):
        object.__setattr__(self, "u", float(self.u))
        object.__setattr__(self, "v", float(self.v))
        if not (math.isfinite(self.u) and self.u >= 0.0):
            raise ValueError(f"intercept variance ratio u must be finite and >= 0 (got {self.u})")
        if not (math.isfinite(self.v) and self.v >= 0.0):
            raise ValueError(f"effect variance ratio v must be finite and >= 0 (got {self.v})")


@dataclass(frozen=True)
class ApproxDesign:
    """Continuous allocation: fraction w of each center assigned to treatment."""

    w: float

    def __post_init__(self):
        object.__setattr__(self, "w", float(self.w))
        if not (math.isfinite(self.w) and 0.0 < self.w < 1.0):
            raise ValueError(
                f"allocation rate w must lie strictly between 0 and 1 (got {self.w})"
            )


@dataclass(frozen=True)
class ExactDesign:
    """Integer allocation: n of the N individuals per center get treatment."""

    n: int
    dims: ModelDims

    def __post_init__(self):
        object.__setattr__(self, "n", _as_int(self.n, "treatment group size n"))
        if not 1 <= self.n <= self.dims.N - 1:
            raise ValueError(
                f"treatment group size n must lie in 1..{self.dims.N - 1} (got {self.n})"
            )

    @property
    def allocation_rate(self) -> float:
        return self.n / self.dims.N

    def as_approx(self) -> ApproxDesign:
        return ApproxDesign(self.allocation_rate)


@dataclass(frozen=True)
class MomentMatrix2:
    """Symmetric 2x2 moment matrix of the within-center design.

    Entries are observation counts: m11 totals, m12 the treatment count,
    m22 the treatment count again for a 0/1 covariate.  Positive definite
    exactly when the underlying allocation is nondegenerate.
    """

    m11: float
    m12: float
    m22: float

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m12

    @property
    def is_positive_definite(self) -> bool:
        return self.m11 > 0.0 and self.det > 0.0

    def inverse(self) -> "MomentMatrix2":
        """Closed-form cofactor inverse; exact 2x2 algebra, no decomposition."""
        d = self.det
        if d <= 0.0:
            raise ValueError(f"moment matrix is singular (determinant {d})")
        return MomentMatrix2(self.m22 / d, -self.m12 / d, self.m11 / d)

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m12, self.m22]], dtype=float)


def information_matrix_exact(design: ExactDesign) -> MomentMatrix2:
    """Moment matrix [[N, n], [n, n]] of an exact two-group allocation.

    The full N x 2 design matrix is never materialized; with an intercept
    column of ones and a 0/1 treatment column its cross-product has this
    closed form for any N.
    """
    n = float(design.n)
    return MomentMatrix2(float(design.dims.N), n, n)


def information_matrix_approx(dims: ModelDims, design: ApproxDesign) -> MomentMatrix2:
    """Continuous extension N * [[1, w], [w, w]]; equals the exact matrix at w = n/N."""
    nw = dims.N * design.w
    return MomentMatrix2(float(dims.N), nw, nw)
