"""Allocation-rate optimization, exact-design rounding, and sweep tables.

The criterion is convex in the allocation rate (its population part is
convex, and the shrinkage part is the reciprocal of a positive concave
quadratic), so a bracketing search needs only unimodality.  Golden-section
search is used instead of derivative-based methods: the derivative is
available but messy, and bracketing carries no sign-error risk.

Two structural shortcuts are exact: for a single center, and whenever the
effect variance ratio is zero, the criterion reduces to its symmetric
population part and the minimizer is exactly one half.

Sweeps run over rescaled ratios r = x / (1 + x), which map (0, inf) onto
(0, 1) like an intra-class correlation; the maps are centralized here so
every grid covers the whole ratio range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .criterion import CriterionValue, a_criterion
from .model import ApproxDesign, ExactDesign, ModelDims, VarianceRatios

__all__ = [
    "Optimum",
    "SweepSpec",
    "SweepRow",
    "optimize_allocation",
    "optimal_exact",
    "brute_force_exact",
    "adjacent_exact_designs",
    "run_sweep",
    "rescale_ratio",
    "unrescale_ratio",
    "halfstep_grid",
    "BRACKET_MARGIN",
    "SWEEP_AXES",
]

# The criterion diverges at w = 0 and w = 1; this margin keeps the bracket
# endpoints finite in floating point for any realistic center size.
BRACKET_MARGIN = 1e-6

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

SWEEP_AXES = ("v", "u", "q")


@dataclass(frozen=True)
class Optimum:
    """Result of a criterion minimization over the allocation rate."""

    w_star: float
    phi_star: float
    iterations: int
    bracket_width: float


def optimize_allocation(
    dims: ModelDims, ratios: VarianceRatios, tol: float = 1e-8
) -> Optimum:
    """Minimize the criterion over allocation rates in (0, 1).

    Returns the minimizer within tol.  Golden-section search on
    [BRACKET_MARGIN, 1 - BRACKET_MARGIN]; the minimum is interior because
    the criterion blows up at both ends.  K = 1 and v = 0 are returned as
    exactly 0.5 (the criterion is then symmetric in w <-> 1 - w with a
    known minimizer).
    """
    tol = float(tol)
    if not 1e-12 < tol < 1e-2:
        raise ValueError(f"tolerance must lie in (1e-12, 1e-2) (got {tol})")

    def phi(w: float) -> float:
        return a_criterion(dims, ratios, ApproxDesign(w)).phi

    if dims.K == 1 or ratios.v == 0.0:
        return Optimum(w_star=0.5, phi_star=phi(0.5), iterations=0, bracket_width=0.0)

    lo, hi = BRACKET_MARGIN, 1.0 - BRACKET_MARGIN
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = phi(x1), phi(x2)
    iterations = 0
    while hi - lo > tol:
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = phi(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = phi(x2)
        iterations += 1
    w = 0.5 * (lo + hi)
    return Optimum(w_star=w, phi_star=phi(w), iterations=iterations, bracket_width=hi - lo)


def adjacent_exact_designs(dims: ModelDims, w_star: float) -> tuple[ExactDesign, ...]:
    """Exact designs adjacent to a continuous rate, clamped to 1..N-1, ascending."""
    raw = dims.N * w_star
    candidates = sorted(
        {min(max(int(math.floor(raw)), 1), dims.N - 1), min(max(int(math.ceil(raw)), 1), dims.N - 1)}
    )
    return tuple(ExactDesign(n, dims) for n in candidates)


def optimal_exact(dims: ModelDims, ratios: VarianceRatios) -> tuple[ExactDesign, CriterionValue]:
    """Best exact design by rounding the continuous optimum.

    Convexity of the criterion guarantees the exact optimum is one of the
    two designs adjacent to the continuous minimizer.  Ties break toward
    the smaller treatment group.
    """
    opt = optimize_allocation(dims, ratios)
    best: ExactDesign | None = None
    best_phi = math.inf
    for cand in adjacent_exact_designs(dims, opt.w_star):
        phi = a_criterion(dims, ratios, cand.as_approx()).phi
        if phi < best_phi:
            best, best_phi = cand, phi
    assert best is not None
    return best, CriterionValue(best_phi)


def brute_force_exact(dims: ModelDims, ratios: VarianceRatios) -> tuple[ExactDesign, CriterionValue]:
    """Exhaustive minimum over all exact designs; oracle for optimal_exact.

    Same tie rule: the smallest treatment group achieving the minimum.
    """
    best_n = 1
    best_phi = math.inf
    for n in range(1, dims.N):
        phi = a_criterion(dims, ratios, ApproxDesign(n / dims.N)).phi
        if phi < best_phi:
            best_n, best_phi = n, phi
    return ExactDesign(best_n, dims), CriterionValue(best_phi)


def rescale_ratio(x: float) -> float:
    """Map a variance ratio in [0, inf) to [0, 1): r = x / (1 + x)."""
    if not (math.isfinite(x) and x >= 0.0):
        raise ValueError(f"variance ratio must be finite and >= 0 (got {x})")
    return x / (1.0 + x)


def unrescale_ratio(r: float) -> float:
    """Inverse map (0, 1) -> (0, inf): x = r / (1 - r)."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"rescaled ratio must lie strictly between 0 and 1 (got {r})")
    return r / (1.0 - r)


def halfstep_grid(points: int) -> tuple[float, ...]:
    """Uniform grid of r values in (0, 1), endpoints excluded by a half step."""
    if points < 1:
        raise ValueError(f"grid must have at least one point (got {points})")
    return tuple((i + 0.5) / points for i in range(points))


@dataclass(frozen=True)
class SweepSpec:
    """A family of criterion minimizations along one rescaled-ratio axis.

    axis "v" varies the effect ratio with the intercept ratio fixed,
    axis "u" the reverse, and axis "q" varies the ratio q = v/u.  For
    q-sweeps, q_fixed selects which of the two ratios stays fixed (the
    other is derived as v = q*u or u = v/q); fixing u is the default.
    One block of results is produced per fixed value, in the given order.
    """

    axis: str
    fixed_values: tuple[float, ...]
    grid: tuple[float, ...]
    dims: ModelDims
    q_fixed: str = "u"

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"axis must be one of {SWEEP_AXES} (got {self.axis!r})")
        object.__setattr__(self, "fixed_values", tuple(float(f) for f in self.fixed_values))
        object.__setattr__(self, "grid", tuple(float(r) for r in self.grid))
        if not self.fixed_values:
            raise ValueError("at least one fixed ratio value is required")
        for f in self.fixed_values:
            if not (math.isfinite(f) and f >= 0.0):
                raise ValueError(f"fixed ratio values must be finite and >= 0 (got {f})")
            if self.axis == "q" and f == 0.0:
                raise ValueError("q-sweeps need a strictly positive fixed ratio")
        if not self.grid:
            raise ValueError("grid must contain at least one point")
        for r in self.grid:
            if not 0.0 < r < 1.0:
                raise ValueError(f"grid points must lie strictly inside (0, 1) (got {r})")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if self.q_fixed not in ("u", "v"):
            raise ValueError(f"q_fixed must be 'u' or 'v' (got {self.q_fixed!r})")

    def ratios_at(self, fixed: float, r: float) -> tuple[float, VarianceRatios]:
        """Resolve one grid point to (axis ratio value, full variance ratios)."""
        x = unrescale_ratio(r)
        if self.axis == "v":
            return x, VarianceRatios(u=fixed, v=x)
        if self.axis == "u":
            return x, VarianceRatios(u=x, v=fixed)
        if self.q_fixed == "u":
            return x, VarianceRatios(u=fixed, v=x * fixed)
        return x, VarianceRatios(u=fixed / x, v=fixed)


@dataclass(frozen=True)
class SweepRow:
    """One sweep grid point: optimum and its comparison to equal allocation."""

    fixed: float
    r: float
    ratio: float
    u: float
    v: float
    w_star: float
    phi_star: float
    phi_balanced: float
    efficiency: float


def run_sweep(spec: SweepSpec, tol: float = 1e-8) -> list[SweepRow]:
    """Evaluate the sweep, one row per (fixed value, grid point), in grid order.

    Each row carries the minimizer, the criterion there, the criterion of
    the balanced rate 0.5, and their ratio (the balanced design's
    efficiency, in (0, 1]).
    """
    balanced = ApproxDesign(0.5)
    rows: list[SweepRow] = []
    for fixed in spec.fixed_values:
        for r in spec.grid:
            ratio, ratios = spec.ratios_at(fixed, r)
            opt = optimize_allocation(spec.dims, ratios, tol=tol)
            phi_bal = a_criterion(spec.dims, ratios, balanced).phi
            rows.append(
                SweepRow(
                    fixed=fixed,
                    r=r,
                    ratio=ratio,
                    u=ratios.u,
                    v=ratios.v,
                    w_star=opt.w_star,
                    phi_star=opt.phi_star,
                    phi_balanced=phi_bal,
                    # the ratio cannot exceed 1 mathematically; guard the
                    # last-ulp case when the optimum sits at 0.5 itself
                    efficiency=min(opt.phi_star / phi_bal, 1.0),
                )
            )
    return rows
