"""Command-line surface: optimize, criterion, efficiency, sweep, predict, simulate.

Output conventions: CSV for tabular results (sweeps, predictions), JSON
for structured single reports, plain key = value text for quick reading.
All output is UTF-8 with LF line endings and '.' as the decimal
separator regardless of locale; numeric fields in text and CSV carry 12
significant digits.

Exit codes: 0 success, 2 usage or validation error (the message names
the violated constraint), 3 data-file error.

Every command is a pure function of its flags, input files and seed.
The HIERMED_THREADS environment variable is accepted as an
execution-resource hint; evaluation is sequential and no output value
ever depends on it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict

from .blup import CenterSummaries, blup_weights, population_blue, predict_scalar
from .criterion import a_criterion, efficiency, mse_alpha
from .model import ApproxDesign, ExactDesign, ModelDims, VarianceRatios
from .montecarlo import SimConfig, empirical_mse
from .optimizer import (
    SweepSpec,
    adjacent_exact_designs,
    halfstep_grid,
    optimize_allocation,
    run_sweep,
)

__all__ = ["main", "entry_point"]

_PROG = "hiermed"

_FORMATS = {
    "optimize": ("text", "json"),
    "criterion": ("text", "json"),
    "efficiency": ("text", "json"),
    "sweep": ("csv",),
    "predict": ("csv", "json"),
    "simulate": ("json", "text"),
}


class DataFileError(Exception):
    """Problem with an input data file; mapped to exit code 3."""


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def thread_hint() -> int | None:
    """Positive-integer value of HIERMED_THREADS, or None if unset/unusable."""
    raw = os.environ.get("HIERMED_THREADS")
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        return None
    return value if value > 0 else None


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _text_block(items: list[tuple[str, object]]) -> str:
    lines = []
    for key, value in items:
        if isinstance(value, float):
            value = _fmt(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _json_block(payload: dict) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _resolve_format(args: argparse.Namespace) -> str:
    supported = _FORMATS[args.command]
    fmt = args.format or supported[0]
    if fmt not in supported:
        raise ValueError(
            f"format {fmt!r} is not supported by command {args.command!r} "
            f"(supported: {', '.join(supported)})"
        )
    return fmt


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_optimize(args: argparse.Namespace) -> int:
    fmt = _resolve_format(args)
    dims = ModelDims(args.K, args.N)
    ratios = VarianceRatios(args.u, args.v)
    opt = optimize_allocation(dims, ratios, tol=args.tol)

    items: list[tuple[str, object]] = [("w_star", opt.w_star), ("phi_star", opt.phi_star)]
    payload: dict = {"w_star": opt.w_star, "phi_star": opt.phi_star}
    if args.exact:
        scored = [
            (cand.n, a_criterion(dims, ratios, cand.as_approx()).phi)
            for cand in adjacent_exact_designs(dims, opt.w_star)
        ]
        # candidates are ascending in n; strict < keeps the smaller n on ties
        best = min(scored, key=lambda t: t[1])
        runner = next((s for s in scored if s != best), None)
        items += [("n_star", best[0]), ("phi_exact", best[1])]
        payload["exact"] = {"n_star": best[0], "phi": best[1]}
        if runner is not None:
            items += [("runner_up_n", runner[0]), ("runner_up_phi", runner[1])]
            payload["exact"]["runner_up"] = {"n": runner[0], "phi": runner[1]}
        else:
            payload["exact"]["runner_up"] = None

    _emit(_text_block(items) if fmt == "text" else _json_block(payload), args.out)
    return 0


def cmd_criterion(args: argparse.Namespace) -> int:
    fmt = _resolve_format(args)
    if (args.w is None) == (args.n is None):
        raise ValueError("exactly one of --w or --n is required")
    dims = ModelDims(args.K, args.N)
    ratios = VarianceRatios(args.u, args.v)
    if args.n is not None:
        design = ExactDesign(args.n, dims).as_approx()
    else:
        design = ApproxDesign(args.w)
    matrix = mse_alpha(dims, ratios, design)

    items: list[tuple[str, object]] = [("w", design.w)]
    payload: dict = {"w": design.w}
    if args.n is not None:
        items.append(("n", args.n))
        payload["n"] = args.n
    items += [
        ("phi", matrix.trace),
        ("average_part", matrix.a),
        ("centering_part", matrix.b),
    ]
    payload.update({"phi": matrix.trace, "average_part": matrix.a, "centering_part": matrix.b})
    _emit(_text_block(items) if fmt == "text" else _json_block(payload), args.out)
    return 0


def cmd_efficiency(args: argparse.Namespace) -> int:
    fmt = _resolve_format(args)
    dims = ModelDims(args.K, args.N)
    ratios = VarianceRatios(args.u, args.v)
    w_ref = ApproxDesign(args.w)
    opt = optimize_allocation(dims, ratios, tol=args.tol)
    eff = efficiency(dims, ratios, w_ref, ApproxDesign(opt.w_star))
    phi_ref = a_criterion(dims, ratios, w_ref).phi

    items: list[tuple[str, object]] = [
        ("efficiency", eff),
        ("w_ref", w_ref.w),
        ("phi_ref", phi_ref),
        ("w_star", opt.w_star),
        ("phi_star", opt.phi_star),
    ]
    payload = {key: value for key, value in items}
    _emit(_text_block(items) if fmt == "text" else _json_block(payload), args.out)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    _resolve_format(args)  # csv only
    dims = ModelDims(args.K, args.N)
    try:
        fixed = tuple(float(part) for part in args.fixed.split(","))
    except ValueError:
        raise ValueError(f"--fixed must be a comma-separated list of numbers (got {args.fixed!r})")
    spec = SweepSpec(axis=args.axis, fixed_values=fixed, grid=halfstep_grid(args.grid), dims=dims)
    rows = run_sweep(spec, tol=args.tol)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["axis", "r", "ratio", "u", "v", "w_star", "phi_star", "phi_balanced", "efficiency"]
    )
    for row in rows:
        writer.writerow(
            [
                args.axis,
                _fmt(row.r),
                _fmt(row.ratio),
                _fmt(row.u),
                _fmt(row.v),
                _fmt(row.w_star),
                _fmt(row.phi_star),
                _fmt(row.phi_balanced),
                _fmt(row.efficiency),
            ]
        )
    _emit(buffer.getvalue(), args.out)
    return 0


def _load_trial_csv(path: str) -> tuple[list[int], dict[int, dict[str, list[float]]]]:
    """Read a center,group,y file; returns sorted center ids and per-group values."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataFileError(f"cannot read data file {path!r}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFileError(f"data file {path!r} is empty") from None
        if [col.strip() for col in header] != ["center", "group", "y"]:
            raise DataFileError(
                f"data file {path!r} must start with header 'center,group,y' "
                f"(got {','.join(header)!r})"
            )
        values: dict[int, dict[str, list[float]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataFileError(f"line {lineno}: expected 3 fields, got {len(row)}")
            raw_center, raw_group, raw_y = (field.strip() for field in row)
            try:
                center = int(raw_center)
            except ValueError:
                raise DataFileError(
                    f"line {lineno}: center id must be an integer (got {raw_center!r})"
                ) from None
            group = raw_group.upper()
            if group not in ("T", "C"):
                raise DataFileError(
                    f"line {lineno}: group must be 'T' or 'C' (got {raw_group!r})"
                )
            try:
                y = float(raw_y)
            except ValueError:
                raise DataFileError(
                    f"line {lineno}: response must be a number (got {raw_y!r})"
                ) from None
            if not math.isfinite(y):
                raise DataFileError(f"line {lineno}: response must be finite (got {raw_y!r})")
            values.setdefault(center, {"T": [], "C": []})[group].append(y)
    if not values:
        raise DataFileError(f"data file {path!r} contains no observations")
    return sorted(values), values


def cmd_predict(args: argparse.Namespace) -> int:
    fmt = _resolve_format(args)
    ratios = VarianceRatios(args.u, args.v)
    centers, values = _load_trial_csv(args.data)

    for center in centers:
        groups = values[center]
        if not groups["T"]:
            raise DataFileError(f"center {center} has no treatment observations")
        if not groups["C"]:
            raise DataFileError(f"center {center} has no control observations")
    n_ref = len(values[centers[0]]["T"])
    c_ref = len(values[centers[0]]["C"])
    for center in centers:
        counts = (len(values[center]["T"]), len(values[center]["C"]))
        if counts != (n_ref, c_ref):
            raise DataFileError(
                f"center {center} has group sizes (T={counts[0]}, C={counts[1]}) "
                f"but center {centers[0]} set the layout (T={n_ref}, C={c_ref}); "
                "all centers must share the same sizes"
            )

    dims = ModelDims(len(centers), n_ref + c_ref)
    design = ExactDesign(n_ref, dims)
    summaries = CenterSummaries(
        treat_mean=[sum(values[c]["T"]) / n_ref for c in centers],
        control_mean=[sum(values[c]["C"]) / c_ref for c in centers],
    )
    predictions = predict_scalar(summaries, blup_weights(dims, ratios, design))
    mu0, alpha0 = population_blue(summaries)

    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["center", "mu_hat", "alpha_hat"])
        for i, center in enumerate(centers):
            writer.writerow(
                [center, _fmt(predictions.intercept[i]), _fmt(predictions.effect[i])]
            )
        writer.writerow(["population", _fmt(mu0), _fmt(alpha0)])
        _emit(buffer.getvalue(), args.out)
    else:
        payload = {
            "K": dims.K,
            "N": dims.N,
            "n": design.n,
            "u": ratios.u,
            "v": ratios.v,
            "centers": [
                {
                    "center": center,
                    "mu_hat": float(predictions.intercept[i]),
                    "alpha_hat": float(predictions.effect[i]),
                }
                for i, center in enumerate(centers)
            ],
            "population": {"mu_hat": mu0, "alpha_hat": alpha0},
        }
        _emit(_json_block(payload), args.out)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    fmt = _resolve_format(args)
    dims = ModelDims(args.K, args.N)
    config = SimConfig(
        dims=dims,
        ratios=VarianceRatios(args.u, args.v),
        design=ExactDesign(args.n, dims),
        mu=args.mu,
        alpha=args.alpha,
        sigma=args.sigma,
        replications=args.reps,
        master_seed=args.seed,
    )
    report = empirical_mse(config)
    payload = asdict(report)
    if fmt == "json":
        # a single replication has no estimable standard error; keep the
        # output strictly valid JSON by mapping non-finite values to null
        sanitized = {
            key: (None if isinstance(value, float) and not math.isfinite(value) else value)
            for key, value in payload.items()
        }
        _emit(_json_block(sanitized), args.out)
    else:
        _emit(_text_block(list(payload.items())), args.out)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=_PROG,
        description=(
            "Shrinkage prediction of center-specific treatment effects in "
            "multi-center trials and criterion-optimal treatment allocation."
        ),
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--format", choices=("text", "json", "csv"), default=None,
        help="output format (commands support a subset; default depends on the command)",
    )
    common.add_argument("--out", default=None, help="write output to this file instead of stdout")

    dims_args = argparse.ArgumentParser(add_help=False)
    dims_args.add_argument("--K", type=int, required=True, help="number of centers")
    dims_args.add_argument("--N", type=int, required=True, help="individuals per center")

    ratio_args = argparse.ArgumentParser(add_help=False)
    ratio_args.add_argument("--u", type=float, required=True, help="intercept variance ratio")
    ratio_args.add_argument("--v", type=float, required=True, help="effect variance ratio")

    model = [dims_args, ratio_args]

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "optimize", parents=[common, *model],
        help="find the allocation rate minimizing the prediction-MSE trace",
    )
    p.add_argument("--tol", type=float, default=1e-8, help="search tolerance in w")
    p.add_argument("--exact", action="store_true", help="also round to the best exact design")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser(
        "criterion", parents=[common, *model],
        help="evaluate the prediction-MSE trace at a given allocation",
    )
    p.add_argument("--w", type=float, default=None, help="allocation rate in (0, 1)")
    p.add_argument("--n", type=int, default=None, help="exact treatment group size")
    p.set_defaults(func=cmd_criterion)

    p = sub.add_parser(
        "efficiency", parents=[common, *model],
        help="efficiency of a reference allocation relative to the optimum",
    )
    p.add_argument("--w", type=float, default=0.5, help="reference allocation rate")
    p.add_argument("--tol", type=float, default=1e-8, help="search tolerance in w")
    p.set_defaults(func=cmd_efficiency)

    p = sub.add_parser(
        "sweep", parents=[common, dims_args],
        help="CSV table of optima over a rescaled variance-ratio grid",
    )
    p.add_argument("--axis", choices=("v", "u", "q"), required=True, help="ratio to sweep")
    p.add_argument(
        "--fixed", required=True,
        help="comma-separated fixed values of the other ratio, one output block each",
    )
    p.add_argument("--grid", type=int, default=99, help="number of grid points in (0, 1)")
    p.add_argument("--tol", type=float, default=1e-8, help="search tolerance in w")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "predict", parents=[common],
        help="center-specific predictions from a CSV of raw observations",
    )
    p.add_argument("--data", required=True, help="CSV file with header center,group,y")
    p.add_argument("--u", type=float, required=True, help="intercept variance ratio")
    p.add_argument("--v", type=float, required=True, help="effect variance ratio")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser(
        "simulate", parents=[common, *model],
        help="Monte Carlo check of the analytic prediction MSE",
    )
    p.add_argument("--n", type=int, required=True, help="exact treatment group size")
    p.add_argument("--reps", type=int, required=True, help="number of replications")
    p.add_argument("--seed", type=int, required=True, help="master seed")
    p.add_argument("--mu", type=float, default=0.0, help="population intercept")
    p.add_argument("--alpha", type=float, default=1.0, help="population treatment effect")
    p.add_argument("--sigma", type=float, default=1.0, help="residual standard deviation")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    thread_hint()  # resource hint only; evaluation is sequential
    try:
        return args.func(args)
    except DataFileError as exc:
        print(f"{_PROG}: error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"{_PROG}: error: {exc}", file=sys.stderr)
        return 2


def entry_point() -> None:
    sys.exit(main())
