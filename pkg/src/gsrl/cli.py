"""Command-line surface: fit, path, tune, diagnose, simulate.

File conventions: X is a numeric CSV (no header unless --header), y a
single-column CSV, groups a JSON array of arrays of zero-based column
indices forming a partition.  All outputs are JSON documents with a
schema_version field, written atomically (temp file + rename), with floats
serialized at full round-trip precision.

Exit codes: 0 success, 1 input error, 2 computed but not converged.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from .core import GroupPartition, GsrlProblem
from .diagnostics import gir_bound
from .sim import PRESETS, run_experiment
from .solver import PathConfig, SolverConfig, default_path_grid, fit, fit_path
from .tuning import TuningInputs

SCHEMA_VERSION = 1


def _write_json(path: str, payload: dict) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_matrix(path: str, header: bool) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ValueError(f"{path}: cannot parse CSV ({exc})") from exc
    return data


def _read_vector(path: str, header: bool) -> np.ndarray:
    data = _read_matrix(path, header)
    if data.shape[1] != 1:
        raise ValueError(f"{path}: expected a single column, got {data.shape[1]}")
    return data[:, 0]


def _read_groups(path: str, p: int) -> GroupPartition:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON at line {exc.lineno}") from exc
    if not isinstance(raw, list) or not all(isinstance(g, list) for g in raw):
        raise ValueError(f"{path}: groups must be an array of arrays of indices")
    try:
        partition = GroupPartition(tuple(tuple(g) for g in raw))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from exc
    if partition.p != p:
        raise ValueError(f"{path}: groups do not partition columns (p={p})")
    return partition


def _load_problem(args) -> GsrlProblem:
    X = _read_matrix(args.x, args.header)
    y = _read_vector(args.y, args.header)
    partition = _read_groups(args.groups, X.shape[1])
    return GsrlProblem(X, y, partition)


def _solver_config(args) -> SolverConfig:
    k = args.k
    if k != "auto":
        k = float(k)
        if k <= 0:
            raise ValueError("--k must be positive or 'auto'")
    return SolverConfig(K=k, tolerance=args.tol)


def _fit_payload(ft, problem: GsrlProblem) -> dict:
    part = problem.partition
    return {
        "lambda": ft.lam,
        "coefficients": ft.beta.tolist(),
        "groups": [
            {
                "indices": list(g),
                "coefficients": [float(ft.beta[i]) for i in g],
                "norm": float(np.linalg.norm(ft.beta[list(g)])),
            }
            for g in part.groups
        ],
        "support": sorted(ft.support),
        "objective": ft.objective,
        "kkt_residual": None if math.isnan(ft.kkt_residual) else ft.kkt_residual,
        "iterations": ft.iterations,
        "converged": ft.converged,
        "status": ft.status,
    }


def cmd_fit(args) -> int:
    problem = _load_problem(args)
    if args.lam <= 0:
        raise ValueError("--lambda must be positive")
    ft = fit(problem, args.lam, _solver_config(args))
    payload = {"schema_version": SCHEMA_VERSION, **_fit_payload(ft, problem)}
    _write_json(args.out, payload)
    return 0 if ft.converged else 2


def _grid_from_args(args, problem: GsrlProblem) -> PathConfig:
    if args.grid:
        values = _read_vector(args.grid, header=False)
        return PathConfig(tuple(sorted((float(v) for v in values), reverse=True)))
    return PathConfig(
        default_path_grid(
            problem,
            min_exp=args.grid_min_exp,
            max_exp=args.grid_max_exp,
            step=args.grid_step,
        )
    )


def cmd_path(args) -> int:
    problem = _load_problem(args)
    grid = _grid_from_args(args, problem)
    path = fit_path(problem, grid, _solver_config(args))
    payload = {
        "schema_version": SCHEMA_VERSION,
        "entries": [_fit_payload(f, problem) for f in path.fits],
    }
    _write_json(args.out, payload)
    return 0 if all(f.status != "max_iterations" for f in path.fits) else 2


def cmd_tune(args) -> int:
    from . import tuning

    problem = _load_problem(args)
    config = _solver_config(args)
    if args.method == "th":
        res = tuning.tune_fdist(problem, alpha=args.alpha, config=config)
    elif args.method == "th-gauss":
        inputs = TuningInputs.from_problem(problem, args.alpha)
        lam = tuning.lambda_gaussian(inputs)
        ft = fit(problem, lam, config)
        beta = tuning.restricted_ols(problem, ft.support)
        res = tuning.TuningResult(
            "th-gauss", lam, ft, beta, ft.support, {"alpha": args.alpha}
        )
    elif args.method == "srl-th":
        lam = tuning.lambda_srl_theoretical(problem.n, problem.p)
        ft = fit(problem, lam, config)
        beta = tuning.restricted_ols(problem, ft.support)
        res = tuning.TuningResult("srl-th", lam, ft, beta, ft.support, {})
    elif args.method == "cv":
        grid = _grid_from_args(args, problem)
        res = tuning.cross_validate(problem, grid, args.folds, config, args.seed)
    elif args.method == "scv-bic":
        grid = _grid_from_args(args, problem)
        res = tuning.scv_bic(problem, grid, args.folds, config, args.seed)
    else:
        raise ValueError(f"unknown method {args.method!r}")
    payload = {
        "schema_version": SCHEMA_VERSION,
        "method": res.method,
        "lambda": res.lam,
        "support": sorted(res.support),
        "bias_corrected_coefficients": res.bias_corrected_beta.tolist(),
        "fit": _fit_payload(res.selected_fit, problem) if res.selected_fit else None,
        "metadata": res.metadata,
    }
    _write_json(args.out, payload)
    converged = res.selected_fit.converged if res.selected_fit is not None else True
    return 0 if converged else 2


def cmd_diagnose(args) -> int:
    X = _read_matrix(args.x, args.header)
    partition = _read_groups(args.groups, X.shape[1])
    support = sorted({int(tok) for tok in args.support.split(",") if tok != ""})
    for j in support:
        if not 0 <= j < partition.q:
            raise ValueError(f"--support group index {j} outside 0..{partition.q - 1}")
    problem = GsrlProblem(X, np.zeros(X.shape[0]), partition)
    report = gir_bound(problem, support, seed=args.seed)

    def _num(v: float):
        return None if (isinstance(v, float) and math.isnan(v)) else v

    s11, s12, s21, s22 = report.gram_blocks
    payload = {
        "schema_version": SCHEMA_VERSION,
        "support": support,
        "gir_upper_bound": _num(report.gir_upper_bound),
        "gir_ascent_estimate": _num(report.gir_ascent_estimate),
        "xi_inf_bound": _num(report.xi_inf_bound),
        "sigma11_invertible": report.sigma11_invertible,
        "gram_summary": {
            "sigma11_shape": list(s11.shape),
            "sigma12_shape": list(s12.shape),
            "sigma11_min_eig": float(np.linalg.eigvalsh(s11).min()) if s11.size else None,
            "sigma12_max_abs": float(np.max(np.abs(s12))) if s12.size else 0.0,
        },
        "notes": list(report.notes),
    }
    _write_json(args.out, payload)
    return 0


def cmd_simulate(args) -> int:
    if args.preset not in PRESETS:
        raise ValueError(f"unknown preset {args.preset!r}")
    preset = PRESETS[args.preset](args.p, replications=args.reps, seed=args.seed)
    report = run_experiment(preset)
    payload = {"schema_version": SCHEMA_VERSION, **report.to_dict()}
    _write_json(args.out, payload)
    print(f"preset {preset.name}  n={preset.n}  p={preset.p}  reps={preset.replications}")
    for method, agg in report.aggregates.items():
        if "mean_miss" in agg:
            print(
                f"  {method:>8}:  M = {100 * agg['mean_miss']:.2f}%   "
                f"FA = {100 * agg['mean_false_alarm']:.2f}%   "
                f"MSE = {agg['trimmed_mean_mse']:.2f}"
            )
        if "mean_seconds" in agg:
            print(f"  {method:>8}:  mean time = {agg['mean_seconds']:.3f}s")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gsrl",
                                     description="Group square-root lasso toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_args(p):
        p.add_argument("x", help="design matrix CSV")
        p.add_argument("y", help="response CSV (single column)")
        p.add_argument("groups", help="groups JSON (array of arrays of column indices)")
        p.add_argument("--header", action="store_true", help="CSV files carry a header row")

    def add_solver_args(p):
        p.add_argument("--k", default="auto", help="scaling constant K (default: auto = ||X||/sqrt(2))")
        p.add_argument("--tol", type=float, default=1e-9, help="iterate-change tolerance")

    def add_grid_args(p):
        p.add_argument("--grid", default=None, help="CSV file with explicit lambda values")
        p.add_argument("--grid-min-exp", type=float, default=-6.0)
        p.add_argument("--grid-max-exp", type=float, default=0.0)
        p.add_argument("--grid-step", type=float, default=0.2)

    p_fit = sub.add_parser("fit", help="fit at a single lambda")
    add_data_args(p_fit)
    p_fit.add_argument("--lambda", dest="lam", type=float, required=True)
    add_solver_args(p_fit)
    p_fit.add_argument("--out", required=True)
    p_fit.set_defaults(func=cmd_fit)

    p_path = sub.add_parser("path", help="fit a warm-started lambda path")
    add_data_args(p_path)
    add_grid_args(p_path)
    add_solver_args(p_path)
    p_path.add_argument("--out", required=True)
    p_path.set_defaults(func=cmd_path)

    p_tune = sub.add_parser("tune", help="select lambda by a tuning strategy")
    add_data_args(p_tune)
    p_tune.add_argument("--method", required=True,
                        choices=["th", "th-gauss", "srl-th", "cv", "scv-bic"])
    p_tune.add_argument("--alpha", type=float, default=0.01)
    p_tune.add_argument("--folds", type=int, default=5)
    p_tune.add_argument("--seed", type=int, default=0)
    add_grid_args(p_tune)
    add_solver_args(p_tune)
    p_tune.add_argument("--out", required=True)
    p_tune.set_defaults(func=cmd_tune)

    p_diag = sub.add_parser("diagnose", help="design-condition report for a support")
    p_diag.add_argument("x", help="design matrix CSV")
    p_diag.add_argument("groups", help="groups JSON")
    p_diag.add_argument("--support", required=True, help="comma-separated group indices")
    p_diag.add_argument("--header", action="store_true")
    p_diag.add_argument("--seed", type=int, default=0)
    p_diag.add_argument("--out", required=True)
    p_diag.set_defaults(func=cmd_diagnose)

    p_sim = sub.add_parser("simulate", help="run an experimental preset")
    p_sim.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p_sim.add_argument("--p", type=int, required=True)
    p_sim.add_argument("--reps", type=int, default=50)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
