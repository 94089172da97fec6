"""Simulation harness: Toeplitz designs, experimental presets, recovery metrics.

Presets:
  * table1-path / table1-th: n=50, singleton groups, beta0 = (2.5, 0, 2.5,
    2.5, 0, ..., 0), Toeplitz rho=0.5 design; used for timing the solver
    over a full path or at the theoretical ungrouped lambda.
  * table2: n=100, groups of size 3, beta0 = three 2.5's, three 0's, three
    2.5's, three 2.5's, then zeros; compares the TH / CV / SCV-BIC tuning
    strategies on miss rate, false-alarm rate and trimmed-mean MSE.

Reports are deterministic given (preset, seed, config); timing statistics
are recorded only for the timing presets so that the table2 report is
byte-stable across runs.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import GroupPartition, GsrlProblem, TrueModel
from .solver import PathConfig, SolverConfig, default_path_grid, fit, fit_path
from .tuning import (
    cross_validate,
    lambda_srl_theoretical,
    restricted_ols,
    scv_bic,
    tune_fdist,
)

TRIM_CONVENTION = "symmetric: floor(k * trim_fraction / 2) dropped per tail"


def thread_count() -> int:
    """Worker cap for replication-level parallelism (GSRL_THREADS env var)."""
    env = os.environ.get("GSRL_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def toeplitz_sample(n: int, p: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """n iid rows from N(0, C) with C_{ij} = rho^|i-j|, via the Cholesky factor."""
    if not -1.0 < rho < 1.0:
        raise ValueError(f"need |rho| < 1, got {rho}")
    idx = np.arange(p)
    cov = rho ** np.abs(idx[:, None] - idx[None, :])
    chol = np.linalg.cholesky(cov)
    return rng.standard_normal((n, p)) @ chol.T


def mse_metric(test_X: np.ndarray, test_Y: np.ndarray, beta_hat: np.ndarray,
               sigma: float, n_test: int) -> float:
    """Effective prediction error 100 * (sum residuals^2 / (N_test sigma^2) - 1)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if n_test < 1:
        raise ValueError("n_test must be >= 1")
    r = test_Y - test_X @ beta_hat
    return 100.0 * (float(r @ r) / (n_test * sigma * sigma) - 1.0)


def miss_fa(true_model: TrueModel, estimated_support) -> tuple[float, float]:
    """Miss and false-alarm rates of an estimated group support."""
    S = true_model.active_set
    if not S:
        raise ValueError("true support is empty; miss rate undefined")
    est = set(estimated_support)
    q = true_model.partition.q
    inactive = q - len(S)
    miss = len(S - est) / len(S)
    fa = len(est - S) / inactive if inactive else 0.0
    return miss, fa


def trimmed_mean(values, trim_fraction: float) -> float:
    """Symmetric trimmed mean: drop floor(k * trim_fraction / 2) per tail."""
    if not 0.0 <= trim_fraction < 1.0:
        raise ValueError("trim_fraction must be in [0, 1)")
    vals = sorted(float(v) for v in values)
    k = len(vals)
    drop = math.floor(k * trim_fraction / 2.0)
    kept = vals[drop : k - drop]
    if not kept:
        raise ValueError("trimming removed every value")
    return sum(kept) / len(kept)


@dataclass(frozen=True)
class ExperimentPreset:
    """A named simulation setup (design law, signal, replication count)."""

    name: str
    n: int
    p: int
    group_size: int
    sigma: float
    rho: float
    replications: int
    n_test: int
    seed: int
    methods: tuple[str, ...]
    record_timing: bool

    def partition(self) -> GroupPartition:
        return GroupPartition.contiguous(self.p, self.group_size)

    def beta0(self) -> np.ndarray:
        beta = np.zeros(self.p)
        if self.group_size == 1:
            if self.p < 4:
                raise ValueError("singleton presets need p >= 4")
            beta[[0, 2, 3]] = 2.5
        else:
            if self.p < 4 * self.group_size:
                raise ValueError("grouped presets need at least 4 groups")
            g = self.group_size
            for j in (0, 2, 3):
                beta[j * g : (j + 1) * g] = 2.5
        return beta

    def true_model(self) -> TrueModel:
        return TrueModel(self.beta0(), self.sigma, self.partition())


def table1_path(p: int, replications: int = 50, seed: int = 0) -> ExperimentPreset:
    return ExperimentPreset("table1-path", 50, p, 1, 1.0, 0.5, replications,
                            1000, seed, ("path",), True)


def table1_th(p: int, replications: int = 50, seed: int = 0) -> ExperimentPreset:
    return ExperimentPreset("table1-th", 50, p, 1, 1.0, 0.5, replications,
                            1000, seed, ("srl-th",), True)


def table2(p: int, replications: int = 50, seed: int = 0) -> ExperimentPreset:
    return ExperimentPreset("table2", 100, p, 3, 1.0, 0.5, replications,
                            10_000, seed, ("th", "cv", "scv-bic"), False)


PRESETS = {"table1-path": table1_path, "table1-th": table1_th, "table2": table2}


@dataclass(frozen=True)
class SimulationReport:
    """Per-replication records plus aggregate statistics for one preset run."""

    preset: ExperimentPreset
    replications: tuple[dict[str, Any], ...]
    aggregates: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "preset": {
                "name": self.preset.name,
                "n": self.preset.n,
                "p": self.preset.p,
                "group_size": self.preset.group_size,
                "sigma": self.preset.sigma,
                "rho": self.preset.rho,
                "replications": self.preset.replications,
                "n_test": self.preset.n_test,
                "seed": self.preset.seed,
                "methods": list(self.preset.methods),
            },
            "trim_convention": TRIM_CONVENTION,
            "replications": list(self.replications),
            "aggregates": self.aggregates,
        }


def _run_method(method: str, problem: GsrlProblem, config: SolverConfig,
                cv_seed) -> tuple[frozenset[int] | None, np.ndarray | None, bool, float]:
    """Returns (support, bias-corrected beta, converged flag, solver seconds)."""
    t0 = time.perf_counter()
    if method == "path":
        grid = PathConfig(default_path_grid(problem))
        path = fit_path(problem, grid, config)
        elapsed = time.perf_counter() - t0
        ok = all(f.status != "max_iterations" for f in path.fits)
        return None, None, ok, elapsed
    if method == "th":
        res = tune_fdist(problem, alpha=0.01, config=config)
    elif method == "srl-th":
        lam = lambda_srl_theoretical(problem.n, problem.p)
        f = fit(problem, lam, config)
        elapsed = time.perf_counter() - t0
        beta = restricted_ols(problem, f.support)
        return f.support, beta, f.converged, elapsed
    elif method == "cv":
        grid = PathConfig(default_path_grid(problem))
        res = cross_validate(problem, grid, folds=5, config=config, seed=cv_seed)
    elif method == "scv-bic":
        grid = PathConfig(default_path_grid(problem))
        res = scv_bic(problem, grid, folds=5, config=config, seed=cv_seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    elapsed = time.perf_counter() - t0
    converged = res.selected_fit.converged if res.selected_fit is not None else True
    return res.support, res.bias_corrected_beta, converged, elapsed


def _one_replication(preset: ExperimentPreset, rep: int, child_seed,
                     config: SolverConfig, truth: TrueModel) -> dict[str, Any]:
    rng = np.random.default_rng(child_seed)
    X = toeplitz_sample(preset.n, preset.p, preset.rho, rng)
    eps = rng.standard_normal(preset.n)
    Y = X @ truth.beta0 + preset.sigma * eps
    problem = GsrlProblem(X, Y, preset.partition())
    needs_test = any(m != "path" for m in preset.methods)
    if needs_test:
        X_test = toeplitz_sample(preset.n_test, preset.p, preset.rho, rng)
        Y_test = X_test @ truth.beta0 + preset.sigma * rng.standard_normal(preset.n_test)
    record: dict[str, Any] = {"replication": rep, "methods": {}}
    for method in preset.methods:
        support, beta, converged, elapsed = _run_method(method, problem, config, rep)
        entry: dict[str, Any] = {"converged": converged}
        if support is not None:
            m, fa = miss_fa(truth, support)
            entry["support"] = sorted(support)
            entry["miss"] = m
            entry["false_alarm"] = fa
            entry["mse"] = mse_metric(X_test, Y_test, beta, preset.sigma, preset.n_test)
        if preset.record_timing:
            entry["seconds"] = elapsed
        record["methods"][method] = entry
    return record


def run_experiment(preset: ExperimentPreset,
                   config: SolverConfig = SolverConfig()) -> SimulationReport:
    """Run every replication of a preset and aggregate the metrics.

    Replications use independent seed substreams and may run on a thread
    pool (capped by GSRL_THREADS); results are assembled in replication
    order, so the report is deterministic.
    """
    truth = preset.true_model()
    children = np.random.SeedSequence(preset.seed).spawn(preset.replications)
    workers = min(thread_count(), preset.replications)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(
                pool.map(
                    lambda args: _one_replication(preset, args[0], args[1], config, truth),
                    enumerate(children),
                )
            )
    else:
        records = [
            _one_replication(preset, rep, child, config, truth)
            for rep, child in enumerate(children)
        ]
    aggregates: dict[str, Any] = {}
    for method in preset.methods:
        entries = [r["methods"][method] for r in records]
        agg: dict[str, Any] = {
            "all_converged": all(e["converged"] for e in entries),
        }
        if "miss" in entries[0]:
            agg["mean_miss"] = sum(e["miss"] for e in entries) / len(entries)
            agg["mean_false_alarm"] = sum(e["false_alarm"] for e in entries) / len(entries)
            agg["trimmed_mean_mse"] = trimmed_mean([e["mse"] for e in entries], 0.4)
        if preset.record_timing:
            agg["mean_seconds"] = sum(e["seconds"] for e in entries) / len(entries)
        aggregates[method] = agg
    return SimulationReport(preset, tuple(records), aggregates)
