"""Sigma-free tuning of the penalty level.

Three families of rules:
  * closed-form Gaussian bound on the noise statistic V, with optional
    inflation for the recovery events (lambda_gaussian / lambda_corollary);
  * the sharper F-distribution rule (lambda_fdist), advocated for practice;
  * data-driven selection: K-fold cross-validation over a lambda grid and
    sparsity-pattern cross-validation with a BIC correction (scv_bic).

All rules consume only the design (through the block spectral norms
zeta_j = ||X^j||^2 / n), group sizes and the confidence level; none of them
sees the noise level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import GroupPartition, GsrlFit, GsrlProblem
from .dist import f_quantile, normal_quantile
from .solver import PathConfig, SolverConfig, fit, fit_path, resolve_k


@dataclass(frozen=True)
class TuningInputs:
    """Design summaries consumed by the closed-form tuning rules.

    gamma_bar and eta_tilde are the inflation factors (gamma+1)/(gamma-1)
    and (1+eta)/(1-eta) attached to the cone and irrepresentable constants;
    they are user inputs because gamma and eta are not computable from data.
    """

    n: int
    q: int
    t_min: int
    t_max: int
    zeta: float
    zeta_j: tuple[float, ...]
    alpha: float
    gamma_bar: float = 2.0
    eta_tilde: float = 3.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.gamma_bar <= 0 or self.eta_tilde <= 0:
            raise ValueError("gamma_bar and eta_tilde must be positive")

    @classmethod
    def from_problem(
        cls,
        problem: GsrlProblem,
        alpha: float,
        gamma_bar: float = 2.0,
        eta_tilde: float = 3.0,
    ) -> "TuningInputs":
        zj = block_spectral_zetas(problem)
        part = problem.partition
        return cls(
            n=problem.n,
            q=part.q,
            t_min=part.t_min,
            t_max=part.t_max,
            zeta=float(np.max(zj)),
            zeta_j=tuple(float(v) for v in zj),
            alpha=alpha,
            gamma_bar=gamma_bar,
            eta_tilde=eta_tilde,
        )


def block_spectral_zetas(problem: GsrlProblem) -> np.ndarray:
    """zeta_j = ||X^j||^2 / n via exact per-block singular values."""
    out = np.empty(problem.partition.q)
    for j, group in enumerate(problem.partition.groups):
        block = problem.X[:, list(group)]
        out[j] = np.linalg.norm(block, 2) ** 2 / problem.n
    return out


def lambda_gaussian(inputs: TuningInputs) -> float:
    """Smallest lambda_0 with P(V >= lambda_0) <= alpha under Gaussian noise.

    lambda_0 = sqrt(2 zeta) n / sqrt(n - T_max) * (1 + sqrt(2 log(2q/alpha) / T_min)).
    Requires T_max < n and 16 log(2q/alpha) <= n - T_max.
    """
    n, q, alpha = inputs.n, inputs.q, inputs.alpha
    if inputs.t_max >= n:
        raise ValueError(f"requires T_max < n, got T_max={inputs.t_max}, n={n}")
    logterm = math.log(2.0 * q / alpha)
    if 16.0 * logterm > n - inputs.t_max:
        raise ValueError(
            f"requires 16 log(2q/alpha) <= n - T_max: "
            f"{16.0 * logterm:.4g} > {n - inputs.t_max}"
        )
    return (
        math.sqrt(2.0 * inputs.zeta)
        * n
        / math.sqrt(n - inputs.t_max)
        * (1.0 + math.sqrt(2.0 * logterm / inputs.t_min))
    )


def lambda_corollary(inputs: TuningInputs, event: str = "A") -> float:
    """Gaussian bound inflated for the oracle events.

    event "A" multiplies by gamma_bar; event "A1" by max(gamma_bar, 2 eta_tilde).
    """
    base = lambda_gaussian(inputs)
    if event == "A":
        return inputs.gamma_bar * base
    if event == "A1":
        return max(inputs.gamma_bar, 2.0 * inputs.eta_tilde) * base
    raise ValueError(f'event must be "A" or "A1", got {event!r}')


def lambda_fdist(inputs: TuningInputs) -> tuple[float, float]:
    """The F-distribution tuning rule (lambda_0, tau_0).

    tau_0 = F^{-1}_{T_min, n - T_min}(1 - alpha/q) and
    lambda_0 = n sqrt(zeta tau_0 / (T_min tau_0 + n - T_max)).
    """
    n = inputs.n
    if inputs.t_max >= n:
        raise ValueError(f"requires T_max < n, got T_max={inputs.t_max}, n={n}")
    prob = 1.0 - inputs.alpha / inputs.q
    if not 0.0 < prob < 1.0:
        raise ValueError("alpha / q must be in (0, 1)")
    tau0 = f_quantile(inputs.t_min, n - inputs.t_min, prob)
    lam0 = n * math.sqrt(
        inputs.zeta * tau0 / (inputs.t_min * tau0 + n - inputs.t_max)
    )
    return lam0, tau0


def fdist_scaled_constants(
    inputs: TuningInputs, sizes: tuple[int, ...], K: float
) -> np.ndarray:
    """Per-group constants lambda_j = sqrt(zeta tau_0/(T_min tau_0 + n - T_max)) sqrt(n T_j)/K.

    These are the thresholds for the K-scaled solver form; they equal the
    lambda_0 parameterization with lambda = lambda_0 from :func:`lambda_fdist`.
    """
    lam0, tau0 = lambda_fdist(inputs)
    root = math.sqrt(inputs.zeta * tau0 / (inputs.t_min * tau0 + inputs.n - inputs.t_max))
    return root * np.sqrt(inputs.n * np.asarray(sizes, dtype=np.float64)) / K


def lambda_srl_theoretical(n: int, p: int) -> float:
    """Ungrouped benchmark rule lambda = sqrt(n) * 1.1 * Phi^{-1}(1 - 0.05/(2p))."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return math.sqrt(n) * 1.1 * normal_quantile(1.0 - 0.05 / (2.0 * p))


@dataclass(frozen=True)
class TuningResult:
    """Outcome of a tuning strategy.

    bias_corrected_beta is the restricted-OLS refit on the selected support
    (zero outside it).  metadata carries method-specific records such as
    fold errors or candidate patterns.
    """

    method: str
    lam: float | None
    selected_fit: GsrlFit | None
    bias_corrected_beta: np.ndarray
    support: frozenset[int]
    metadata: dict[str, Any] = field(default_factory=dict)


def _restricted_lstsq(
    X: np.ndarray, Y: np.ndarray, columns: list[int]
) -> tuple[np.ndarray, bool]:
    """Least-squares on a column subset; minimum-norm when rank-deficient."""
    coef = np.zeros(X.shape[1])
    if not columns:
        return coef, False
    sub = X[:, columns]
    sol, _, rank, _ = np.linalg.lstsq(sub, Y, rcond=None)
    coef[columns] = sol
    return coef, rank < len(columns)


def _support_columns(partition: GroupPartition, support) -> list[int]:
    cols: list[int] = []
    for j in sorted(support):
        if not 0 <= j < partition.q:
            raise ValueError(f"group index {j} outside 0..{partition.q - 1}")
        cols.extend(partition.groups[j])
    return cols


def restricted_ols(problem: GsrlProblem, support) -> np.ndarray:
    """OLS refit on the columns of the selected groups, zeros elsewhere.

    An empty support returns the zero vector (the null model); rank-deficient
    restricted designs fall back to the minimum-norm solution.
    """
    cols = _support_columns(problem.partition, support)
    coef, _ = _restricted_lstsq(problem.X, problem.Y, cols)
    return coef


def _fold_indices(n: int, folds: int, seed) -> list[np.ndarray]:
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if folds > n:
        raise ValueError(f"folds={folds} exceeds n={n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(order, folds)]


def _subproblem(problem: GsrlProblem, rows: np.ndarray) -> GsrlProblem:
    return GsrlProblem(problem.X[rows], problem.Y[rows], problem.partition)


def cross_validate(
    problem: GsrlProblem,
    grid: PathConfig,
    folds: int = 5,
    config: SolverConfig = SolverConfig(),
    seed=0,
) -> TuningResult:
    """K-fold CV over the lambda grid, then refit and bias-correct.

    Validation error is the plain sum of squared residuals (no sigma
    normalization).  Selection follows the one-standard-error rule: the
    largest lambda whose total validation error is within one standard
    error of the minimum.  The raw-minimum curve is alarmingly flat on
    its small-lambda side, so minimizing outright overselects badly.
    Ties are broken toward the larger lambda.
    """
    fold_rows = _fold_indices(problem.n, folds, seed)
    all_rows = np.arange(problem.n)
    errors = np.zeros((folds, len(grid.grid)))
    for f, va in enumerate(fold_rows):
        tr = np.setdiff1d(all_rows, va)
        train = _subproblem(problem, tr)
        path = fit_path(train, grid, config)
        Xva, Yva = problem.X[va], problem.Y[va]
        for l, ft in enumerate(path.fits):
            r = Yva - Xva @ ft.beta
            errors[f, l] = float(r @ r)
    total = errors.sum(axis=0)
    argmin = int(np.argmin(total))  # first occurrence = largest lambda among ties
    if folds > 1:
        # std of per-fold errors at the minimizer, scaled to the total
        se = float(errors[:, argmin].std(ddof=1)) * math.sqrt(folds)
    else:
        se = 0.0
    best = int(np.argmax(total <= total[argmin] + se))
    lam = grid.grid[best]
    final = fit(problem, lam, config)
    corrected = restricted_ols(problem, final.support)
    return TuningResult(
        method="cv",
        lam=lam,
        selected_fit=final,
        bias_corrected_beta=corrected,
        support=final.support,
        metadata={
            "fold_errors": errors.tolist(),
            "total_errors": total.tolist(),
            "grid": list(grid.grid),
            "selected_index": best,
            "argmin_index": argmin,
            "one_se": se,
            "folds": folds,
        },
    )


def scv_bic(
    problem: GsrlProblem,
    grid: PathConfig,
    folds: int = 5,
    config: SolverConfig = SolverConfig(),
    seed=0,
) -> TuningResult:
    """Cross-validate sparsity patterns from a single full-data path.

    The candidate patterns are the distinct group supports along the path.
    Each pattern is scored by the total restricted-OLS validation error plus
    a BIC-style correction df * log(n) * (total error / n), where df is the
    number of scalar coefficients in the pattern.  Ties go to the pattern
    appearing earlier on the path (larger lambda, sparser).
    """
    path = fit_path(problem, grid, config)
    patterns: list[tuple[int, ...]] = []
    first_fit: dict[tuple[int, ...], GsrlFit] = {}
    for ft in path.fits:
        key = tuple(sorted(ft.support))
        if key not in first_fit:
            patterns.append(key)
            first_fit[key] = ft
    fold_rows = _fold_indices(problem.n, folds, seed)
    all_rows = np.arange(problem.n)
    n = problem.n
    records = []
    best_idx, best_score = 0, math.inf
    for idx, pattern in enumerate(patterns):
        cols = _support_columns(problem.partition, pattern)
        sse = 0.0
        deficient = False
        for va in fold_rows:
            tr = np.setdiff1d(all_rows, va)
            coef, flag = _restricted_lstsq(problem.X[tr], problem.Y[tr], cols)
            deficient = deficient or flag or len(cols) > tr.size
            r = problem.Y[va] - problem.X[va] @ coef
            sse += float(r @ r)
        df = len(cols)
        score = sse + df * math.log(n) * (sse / n)
        records.append(
            {
                "pattern": list(pattern),
                "df": df,
                "validation_sse": sse,
                "criterion": score,
                "rank_deficient": deficient,
            }
        )
        if score < best_score:
            best_idx, best_score = idx, score
    chosen = patterns[best_idx]
    corrected = restricted_ols(problem, chosen)
    return TuningResult(
        method="scv-bic",
        lam=first_fit[chosen].lam,
        selected_fit=first_fit[chosen],
        bias_corrected_beta=corrected,
        support=frozenset(chosen),
        metadata={
            "candidates": records,
            "selected_index": best_idx,
            "grid": list(grid.grid),
            "folds": folds,
        },
    )


def tune_fdist(
    problem: GsrlProblem,
    alpha: float = 0.01,
    config: SolverConfig = SolverConfig(),
) -> TuningResult:
    """The F-distribution theoretical rule: fit at lambda_0, then bias-correct."""
    inputs = TuningInputs.from_problem(problem, alpha)
    lam0, tau0 = lambda_fdist(inputs)
    final = fit(problem, lam0, config)
    corrected = restricted_ols(problem, final.support)
    K = resolve_k(problem, config)
    return TuningResult(
        method="th",
        lam=lam0,
        selected_fit=final,
        bias_corrected_beta=corrected,
        support=final.support,
        metadata={
            "tau0": tau0,
            "alpha": alpha,
            "zeta": inputs.zeta,
            "scaled_constants": fdist_scaled_constants(
                inputs, problem.partition.sizes, K
            ).tolist(),
        },
    )
