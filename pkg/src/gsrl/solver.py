"""S-TISP fixed-point solver, warm-started regularization paths, KKT certification.

The estimator minimizes ||Y - X beta||_2 / sqrt(n) + (lambda/n) sum_j
sqrt(T_j) ||beta^j||_2.  Internally the problem is rescaled by a constant
K (default ||X|| / sqrt(2)) and solved by iterating a grouped
soft-thresholding map whose threshold is proportional to the current
residual norm.  Fixed points of the map are exactly the KKT points of the
convex criterion, which is certified post hoc by :func:`kkt_check`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .core import GroupPartition, GsrlFit, GsrlProblem


class ExactFitError(ValueError):
    """Residual vanished: the criterion is non-differentiable at interpolation."""


@dataclass(frozen=True)
class SolverConfig:
    """S-TISP settings.

    K is the residual scaling constant; "auto" means ||X|| / sqrt(2).
    Convergence requires the relative iterate change to drop below
    `tolerance`; a fit is only marked converged if the final KKT residual
    is also below `kkt_tolerance`.  `residual_floor` is relative to ||Y||
    and guards the division by the residual norm.
    """

    K: float | str = "auto"
    max_iterations: int = 100_000
    tolerance: float = 1e-9
    kkt_tolerance: float = 1e-6
    residual_floor: float = 1e-12

    def __post_init__(self):
        if self.K != "auto" and not (isinstance(self.K, (int, float)) and self.K > 0):
            raise ValueError('K must be "auto" or a positive number')
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.tolerance <= 0 or self.kkt_tolerance <= 0 or self.residual_floor <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class PathConfig:
    """A strictly decreasing positive lambda grid, optionally warm-started."""

    grid: tuple[float, ...]
    warm_start: bool = True

    def __post_init__(self):
        grid = tuple(float(v) for v in self.grid)
        if not grid:
            raise ValueError("lambda grid must be nonempty")
        if any(v <= 0 for v in grid):
            raise ValueError("lambda grid must be positive")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ValueError("lambda grid must be strictly decreasing")
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class SolutionPath:
    """Fits along a decreasing lambda grid, in grid order."""

    lambdas: tuple[float, ...]
    fits: tuple[GsrlFit, ...]

    def __iter__(self):
        return iter(zip(self.lambdas, self.fits))


def operator_norm(X: np.ndarray, iterations: int = 50, tol: float = 1e-10) -> float:
    """Largest singular value of X by power iteration on X'X."""
    X = np.asarray(X, dtype=np.float64)
    p = X.shape[1]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(p)
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(iterations):
        w = X.T @ (X @ v)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
        if abs(lam - prev) <= tol * lam:
            break
        prev = lam
    return math.sqrt(lam)


def soft_threshold_group(a: np.ndarray, lam: float) -> np.ndarray:
    """Multivariate soft-thresholding: shrink ||a||_2 by lam, zero at or below."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    a = np.asarray(a, dtype=np.float64)
    norm = float(np.linalg.norm(a))
    if norm <= lam:
        return np.zeros_like(a)
    return a * ((norm - lam) / norm)


def stisp_iterate(
    problem_scaled: GsrlProblem, beta: np.ndarray, lambdas: np.ndarray
) -> np.ndarray:
    """One simultaneous S-TISP sweep on an already-scaled problem.

    Every group update uses the residual of the input iterate:
    beta^j <- Theta(beta^j + (X^j)'(Y - X beta); lambda_j ||X beta - Y||_2).
    """
    X, Y, part = problem_scaled.X, problem_scaled.Y, problem_scaled.partition
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if lambdas.shape[0] != part.q:
        raise ValueError("need one lambda per group")
    r = Y - X @ beta
    rnorm = float(np.linalg.norm(r))
    if rnorm == 0.0:
        raise ExactFitError("residual is zero; S-TISP update undefined")
    g = X.T @ r
    out = np.empty_like(np.asarray(beta, dtype=np.float64))
    for j, group in enumerate(part.groups):
        idx = list(group)
        out[idx] = soft_threshold_group(beta[idx] + g[idx], lambdas[j] * rnorm)
    return out


def eq4_penalties(problem: GsrlProblem, lam: float) -> np.ndarray:
    """Per-group constants c_j = lam sqrt(T_j) / sqrt(n) of the unscaled criterion."""
    sizes = np.asarray(problem.partition.sizes, dtype=np.float64)
    return lam * np.sqrt(sizes) / math.sqrt(problem.n)


def _objective_general(problem: GsrlProblem, beta: np.ndarray, penalties: np.ndarray) -> float:
    # sigma-free scale: ||Y - X beta|| / sqrt(n) + sum_j c_j ||beta^j|| / sqrt(n)
    resid = float(np.linalg.norm(problem.Y - problem.X @ beta))
    norms = problem.partition.group_norms(beta)
    return (resid + float(penalties @ norms)) / math.sqrt(problem.n)


def kkt_check_general(
    problem: GsrlProblem, beta: np.ndarray, penalties: np.ndarray,
    residual_floor: float = 1e-12,
) -> float:
    """KKT residual for criterion ||Y - X beta||_2 + sum_j c_j ||beta^j||_2.

    For active groups, the norm of the stationarity equation's defect
    (X'r)^j / ||r|| - c_j beta^j / ||beta^j||; for zero groups, the positive
    part of ||(X'r)^j|| / ||r|| - c_j.  Zero iff beta is a global minimum.
    """
    beta = np.asarray(beta, dtype=np.float64)
    penalties = np.asarray(penalties, dtype=np.float64)
    r = problem.Y - problem.X @ beta
    rnorm = float(np.linalg.norm(r))
    if rnorm <= residual_floor * float(np.linalg.norm(problem.Y)):
        raise ExactFitError("residual at or below floor; KKT check inapplicable")
    g = problem.X.T @ r
    worst = 0.0
    for j, group in enumerate(problem.partition.groups):
        idx = list(group)
        bj = beta[idx]
        gj = g[idx] / rnorm
        bnorm = float(np.linalg.norm(bj))
        if bnorm > 0.0:
            defect = float(np.linalg.norm(gj - penalties[j] * bj / bnorm))
        else:
            defect = max(0.0, float(np.linalg.norm(gj)) - penalties[j])
        worst = max(worst, defect)
    return worst


def kkt_check(problem: GsrlProblem, beta: np.ndarray, lam: float,
              residual_floor: float = 1e-12) -> float:
    """KKT residual in the lambda parameterization (c_j = lam sqrt(T_j)/sqrt(n))."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return kkt_check_general(problem, beta, eq4_penalties(problem, lam), residual_floor)


def lambda_max(problem: GsrlProblem) -> float:
    """Smallest lambda for which the all-zero vector is a solution."""
    g = problem.X.T @ problem.Y
    norms = problem.partition.group_norms(g)
    sizes = np.asarray(problem.partition.sizes, dtype=np.float64)
    ynorm = float(np.linalg.norm(problem.Y))
    if ynorm == 0.0:
        return 0.0
    return float(np.max(math.sqrt(problem.n) * norms / (np.sqrt(sizes) * ynorm)))


def resolve_k(problem: GsrlProblem, config: SolverConfig) -> float:
    return operator_norm(problem.X) / math.sqrt(2.0) if config.K == "auto" else float(config.K)


def fit_general(
    problem: GsrlProblem,
    penalties: np.ndarray,
    config: SolverConfig = SolverConfig(),
    init: np.ndarray | None = None,
    _lam_label: float = float("nan"),
) -> GsrlFit:
    """Solve argmin ||Y - X beta||_2 + sum_j c_j ||beta^j||_2 by S-TISP.

    penalties are the per-group constants c_j of the unscaled criterion; the
    internal K-scaling (X <- X/K, Y <- Y/K, thresholds c_j/K) is invisible
    in the returned fit.
    """
    penalties = np.asarray(penalties, dtype=np.float64)
    part = problem.partition
    if penalties.shape[0] != part.q:
        raise ValueError("need one penalty constant per group")
    if np.any(penalties <= 0):
        raise ValueError("penalty constants must be positive")
    K = resolve_k(problem, config)
    Xs = problem.X / K
    XsT = np.ascontiguousarray(Xs.T)
    Ys = problem.Y / K
    thresholds = penalties / K
    if init is None:
        beta = np.zeros(problem.p)
    else:
        beta = np.array(init, dtype=np.float64)
        if beta.shape[0] != problem.p:
            raise ValueError("init has wrong length")
    cols, ptr = part.pointers()
    floor = config.residual_floor * float(np.linalg.norm(Ys))
    iterations, status_code = _kernels.stisp_solve(
        Xs, XsT, Ys, beta, cols, ptr, thresholds,
        config.tolerance, config.max_iterations, floor,
    )
    if status_code == _kernels.STATUS_EXACT_FIT:
        status = "exact_fit"
        kkt = float("nan")
        converged = False
    else:
        kkt = kkt_check_general(problem, beta, penalties, config.residual_floor)
        if status_code == _kernels.STATUS_CONVERGED and kkt <= config.kkt_tolerance:
            status = "converged"
            converged = True
        else:
            status = "converged" if status_code == _kernels.STATUS_CONVERGED else "max_iterations"
            converged = False
    return GsrlFit(
        beta=beta,
        lam=_lam_label,
        objective=_objective_general(problem, beta, penalties),
        kkt_residual=kkt,
        iterations=int(iterations),
        converged=converged,
        support=part.support(beta),
        status=status,
    )


def fit(
    problem: GsrlProblem,
    lam: float,
    config: SolverConfig = SolverConfig(),
    init: np.ndarray | None = None,
) -> GsrlFit:
    """Fit the group square-root lasso at a single lambda."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return fit_general(problem, eq4_penalties(problem, lam), config, init, _lam_label=lam)


def default_path_grid(problem: GsrlProblem, K: float | None = None,
                      min_exp: float = -6.0, max_exp: float = 0.0,
                      step: float = 0.2) -> tuple[float, ...]:
    """The standard path grid lambda / (sqrt(n) K) = 2^max_exp, ..., 2^min_exp.

    With the defaults this is the 31-point grid 2^0, 2^-0.2, ..., 2^-6,
    in decreasing order.
    """
    if K is None:
        K = operator_norm(problem.X) / math.sqrt(2.0)
    count = int(round((max_exp - min_exp) / step)) + 1
    exps = [max_exp - i * step for i in range(count)]
    base = math.sqrt(problem.n) * K
    return tuple(base * 2.0**e for e in exps)


def fit_path(
    problem: GsrlProblem,
    path: PathConfig,
    config: SolverConfig = SolverConfig(),
) -> SolutionPath:
    """Fit along a decreasing grid, warm-starting each lambda from the last fit.

    Per-lambda non-convergence is recorded in the fit flags; the path never
    aborts early.
    """
    if config.K == "auto":
        config = replace(config, K=operator_norm(problem.X) / math.sqrt(2.0))
    fits = []
    init = None
    for lam in path.grid:
        f = fit(problem, lam, config, init=init)
        fits.append(f)
        if path.warm_start:
            init = f.beta
    return SolutionPath(lambdas=path.grid, fits=tuple(fits))
