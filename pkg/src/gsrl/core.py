"""Problem representation: grouped designs, responses, objective and noise statistic."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GroupPartition:
    """A partition of the column indices {0, ..., p-1} into q disjoint groups.

    Parameters
    ----------
    groups : tuple of tuples of int
        Zero-based column indices, one tuple per group.  The groups must be
        nonempty, pairwise disjoint, and cover {0, ..., p-1} exactly.
    """

    groups: tuple[tuple[int, ...], ...]
    p: int = field(init=False)
    sizes: tuple[int, ...] = field(init=False)
    t_min: int = field(init=False)
    t_max: int = field(init=False)

    def __post_init__(self):
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        if not groups:
            raise ValueError("partition must contain at least one group")
        seen: list[int] = []
        for j, g in enumerate(groups):
            if not g:
                raise ValueError(f"group {j} is empty")
            seen.extend(g)
        p = len(seen)
        if sorted(seen) != list(range(p)):
            raise ValueError("groups do not partition columns")
        sizes = tuple(len(g) for g in groups)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "t_min", min(sizes))
        object.__setattr__(self, "t_max", max(sizes))
        # flat (cols, ptr) layout consumed by the solver kernels
        cols = np.fromiter((i for g in groups for i in g), dtype=np.int64, count=p)
        ptr = np.zeros(len(groups) + 1, dtype=np.int64)
        np.cumsum(sizes, out=ptr[1:])
        cols.setflags(write=False)
        ptr.setflags(write=False)
        object.__setattr__(self, "_cols", cols)
        object.__setattr__(self, "_ptr", ptr)

    @property
    def q(self) -> int:
        return len(self.groups)

    @classmethod
    def singletons(cls, p: int) -> "GroupPartition":
        """One group per column (the ungrouped / Square-Root-Lasso case)."""
        return cls(tuple((j,) for j in range(p)))

    @classmethod
    def contiguous(cls, p: int, size: int) -> "GroupPartition":
        """Consecutive groups of equal size; requires size to divide p."""
        if p % size != 0:
            raise ValueError(f"group size {size} does not divide p={p}")
        return cls(tuple(tuple(range(j, j + size)) for j in range(0, p, size)))

    def pointers(self) -> tuple[np.ndarray, np.ndarray]:
        """Flat column-index array and group offset array for kernel use."""
        return self._cols, self._ptr

    def block(self, v: np.ndarray, j: int) -> np.ndarray:
        """The j-th group view of a length-p vector."""
        return v[list(self.groups[j])]

    def group_norms(self, v: np.ndarray) -> np.ndarray:
        """Euclidean norm of each group block of v."""
        cols, ptr = self.pointers()
        sq = v[cols] ** 2
        return np.sqrt(np.add.reduceat(sq, ptr[:-1]))

    def support(self, v: np.ndarray, tol: float = 0.0) -> frozenset[int]:
        """Indices of groups whose block norm exceeds tol."""
        norms = self.group_norms(v)
        return frozenset(int(j) for j in np.nonzero(norms > tol)[0])


@dataclass(frozen=True)
class GsrlProblem:
    """A grouped regression problem: design X (n x p), response Y, partition.

    The `normalized` flag records whether columns have been rescaled to a
    unit Gram diagonal (diag(X'X/n) = 1); it is informational only and set
    by :func:`normalize_design`.
    """

    X: np.ndarray
    Y: np.ndarray
    partition: GroupPartition
    normalized: bool = False

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, order="C")
        Y = np.array(self.Y, dtype=np.float64).ravel()
        if X.ndim != 2:
            raise ValueError("X must be a 2-D matrix")
        n, p = X.shape
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if Y.shape[0] != n:
            raise ValueError(f"Y has length {Y.shape[0]}, expected {n}")
        if self.partition.p != p:
            raise ValueError("groups do not partition columns")
        norms = np.linalg.norm(X, axis=0)
        zero = np.nonzero(norms == 0.0)[0]
        if zero.size:
            raise ValueError(f"column {int(zero[0])} of X is identically zero")
        if self.normalized:
            d = norms**2 / n
            if np.max(np.abs(d - 1.0)) > 1e-10:
                raise ValueError("normalized flag set but Gram diagonal is not 1")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class GsrlFit:
    """A fitted coefficient vector with solver diagnostics.

    `objective` is reported in the sigma-free parameterization
    ||Y - X beta||_2 / sqrt(n) + (lambda/n) sum_j sqrt(T_j) ||beta^j||_2,
    so the internal solver scaling constant cancels out.
    `status` is one of "converged", "max_iterations", "exact_fit".
    """

    beta: np.ndarray
    lam: float
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool
    support: frozenset[int]
    status: str = "converged"

    def __post_init__(self):
        beta = np.array(self.beta, dtype=np.float64)
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)


@dataclass(frozen=True)
class TrueModel:
    """Ground truth for simulations: coefficients, noise level, active groups."""

    beta0: np.ndarray
    sigma: float
    partition: GroupPartition

    def __post_init__(self):
        beta0 = np.array(self.beta0, dtype=np.float64)
        if beta0.shape[0] != self.partition.p:
            raise ValueError("beta0 length does not match partition")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        beta0.setflags(write=False)
        object.__setattr__(self, "beta0", beta0)

    @property
    def active_set(self) -> frozenset[int]:
        return self.partition.support(self.beta0)

    @property
    def s(self) -> int:
        return len(self.active_set)

    @property
    def s_star(self) -> int:
        return sum(self.partition.sizes[j] for j in self.active_set)


def normalize_design(problem: GsrlProblem) -> tuple[GsrlProblem, np.ndarray]:
    """Rescale columns of X so that diag(X'X/n) = 1.

    Returns the rescaled problem and the per-column scale factors s_j with
    X_new[:, j] = s_j * X[:, j].  A coefficient vector fitted on the new
    problem maps back to the original column units as beta_orig = s * beta_new.
    """
    X, n = problem.X, problem.n
    norms = np.linalg.norm(X, axis=0)
    scales = math.sqrt(n) / norms
    new = GsrlProblem(X * scales, problem.Y, problem.partition, normalized=True)
    return new, scales


def objective_value(problem: GsrlProblem, beta: np.ndarray, lam: float) -> float:
    """||Y - X beta||_2 / sqrt(n) + (lambda/n) sum_j sqrt(T_j) ||beta^j||_2."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape[0] != problem.p:
        raise ValueError(f"beta has length {beta.shape[0]}, expected {problem.p}")
    n = problem.n
    resid = float(np.linalg.norm(problem.Y - problem.X @ beta))
    norms = problem.partition.group_norms(beta)
    penalty = float(np.sqrt(problem.partition.sizes) @ norms)
    return resid / math.sqrt(n) + lam * penalty / n


def noise_statistic_v(X: np.ndarray, partition: GroupPartition, eps: np.ndarray) -> float:
    """Noise statistic V = max_j sqrt(n) ||(X' eps)^j||_2 / (sqrt(T_j) ||eps||_2).

    This is the quantity the tuning parameter must dominate; it is invariant
    to the scale of eps.
    """
    X = np.asarray(X, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64).ravel()
    n = X.shape[0]
    if eps.shape[0] != n:
        raise ValueError(f"eps has length {eps.shape[0]}, expected {n}")
    enorm = float(np.linalg.norm(eps))
    if enorm == 0.0:
        raise ValueError("eps must be nonzero")
    g = X.T @ eps  # one pass; per-group norms below are O(p)
    block_norms = partition.group_norms(g)
    sizes = np.asarray(partition.sizes, dtype=np.float64)
    return float(np.max(math.sqrt(n) * block_norms / (np.sqrt(sizes) * enorm)))


def multivariate_to_grouped(U: np.ndarray, Z: np.ndarray) -> GsrlProblem:
    """Reduce a multivariate-response model Z = U A + E to a grouped problem.

    The returned problem has design U kron I_m of shape (n m) x (p m),
    response vec(Z') (rows of Z concatenated), and p groups of size m, the
    j-th corresponding to row j of A.
    """
    U = np.asarray(U, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    if U.ndim != 2 or Z.ndim != 2:
        raise ValueError("U and Z must be 2-D matrices")
    n, p = U.shape
    if Z.shape[0] != n:
        raise ValueError(f"Z has {Z.shape[0]} rows, expected {n}")
    m = Z.shape[1]
    if m < 1 or n < 1:
        raise ValueError("need m >= 1 and n >= 1")
    design = np.kron(U, np.eye(m))
    response = Z.ravel()
    partition = GroupPartition.contiguous(p * m, m)
    return GsrlProblem(design, response, partition)
