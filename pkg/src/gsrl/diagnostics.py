"""Computable checks for the design conditions behind support recovery.

The irrepresentable-type constants are maxima of convex functions over a
product of Euclidean balls; the exact value is attained at extreme points
but there are exponentially many of them for group sizes > 1.  We therefore
report a sandwich: a provable upper bound together with a lower estimate
from alternating ascent.  For singleton groups the ascent reaches the exact
value (the maximum sits at sign vertices).

The compatibility constant kappa is NOT computed here: verifying it over
the whole cone is infeasible, so it is a user-supplied input to
:func:`sparsity_condition`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import GroupPartition, GsrlProblem, noise_statistic_v


@dataclass(frozen=True)
class DesignReport:
    """Sandwich bounds for the design constants on a given support.

    The true irrepresentable constant lies between gir_ascent_estimate and
    gir_upper_bound.  xi_inf_bound is exact (the inner problem separates by
    rows).  gram_blocks holds (Sigma11, Sigma12, Sigma21, Sigma22).
    """

    gir_upper_bound: float
    gir_ascent_estimate: float
    xi_inf_bound: float
    gram_blocks: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    sigma11_invertible: bool
    notes: tuple[str, ...] = field(default_factory=tuple)


def _split_columns(partition: GroupPartition, support) -> tuple[list[int], list[int], list[tuple[int, int]], list[tuple[int, int]]]:
    """Column order and (start, size) block layout for S and S^c groups."""
    support = set(support)
    for j in support:
        if not 0 <= j < partition.q:
            raise ValueError(f"group index {j} outside 0..{partition.q - 1}")
    s_cols: list[int] = []
    s_blocks: list[tuple[int, int]] = []
    for j in sorted(support):
        s_blocks.append((len(s_cols), partition.sizes[j]))
        s_cols.extend(partition.groups[j])
    c_cols: list[int] = []
    c_blocks: list[tuple[int, int]] = []
    for j in range(partition.q):
        if j in support:
            continue
        c_blocks.append((len(c_cols), partition.sizes[j]))
        c_cols.extend(partition.groups[j])
    return s_cols, c_cols, s_blocks, c_blocks


def gram_blocks(problem: GsrlProblem, support) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The partitioned Gram matrix (Sigma11, Sigma12, Sigma21, Sigma22)."""
    s_cols, c_cols, _, _ = _split_columns(problem.partition, support)
    Xs = problem.X[:, s_cols]
    Xc = problem.X[:, c_cols]
    n = problem.n
    return Xs.T @ Xs / n, Xs.T @ Xc / n, Xc.T @ Xs / n, Xc.T @ Xc / n


def _ball_linear_max(row: np.ndarray, blocks: list[tuple[int, int]]) -> float:
    # max of row . v over the product of balls ||v^k|| <= sqrt(T_k)
    total = 0.0
    for start, size in blocks:
        total += np.sqrt(size) * float(np.linalg.norm(row[start : start + size]))
    return total


def _ascent_block_max(
    M: np.ndarray,
    in_blocks: list[tuple[int, int]],
    rounds: int,
    restarts: int,
    rng: np.random.Generator,
) -> float:
    """Alternating ascent for max ||M v||_2 over the product of input balls."""
    best = 0.0
    for r in range(restarts):
        if r == 0:
            # deterministic start: each v^k on its ball along the ones direction
            v = np.concatenate([np.ones(size) for _, size in in_blocks])
            for start, size in in_blocks:
                blk = v[start : start + size]
                v[start : start + size] = np.sqrt(size) * blk / np.linalg.norm(blk)
        else:
            v = rng.standard_normal(M.shape[1])
            for start, size in in_blocks:
                blk = v[start : start + size]
                norm = np.linalg.norm(blk)
                if norm > 0:
                    v[start : start + size] = np.sqrt(size) * blk / norm
        val = float(np.linalg.norm(M @ v))
        for _ in range(rounds):
            w = M @ v
            wnorm = np.linalg.norm(w)
            if wnorm == 0.0:
                break
            u = w / wnorm
            z = M.T @ u
            for start, size in in_blocks:
                blk = z[start : start + size]
                norm = np.linalg.norm(blk)
                if norm > 0:
                    v[start : start + size] = np.sqrt(size) * blk / norm
            new_val = float(np.linalg.norm(M @ v))
            if new_val <= val * (1.0 + 1e-13):
                val = max(val, new_val)
                break
            val = new_val
        best = max(best, val)
    return best


def gir_bound(
    problem: GsrlProblem,
    support,
    rounds: int = 100,
    restarts: int = 5,
    seed=0,
) -> DesignReport:
    """Sandwich for the group irrepresentable constant on the given support.

    Upper bound: max over inactive groups j of
    sum_k sqrt(T_k) ||block_jk||_op / sqrt(T_j), blocks taken from
    Sigma21 Sigma11^{-1}.  Lower estimate: alternating ascent over the
    product of input balls and the output direction.
    """
    part = problem.partition
    support = set(support)
    s11, s12, s21, s22 = gram_blocks(problem, support)
    _, _, s_blocks, c_blocks = _split_columns(part, support)
    notes: list[str] = []
    if not support:
        return DesignReport(0.0, 0.0, float("nan"), (s11, s12, s21, s22), True,
                            ("empty support: constants are trivially zero",))
    cond = np.linalg.cond(s11)
    if not np.isfinite(cond) or cond > 1e12:
        return DesignReport(
            float("nan"), float("nan"), float("nan"),
            (s11, s12, s21, s22), False,
            (f"Sigma11 numerically singular (cond={cond:.3g})",),
        )
    M = s21 @ np.linalg.inv(s11)
    c_groups = [j for j in range(part.q) if j not in support]
    rng = np.random.default_rng(seed)
    upper = 0.0
    estimate = 0.0
    for pos, j in enumerate(c_groups):
        start, size = c_blocks[pos]
        Mj = M[start : start + size, :]
        bound_j = 0.0
        for k_start, k_size in s_blocks:
            block = Mj[:, k_start : k_start + k_size]
            bound_j += np.sqrt(k_size) * float(np.linalg.norm(block, 2))
        upper = max(upper, bound_j / np.sqrt(size))
        est_j = _ascent_block_max(Mj, s_blocks, rounds, restarts, rng)
        estimate = max(estimate, est_j / np.sqrt(size))
    xi = xi_inf_bound(problem, support)
    return DesignReport(upper, estimate, xi, (s11, s12, s21, s22), True, tuple(notes))


def xi_inf_bound(problem: GsrlProblem, support) -> float:
    """Exact value of the sup-norm design constant on the given support.

    max over rows i (in group j) of Sigma11^{-1} of
    sum_k sqrt(T_k) ||row_{i, G_k}||_2 / sqrt(T_j); the max over the product
    of balls separates by rows, so this is not just a bound.
    """
    part = problem.partition
    support = set(support)
    if not support:
        raise ValueError("support must be nonempty")
    s11, *_ = gram_blocks(problem, support)
    cond = np.linalg.cond(s11)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(f"Sigma11 numerically singular (cond={cond:.3g})")
    inv = np.linalg.inv(s11)
    _, _, s_blocks, _ = _split_columns(part, support)
    worst = 0.0
    row_pos = 0
    for j_pos, j in enumerate(sorted(support)):
        size = part.sizes[j]
        for i in range(row_pos, row_pos + size):
            worst = max(worst, _ball_linear_max(inv[i], s_blocks) / np.sqrt(size))
        row_pos += size
    return worst


def event_frequency(
    problem: GsrlProblem,
    lam: float,
    divisor: float = 1.0,
    draws: int = 1000,
    seed=0,
) -> float:
    """Monte-Carlo frequency of the event {V <= lambda / divisor}.

    Noise draws are standard Gaussian; V is recomputed per draw.
    Deterministic given the seed.
    """
    if draws < 1:
        raise ValueError("draws must be >= 1")
    if divisor <= 0:
        raise ValueError("divisor must be positive")
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(draws):
        eps = rng.standard_normal(problem.n)
        v = noise_statistic_v(problem.X, problem.partition, eps)
        if v <= lam / divisor:
            hits += 1
    return hits / draws


def cone_membership(
    delta: np.ndarray, partition: GroupPartition, support, gamma: float
) -> bool:
    """Whether sum_{j notin S} sqrt(T_j)||delta^j|| <= gamma sum_{j in S} sqrt(T_j)||delta^j||."""
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")
    support = set(support)
    norms = partition.group_norms(np.asarray(delta, dtype=np.float64))
    sizes = np.sqrt(np.asarray(partition.sizes, dtype=np.float64))
    inside = sum(sizes[j] * norms[j] for j in range(partition.q) if j in support)
    outside = sum(sizes[j] * norms[j] for j in range(partition.q) if j not in support)
    return outside <= gamma * inside


def sparsity_condition(s_star: float, n: int, kappa: float, lam: float) -> bool:
    """The sparsity requirement s* < n^2 kappa^2 / lambda^2 (strict)."""
    if s_star <= 0 or n <= 0 or kappa <= 0 or lam <= 0:
        raise ValueError("all inputs must be positive")
    return s_star < (n * kappa / lam) ** 2
