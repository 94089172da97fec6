"""Shared fixtures and brute-force oracles for the test suite."""

import itertools

import numpy as np
import pytest

from gsrl import GroupPartition, GsrlProblem, objective_value


def make_problem(rng, n, sizes, snr=2.0):
    """Random grouped problem with the first half of the groups active."""
    p = sum(sizes)
    groups, start = [], 0
    for t in sizes:
        groups.append(tuple(range(start, start + t)))
        start += t
    part = GroupPartition(tuple(groups))
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    active = groups[: max(1, len(groups) // 2)]
    for g in active:
        beta[list(g)] = snr * rng.standard_normal(len(g))
    Y = X @ beta + rng.standard_normal(n)
    return GsrlProblem(X, Y, part), beta


def mixed_partition(rng, p):
    """Partition of p columns into groups of random sizes 1..3."""
    sizes = []
    left = p
    while left > 0:
        t = min(int(rng.integers(1, 4)), left)
        sizes.append(t)
        left -= t
    groups, start = [], 0
    for t in sizes:
        groups.append(tuple(range(start, start + t)))
        start += t
    return GroupPartition(tuple(groups))


def golden_section(f, lo, hi, tol=1e-12, max_iter=200):
    """Golden-section minimizer of a unimodal scalar function on [lo, hi]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def grid_search_oracle(problem, lam, radius=6.0, points=13, rounds=14, shrink=0.4):
    """Brute-force minimizer of the penalized criterion for tiny p.

    Searches a full tensor grid in [center - w, center + w]^p and shrinks the
    window around the running argmin.  Final resolution is about
    2 * radius * shrink**rounds / (points - 1), far below the test tolerances.
    """
    p = problem.p
    if p > 3:
        raise ValueError("oracle is only meant for p <= 3")
    center = np.zeros(p)
    width = radius
    best = None
    for _ in range(rounds):
        axes = [np.linspace(center[i] - width, center[i] + width, points)
                for i in range(p)]
        grid = np.array(list(itertools.product(*axes)))
        resid = problem.Y[None, :] - grid @ problem.X.T
        rss = np.sqrt(np.einsum("ij,ij->i", resid, resid)) / np.sqrt(problem.n)
        penalty = np.zeros(len(grid))
        for g in problem.partition.groups:
            idx = list(g)
            penalty += np.sqrt(len(g)) * np.linalg.norm(grid[:, idx], axis=1)
        values = rss + lam * penalty / problem.n
        k = int(np.argmin(values))
        center = grid[k]
        best = values[k]
        width *= shrink
    # polish: the criterion is convex, refine each coordinate by golden section
    for _ in range(3):
        for i in range(p):
            def f(v, i=i):
                c = center.copy()
                c[i] = v
                return objective_value(problem, c, lam)
            center[i] = golden_section(f, center[i] - width / shrink, center[i] + width / shrink)
    return center, objective_value(problem, center, lam)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
