import math

import numpy as np
import pytest
import scipy.stats

from gsrl import (
    GroupPartition,
    GsrlProblem,
    PathConfig,
    SolverConfig,
    TuningInputs,
    cross_validate,
    fit,
    lambda_corollary,
    lambda_fdist,
    lambda_gaussian,
    lambda_max,
    lambda_srl_theoretical,
    restricted_ols,
    scv_bic,
    tune_fdist,
)
from gsrl.solver import default_path_grid
from gsrl.tuning import block_spectral_zetas, fdist_scaled_constants, _fold_indices

from conftest import make_problem


def _inputs(**kw):
    base = dict(n=100, q=10, t_min=1, t_max=1, zeta=1.0, zeta_j=(1.0,) * 10,
                alpha=0.05)
    base.update(kw)
    return TuningInputs(**base)


class TestTuningInputs:
    def test_from_problem_uses_block_spectral_norms(self, rng):
        prob, _ = make_problem(rng, 40, [2, 1, 3])
        inputs = TuningInputs.from_problem(prob, alpha=0.05)
        for j, g in enumerate(prob.partition.groups):
            block = prob.X[:, list(g)]
            expected = np.linalg.norm(block, 2) ** 2 / prob.n
            assert inputs.zeta_j[j] == pytest.approx(expected, rel=1e-12)
        assert inputs.zeta == max(inputs.zeta_j)
        assert np.allclose(block_spectral_zetas(prob), inputs.zeta_j)

    def test_validation(self):
        with pytest.raises(ValueError):
            _inputs(alpha=0.0)
        with pytest.raises(ValueError):
            _inputs(gamma_bar=-1.0)


class TestLambdaGaussian:
    def test_worked_value(self):
        # zeta=1, n=100, T=1, q=10, alpha=0.05:
        # sqrt(2) * 100 / sqrt(99) * (1 + sqrt(2 log 400))
        lam = lambda_gaussian(_inputs())
        manual = math.sqrt(2) * 100 / math.sqrt(99) * (1 + math.sqrt(2 * math.log(400)))
        assert lam == pytest.approx(manual, rel=1e-14)
        assert lam == pytest.approx(63.42, abs=0.01)

    def test_homogeneous_in_sqrt_zeta(self):
        assert lambda_gaussian(_inputs(zeta=2.0)) == pytest.approx(
            math.sqrt(2) * lambda_gaussian(_inputs()), rel=1e-14
        )

    def test_monotone_in_alpha(self):
        assert lambda_gaussian(_inputs(n=200, alpha=0.01)) > lambda_gaussian(
            _inputs(n=200)
        )

    def test_precondition_violation_names_inequality(self):
        with pytest.raises(ValueError, match="16 log"):
            lambda_gaussian(_inputs(n=30, t_max=1))
        with pytest.raises(ValueError, match="T_max < n"):
            lambda_gaussian(_inputs(n=100, t_max=100))


def test_lambda_corollary_ratios():
    base = lambda_gaussian(_inputs())
    inputs = _inputs(gamma_bar=2.0, eta_tilde=3.0)
    assert lambda_corollary(inputs, "A") / base == pytest.approx(2.0, rel=1e-15)
    assert lambda_corollary(inputs, "A1") / base == pytest.approx(6.0, rel=1e-15)
    with pytest.raises(ValueError):
        lambda_corollary(inputs, "B")


class TestLambdaFdist:
    def test_tau0_against_scipy(self):
        lam0, tau0 = lambda_fdist(_inputs(alpha=0.5, q=10))
        assert tau0 == pytest.approx(scipy.stats.f.ppf(1 - 0.05, 1, 99), rel=1e-8)
        manual = 100 * math.sqrt(1.0 * tau0 / (tau0 + 99))
        assert lam0 == pytest.approx(manual, rel=1e-12)

    def test_scaled_constants_consistent(self, rng):
        prob, _ = make_problem(rng, 50, [1, 2, 1, 2])
        inputs = TuningInputs.from_problem(prob, alpha=0.01)
        lam0, _ = lambda_fdist(inputs)
        K = 3.7
        consts = fdist_scaled_constants(inputs, prob.partition.sizes, K)
        sizes = np.asarray(prob.partition.sizes, dtype=float)
        # lambda_j = (lam0 / K) sqrt(T_j / n): the Eq.-4 grid point lam0
        assert np.allclose(consts, lam0 / K * np.sqrt(sizes / prob.n), rtol=1e-12)

    def test_order_of_magnitude_vs_gaussian(self, rng):
        # both rules bound the same event; compare where the Gaussian
        # precondition 16 log(2q/alpha) <= n - T_max is satisfied
        X = rng.standard_normal((200, 60))
        prob = GsrlProblem(X, rng.standard_normal(200), GroupPartition.contiguous(60, 3))
        inputs = TuningInputs.from_problem(prob, alpha=0.05)
        ratio = lambda_fdist(inputs)[0] / lambda_gaussian(inputs)
        assert 0.2 <= ratio <= 5.0


def test_lambda_srl_theoretical():
    import gsrl.dist as dist

    lam = lambda_srl_theoretical(50, 100)
    assert lam == pytest.approx(
        math.sqrt(50) * 1.1 * dist.normal_quantile(1 - 0.05 / 200), rel=1e-14
    )
    with pytest.raises(ValueError):
        lambda_srl_theoretical(50, 0)


def test_sigma_free_rules_ignore_noise_scale(rng):
    # criterion: outputs are bitwise identical whatever the noise level was
    X = rng.standard_normal((120, 8))
    part = GroupPartition.contiguous(8, 2)
    beta = np.zeros(8)
    beta[:2] = 1.0
    for sigma in (0.01, 1.0, 50.0):
        prob = GsrlProblem(X, X @ beta + sigma * rng.standard_normal(120), part)
        inputs = TuningInputs.from_problem(prob, alpha=0.05)
        if sigma == 0.01:
            ref_gauss = lambda_gaussian(inputs)
            ref_f = lambda_fdist(inputs)
        else:
            assert lambda_gaussian(inputs) == ref_gauss
            assert lambda_fdist(inputs) == ref_f


class TestRestrictedOls:
    def test_exact_recovery_noiseless(self, rng):
        part = GroupPartition(((0, 1), (2,), (3, 4)))
        X = rng.standard_normal((20, 5))
        beta0 = np.array([1.0, -2.0, 0.0, 0.0, 0.0])
        prob = GsrlProblem(X, X @ beta0, part)
        coef = restricted_ols(prob, {0})
        assert np.allclose(coef, beta0, atol=1e-8)

    def test_empty_support(self, rng):
        prob, _ = make_problem(rng, 10, [1, 1, 1])
        assert np.allclose(restricted_ols(prob, set()), 0.0)

    def test_rank_deficient_minimum_norm(self, rng):
        X = rng.standard_normal((10, 3))
        X = np.hstack([X, X[:, :1]])  # duplicate column
        prob = GsrlProblem(X, rng.standard_normal(10), GroupPartition.singletons(4))
        coef = restricted_ols(prob, {0, 1, 2, 3})
        # normal equations hold even though the design is singular
        assert np.allclose(X.T @ (prob.Y - X @ coef), 0.0, atol=1e-8)

    def test_bad_group_index(self, rng):
        prob, _ = make_problem(rng, 10, [1, 1])
        with pytest.raises(ValueError, match="group index"):
            restricted_ols(prob, {5})

    def test_never_increases_residual(self, rng):
        prob, _ = make_problem(rng, 30, [2, 1, 2])
        f = fit(prob, 0.3 * lambda_max(prob))
        coef = restricted_ols(prob, f.support)
        assert np.linalg.norm(prob.Y - prob.X @ coef) <= np.linalg.norm(
            prob.Y - prob.X @ f.beta
        ) + 1e-12


class TestFoldIndices:
    def test_partition_of_rows(self):
        folds = _fold_indices(23, 5, seed=1)
        stacked = np.concatenate(folds)
        assert sorted(stacked.tolist()) == list(range(23))
        assert max(len(f) for f in folds) - min(len(f) for f in folds) <= 1

    def test_validation(self):
        with pytest.raises(ValueError):
            _fold_indices(10, 1, seed=0)
        with pytest.raises(ValueError, match="exceeds"):
            _fold_indices(10, 11, seed=0)


class TestCrossValidate:
    def test_singleton_grid_forces_selection(self, rng):
        prob, _ = make_problem(rng, 30, [1, 2, 1])
        lam = 0.4 * lambda_max(prob)
        res = cross_validate(prob, PathConfig((lam,)), folds=3)
        assert res.lam == lam
        direct = fit(prob, lam)
        assert np.allclose(res.selected_fit.beta, direct.beta, atol=1e-10)
        assert np.allclose(res.bias_corrected_beta,
                           restricted_ols(prob, direct.support), atol=1e-12)

    def test_leave_one_out_runs(self, rng):
        prob, _ = make_problem(rng, 10, [1, 1])
        grid = PathConfig(default_path_grid(prob, min_exp=-2, step=1.0))
        res = cross_validate(prob, grid, folds=10)
        assert np.isfinite(res.metadata["total_errors"]).all()

    def test_one_se_rule_never_undershoots_argmin(self, rng):
        prob, _ = make_problem(rng, 60, [2, 2, 1, 1, 2])
        grid = PathConfig(default_path_grid(prob, min_exp=-4, step=0.4))
        res = cross_validate(prob, grid, folds=5, seed=3)
        md = res.metadata
        # the 1-SE pick sits at or before the raw minimizer on the grid
        assert md["selected_index"] <= md["argmin_index"]
        assert res.lam >= md["grid"][md["argmin_index"]]
        tot = md["total_errors"]
        assert tot[md["selected_index"]] <= tot[md["argmin_index"]] + md["one_se"] + 1e-9

    def test_support_outside_groups_is_zero(self, rng):
        prob, _ = make_problem(rng, 40, [2, 2, 2])
        grid = PathConfig(default_path_grid(prob, min_exp=-3, step=0.5))
        res = cross_validate(prob, grid)
        part = prob.partition
        for j in range(part.q):
            if j not in res.support:
                assert np.allclose(res.bias_corrected_beta[list(part.groups[j])], 0.0)


class TestScvBic:
    def test_single_pattern_selected(self, rng):
        prob, _ = make_problem(rng, 30, [1, 1, 1])
        lam = 0.5 * lambda_max(prob)
        res = scv_bic(prob, PathConfig((lam,)), folds=3)
        assert len(res.metadata["candidates"]) == 1
        assert res.support == fit(prob, lam).support

    def test_null_pattern_wins_on_pure_noise(self, rng):
        # pure-noise response: the BIC-corrected criterion must prefer the
        # all-zero pattern over anything the small-lambda fits pick up
        X = rng.standard_normal((40, 6))
        Y = rng.standard_normal(40)
        prob = GsrlProblem(X, Y, GroupPartition.singletons(6))
        grid = PathConfig(default_path_grid(prob, min_exp=-2, step=0.25))
        res = scv_bic(prob, grid, folds=5, seed=2)
        cands = res.metadata["candidates"]
        patterns = [tuple(c["pattern"]) for c in cands]
        assert () in patterns  # the null model is on the path
        null = next(c for c in cands if c["pattern"] == [])
        dense = max(cands, key=lambda c: c["df"])
        if dense["df"] >= 4:
            assert null["criterion"] < dense["criterion"]

    def test_candidates_in_path_order(self, rng):
        prob, _ = make_problem(rng, 50, [1, 2, 1, 2])
        grid = PathConfig(default_path_grid(prob, min_exp=-4, step=0.4))
        res = scv_bic(prob, grid)
        dfs = [c["df"] for c in res.metadata["candidates"]]
        # supports only grow along a decreasing grid here; order is the path's
        assert dfs == sorted(dfs)
        assert res.metadata["candidates"][0]["df"] == 0 or dfs[0] <= dfs[-1]

    def test_bic_criterion_formula(self, rng):
        prob, _ = make_problem(rng, 30, [1, 1, 1, 1])
        grid = PathConfig(default_path_grid(prob, min_exp=-3, step=0.5))
        res = scv_bic(prob, grid)
        n = prob.n
        for c in res.metadata["candidates"]:
            expected = c["validation_sse"] * (1 + c["df"] * math.log(n) / n)
            assert c["criterion"] == pytest.approx(expected, rel=1e-12)


def test_tune_fdist_end_to_end(rng):
    prob, beta0 = make_problem(rng, 80, [2, 2, 2, 2], snr=4.0)
    res = tune_fdist(prob, alpha=0.01)
    inputs = TuningInputs.from_problem(prob, alpha=0.01)
    lam0, tau0 = lambda_fdist(inputs)
    assert res.lam == lam0
    assert res.metadata["tau0"] == tau0
    assert res.method == "th"
    assert res.selected_fit.converged
