"""Simulator unit tests.

Statistical claims are checked against closed-form targets at 4 standard
errors of the relevant Monte-Carlo estimate; fixed seeds keep every run
on the same draw.  Oracle constants frozen from mpmath at 30 digits.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmm_selftrain.evolution import MixtureParams, alpha_of, f_sigma, f_tilde
from gmm_selftrain.simulator import (
    TrialConfig,
    bayes_error,
    empirical_risk,
    erm_initial,
    erm_refine,
    erm_refine_reuse,
    loss,
    population_risk,
    population_risk_mc,
    pseudo_label,
    run_trials,
    sample_labelled,
)
from gmm_selftrain.specfn import q_function

BAYES_06 = 0.0477903522728147079     # Q(1/0.6)
LOSS_EXAMPLE = 3.0310242469692907    # log(4*pi) + 1/2


def _corr(theta, mu):
    return float(theta @ mu) / np.linalg.norm(theta)


def _offset(d, sigma):
    return np.log(2.0) + 0.5 * d * np.log(2.0 * np.pi) + d * np.log(sigma)


BIG_N = 10 ** 6
BIG_MU = np.array([0.8, 0.6, 0.0])
BIG_SIGMA = 0.7


@pytest.fixture(scope="module")
def big_draw():
    rng = np.random.default_rng(2024)
    return sample_labelled(BIG_N, 3, BIG_MU, BIG_SIGMA, rng)


@pytest.fixture(scope="module")
def small_run():
    config = TrialConfig(
        params=MixtureParams(sigma=0.6, d=5, n=10, m=1000, tau=3),
        mode="fresh", trials=400, seed=123)
    return run_trials(config)


class TestSampleLabelled:
    N = BIG_N
    MU = BIG_MU
    SIGMA = BIG_SIGMA

    def test_shapes_and_label_values(self):
        rng = np.random.default_rng(0)
        x, y = sample_labelled(17, 4, np.array([1.0, 0, 0, 0]), 0.5, rng)
        assert x.shape == (17, 4)
        assert y.shape == (17,)
        assert set(np.unique(y)) <= {-1.0, 1.0}

    def test_class_mean_clt(self, big_draw):
        x, y = big_draw
        est = (y[:, None] * x).mean(axis=0)
        tol = 4 * self.SIGMA / np.sqrt(self.N)
        assert np.all(np.abs(est - self.MU) <= tol)

    def test_label_frequency(self, big_draw):
        _, y = big_draw
        freq = np.mean(y == 1.0)
        assert abs(freq - 0.5) <= 4 / (2 * np.sqrt(self.N))

    def test_per_coordinate_variance(self, big_draw):
        # var(X_k) = sigma^2 + mu_k^2 by the law of total variance
        x, _ = big_draw
        target = self.SIGMA ** 2 + self.MU ** 2
        var = x.var(axis=0, ddof=1)
        centered = (x - x.mean(axis=0)) ** 2
        se = centered.std(axis=0, ddof=1) / np.sqrt(self.N)
        assert np.all(np.abs(var - target) <= 4 * se)


class TestErmInitial:
    def test_single_sample(self):
        x = np.array([[0.3, -1.2]])
        assert np.array_equal(erm_initial(x, np.array([-1.0])), -x[0])

    def test_antipodal_pair_recovers_mean(self):
        mu = np.array([0.6, -0.8])
        x = np.stack([mu, -mu])
        y = np.array([1.0, -1.0])
        assert erm_initial(x, y) == pytest.approx(mu, rel=1e-15)

    def test_unbiased_over_trials(self):
        # theta_0 ~ N(mu, sigma^2/n I), so the 2000-trial mean sits
        # within 4 sigma / sqrt(n * trials) of mu per coordinate
        n, sigma, trials = 10, 0.6, 2000
        mu = np.array([1.0, 0.0])
        rng = np.random.default_rng(31)
        acc = np.zeros(2)
        for _ in range(trials):
            x, y = sample_labelled(n, 2, mu, sigma, rng)
            acc += erm_initial(x, y)
        est = acc / trials
        assert np.all(np.abs(est - mu) <= 4 * sigma / np.sqrt(n * trials))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            erm_initial(np.empty((0, 2)), np.empty(0))

    def test_label_shape_mismatch(self):
        with pytest.raises(ValueError):
            erm_initial(np.ones((3, 2)), np.ones(4))


class TestPseudoLabel:
    def test_aligned_and_opposed(self):
        mu = np.array([1.0, 0.0])
        assert pseudo_label(mu, mu[None]) == 1.0
        assert pseudo_label(mu, -mu[None]) == -1.0

    def test_tie_goes_positive(self):
        theta = np.array([1.0, 0.0])
        x = np.array([[0.0, 3.7], [0.0, -2.0], [0.0, 0.0]])
        assert np.array_equal(pseudo_label(theta, x), [1.0, 1.0, 1.0])

    def test_zero_parameter_rejected(self):
        with pytest.raises(ValueError):
            pseudo_label(np.zeros(3), np.ones((2, 3)))

    def test_scale_invariant(self):
        rng = np.random.default_rng(5)
        theta = rng.standard_normal(4)
        x = rng.standard_normal((50, 4))
        assert np.array_equal(pseudo_label(theta, x), pseudo_label(10.0 * theta, x))

    def test_mislabel_rate_matches_q(self):
        # fixed theta of correlation alpha with mu: P(mislabel) = Q(alpha/sigma)
        sigma, n_draws = 0.6, 10 ** 6
        mu = np.array([1.0, 0.0])
        alpha = 0.9
        theta = np.array([alpha, np.sqrt(1 - alpha ** 2)])
        rng = np.random.default_rng(77)
        y = np.where(rng.random(n_draws) < 0.5, -1.0, 1.0)
        x = sigma * rng.standard_normal((n_draws, 2)) + y[:, None] * mu
        rate = np.mean(pseudo_label(theta, x) != y)
        p = q_function(alpha / sigma)
        se = np.sqrt(p * (1 - p) / n_draws)
        assert abs(rate - p) <= 4 * se


class TestErmRefine:
    def test_batch_of_one(self):
        x = np.array([[2.0, -0.5, 1.0]])
        assert np.array_equal(erm_refine(x, np.array([1.0])), x[0])

    def test_flipped_labels_negate(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((20, 3))
        y = np.where(rng.random(20) < 0.5, -1.0, 1.0)
        assert np.array_equal(erm_refine(x, -y), -erm_refine(x, y))

    def test_correlation_converges_to_fsigma(self):
        # E[rho(theta_1, mu)] -> F_sigma(alpha_0) as m grows; at m=1e4
        # the residual O(1/m) bias needs a small absolute allowance on
        # top of the cross-trial error
        sigma, n, m, trials = 0.6, 10, 10_000, 250
        mu = np.array([1.0, 0.0])
        xi0, s = 0.5, 1.2
        theta0 = np.array([1.0 + sigma * xi0 / np.sqrt(n), sigma * s / np.sqrt(n)])
        alpha0 = alpha_of(xi0, s, sigma, n)
        assert _corr(theta0, mu) == pytest.approx(alpha0, rel=1e-12)

        rng = np.random.default_rng(11)
        rhos = np.empty(trials)
        for k in range(trials):
            y = np.where(rng.random(m) < 0.5, -1.0, 1.0)
            x = sigma * rng.standard_normal((m, 2)) + y[:, None] * mu
            rhos[k] = _corr(erm_refine(x, pseudo_label(theta0, x)), mu)
        se = rhos.std(ddof=1) / np.sqrt(trials)
        assert abs(rhos.mean() - f_sigma(alpha0, sigma)) <= 4 * se + 5e-5


class TestErmRefineReuse:
    def test_zero_labelled_weight_collapses(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((100, 2))
        y = np.where(rng.random(100) < 0.5, -1.0, 1.0)
        out = erm_refine_reuse(np.array([4.0, -7.0]), x, y, 0)
        assert np.array_equal(out, erm_refine(x, y))

    def test_equal_counts_zero_prev_halves(self):
        rng = np.random.default_rng(4)
        m = 64
        x = rng.standard_normal((m, 3))
        y = np.where(rng.random(m) < 0.5, -1.0, 1.0)
        out = erm_refine_reuse(np.zeros(3), x, y, m)
        assert out == pytest.approx(0.5 * erm_refine(x, y), rel=1e-14)

    def test_convex_combination(self):
        rng = np.random.default_rng(6)
        n, m = 10, 40
        theta_prev = rng.standard_normal(2)
        x = rng.standard_normal((m, 2))
        y = np.where(rng.random(m) < 0.5, -1.0, 1.0)
        expected = (n * theta_prev + (y[:, None] * x).sum(axis=0)) / (n + m)
        assert erm_refine_reuse(theta_prev, x, y, n) == pytest.approx(
            expected, rel=1e-14)

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            erm_refine_reuse(np.ones(2), np.empty((0, 2)), np.empty(0), 10)

    def test_correlation_matches_f_tilde(self):
        # one reuse round from a fixed decomposed theta_0; same finite-m
        # allowance as the fresh-mode check
        sigma, n, m, trials = 0.6, 10, 10_000, 250
        mu = np.array([1.0, 0.0])
        xi0, s = 0.5, 1.2
        theta0 = np.array([1.0 + sigma * xi0 / np.sqrt(n), sigma * s / np.sqrt(n)])
        alpha0 = alpha_of(xi0, s, sigma, n)
        w = n / (n + m)

        rng = np.random.default_rng(12)
        rhos = np.empty(trials)
        for k in range(trials):
            y = np.where(rng.random(m) < 0.5, -1.0, 1.0)
            x = sigma * rng.standard_normal((m, 2)) + y[:, None] * mu
            theta1 = erm_refine_reuse(theta0, x, pseudo_label(theta0, x), n)
            rhos[k] = _corr(theta1, mu)
        se = rhos.std(ddof=1) / np.sqrt(trials)
        pred = f_tilde(alpha0, sigma, xi0, s, n, w)
        assert abs(rhos.mean() - pred) <= 4 * se + 5e-5


class TestLoss:
    def test_minimum_at_matched_sample(self):
        theta = np.array([0.4, -0.3])
        for y in (1.0, -1.0):
            assert loss(theta, y * theta, y, 0.7) == pytest.approx(
                _offset(2, 0.7), rel=1e-15)

    def test_frozen_example(self):
        val = loss(np.array([1.0, 0.0]), np.array([0.0, 0.0]), 1.0, 1.0)
        assert val == pytest.approx(LOSS_EXAMPLE, rel=1e-15)

    def test_batch_shape(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((5, 3))
        y = np.ones(5)
        out = loss(np.array([1.0, 0, 0]), x, y, 0.5)
        assert out.shape == (5,)
        assert out[2] == pytest.approx(
            loss(np.array([1.0, 0, 0]), x[2], 1.0, 0.5), rel=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            loss(np.ones(3), np.ones(4), 1.0, 0.5)

    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(deadline=None, max_examples=25)
    def test_sign_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        theta = rng.standard_normal(3)
        x = rng.standard_normal(3)
        y = 1.0 if rng.random() < 0.5 else -1.0
        assert loss(theta, x, y, 0.8) == loss(theta, -x, -y, 0.8)


class TestPopulationRisk:
    def test_minimum_value(self):
        mu = np.array([1.0, 0.0, 0.0])
        assert population_risk(mu, mu, 0.6) == pytest.approx(
            _offset(3, 0.6) + 1.5, rel=1e-15)

    def test_quadratic_growth_rate(self):
        mu = np.array([1.0, 0.0])
        sigma = 0.5
        base = population_risk(mu, mu, sigma)
        for gap in (0.3, 1.7):
            theta = mu + np.array([0.0, gap])
            assert population_risk(theta, mu, sigma) - base == pytest.approx(
                gap ** 2 / (2 * sigma ** 2), rel=1e-12)

    def test_mu_is_optimal(self):
        rng = np.random.default_rng(13)
        mu = np.array([0.6, 0.8])
        best = population_risk(mu, mu, 0.7)
        for _ in range(100):
            theta = rng.standard_normal(2)
            assert population_risk(theta, mu, 0.7) >= best

    def test_analytic_matches_mc(self):
        rng = np.random.default_rng(14)
        mu = np.array([1.0, 0.0])
        theta = rng.standard_normal(2)
        est, se = population_risk_mc(theta, mu, 0.6, 10 ** 6, rng)
        assert abs(est - population_risk(theta, mu, 0.6)) <= 4 * se

    def test_mc_seed_forms_agree(self):
        mu = np.array([1.0, 0.0])
        theta = np.array([0.9, 0.2])
        a = population_risk_mc(theta, mu, 0.6, 1000, 42)
        b = population_risk_mc(theta, mu, 0.6, 1000, 42)
        assert a == b

    def test_mc_tiny_test_set_rejected(self):
        with pytest.raises(ValueError):
            population_risk_mc(np.ones(2), np.ones(2), 0.6, 1, 0)


class TestEmpiricalRisk:
    SIGMA = 0.6

    @pytest.fixture()
    def sets(self):
        rng = np.random.default_rng(15)
        xl = rng.standard_normal((6, 2))
        yl = np.where(rng.random(6) < 0.5, -1.0, 1.0)
        xb = rng.standard_normal((9, 2))
        yb = np.where(rng.random(9) < 0.5, -1.0, 1.0)
        return (xl, yl), (xb, yb)

    def test_pure_weights(self, sets):
        labelled, pseudo = sets
        theta = np.array([0.5, -0.5])
        lab = float(np.mean(loss(theta, *labelled, self.SIGMA)))
        bat = float(np.mean(loss(theta, *pseudo, self.SIGMA)))
        assert empirical_risk(theta, labelled, pseudo, 1.0, self.SIGMA) == lab
        assert empirical_risk(theta, labelled, pseudo, 0.0, self.SIGMA) == bat
        mix = empirical_risk(theta, labelled, pseudo, 0.25, self.SIGMA)
        assert mix == pytest.approx(0.25 * lab + 0.75 * bat, rel=1e-14)

    def test_missing_set_forces_weight(self, sets):
        labelled, pseudo = sets
        theta = np.array([0.5, -0.5])
        assert empirical_risk(theta, labelled, None, 0.3, self.SIGMA) == \
            empirical_risk(theta, labelled, pseudo, 1.0, self.SIGMA)
        assert empirical_risk(theta, None, pseudo, 0.3, self.SIGMA) == \
            empirical_risk(theta, labelled, pseudo, 0.0, self.SIGMA)

    def test_single_matched_sample_is_floor(self):
        theta = np.array([0.2, 0.9])
        labelled = (theta[None], np.array([1.0]))
        assert empirical_risk(theta, labelled, None, 1.0, self.SIGMA) == \
            pytest.approx(_offset(2, self.SIGMA), rel=1e-15)

    def test_both_empty_rejected(self):
        with pytest.raises(ValueError):
            empirical_risk(np.ones(2), None, None, 0.5, self.SIGMA)

    @pytest.mark.parametrize("w", [-0.1, 1.5])
    def test_weight_domain(self, sets, w):
        labelled, pseudo = sets
        with pytest.raises(ValueError):
            empirical_risk(np.ones(2), labelled, pseudo, w, self.SIGMA)


class TestBayesError:
    def test_vanishes_at_low_noise(self):
        assert bayes_error(0.1) < 1e-10

    def test_frozen_value(self):
        assert bayes_error(0.6) == pytest.approx(BAYES_06, rel=1e-12)

    def test_high_noise_limit(self):
        assert bayes_error(1e6) == pytest.approx(0.5, abs=1e-6)
        assert bayes_error(2.0) < 0.5

    def test_domain(self):
        with pytest.raises(ValueError):
            bayes_error(0.0)


class TestTrialConfig:
    @pytest.mark.parametrize("kwargs", [
        {"mode": "batch"},
        {"trials": 0},
        {"trials": 2.5},
        {"seed": -1},
        {"population_risk": "exact"},
        {"pop_mc_size": 10},
        {"mu": np.ones(3)},            # wrong shape for d=2
        {"mu": np.array([1.0, 1.0])},  # not unit length
    ])
    def test_validation(self, kwargs):
        params = MixtureParams(sigma=0.6, d=2, n=5, m=100, tau=2)
        with pytest.raises(ValueError):
            TrialConfig(params=params, **kwargs)

    def test_default_mean_is_first_basis_vector(self):
        config = TrialConfig(params=MixtureParams(sigma=0.6, d=4, n=5, m=100))
        assert np.array_equal(config.mean_vector(), [1.0, 0, 0, 0])

    def test_explicit_mean_kept(self):
        mu = np.array([0.6, 0.8])
        config = TrialConfig(params=MixtureParams(sigma=0.6, d=2, n=5, m=100),
                             mu=mu)
        assert np.array_equal(config.mean_vector(), mu)


class TestRunTrials:
    def test_degenerate_single_trial(self):
        config = TrialConfig(
            params=MixtureParams(sigma=0.6, d=2, n=10, m=50, tau=0),
            trials=1, seed=7)
        res = run_trials(config)
        assert res.gen.shape == (1, 1)
        assert res.gen[0, 0] == res.pop_risk[0, 0] - res.train_risk[0, 0]
        assert np.isnan(res.pseudo_err[0, 0])
        assert np.isnan(res.gen_stderr[0])
        assert list(res.t_values) == [0]

    def test_gen_identity_exact(self, small_run):
        assert np.array_equal(small_run.gen,
                              small_run.pop_risk - small_run.train_risk)

    def test_rho_range(self, small_run):
        assert np.all(small_run.rho >= -1.0) and np.all(small_run.rho <= 1.0)

    def test_pseudo_err_nan_only_at_t0(self, small_run):
        assert np.all(np.isnan(small_run.pseudo_err[:, 0]))
        assert np.all(np.isfinite(small_run.pseudo_err[:, 1:]))

    def test_pseudo_err_above_bayes_floor(self, small_run):
        mean = small_run.pseudo_err_mean[1:]
        se = small_run.pseudo_err_stderr[1:]
        assert np.all(mean >= bayes_error(0.6) - 4 * se)

    def test_pseudo_err_consistent_with_q_of_rho(self, small_run):
        # per trial, pseudo_err at t is Binomial(m, Q(rho_{t-1}/sigma))/m,
        # so the paired difference is mean-zero
        for t in (1, 2, 3):
            diff = small_run.pseudo_err[:, t] - q_function(
                small_run.rho[:, t - 1] / 0.6)
            se = diff.std(ddof=1) / np.sqrt(diff.shape[0])
            assert abs(diff.mean()) <= 4 * se, t

    def test_same_seed_bit_identical(self):
        config = TrialConfig(
            params=MixtureParams(sigma=0.6, d=3, n=5, m=200, tau=2),
            trials=16, seed=99)
        a, b = run_trials(config), run_trials(config)
        for field in ("gen", "rho", "pseudo_err", "train_risk", "pop_risk"):
            x, y = getattr(a, field), getattr(b, field)
            assert np.array_equal(x, y, equal_nan=True), field

    def test_worker_count_does_not_change_results(self, monkeypatch):
        config = TrialConfig(
            params=MixtureParams(sigma=0.6, d=3, n=5, m=200, tau=2),
            trials=8, seed=99)
        monkeypatch.delenv("GMM_SSL_THREADS", raising=False)
        seq = run_trials(config)
        monkeypatch.setenv("GMM_SSL_THREADS", "2")
        par = run_trials(config)
        for field in ("gen", "rho", "pseudo_err", "train_risk", "pop_risk"):
            x, y = getattr(seq, field), getattr(par, field)
            assert np.array_equal(x, y, equal_nan=True), field

    def test_bad_worker_env_rejected(self, monkeypatch):
        config = TrialConfig(
            params=MixtureParams(sigma=0.6, d=2, n=5, m=100, tau=1),
            trials=2, seed=0)
        monkeypatch.setenv("GMM_SSL_THREADS", "many")
        with pytest.raises(ValueError):
            run_trials(config)

    def test_reuse_mode_runs_with_identity(self):
        config = TrialConfig(
            params=MixtureParams(sigma=0.6, d=3, n=10, m=100, tau=2),
            mode="reuse", trials=32, seed=5)
        res = run_trials(config)
        assert np.array_equal(res.gen, res.pop_risk - res.train_risk)
        assert np.all(np.isfinite(res.gen))

    def test_mc_population_risk_route(self):
        config = TrialConfig(
            params=MixtureParams(sigma=0.6, d=2, n=5, m=100, tau=1),
            trials=8, seed=21, population_risk="mc", pop_mc_size=5000)
        res = run_trials(config)
        analytic = run_trials(
            TrialConfig(params=config.params, trials=8, seed=21))
        # same trials, resampled risk: close but not identical
        assert not np.array_equal(res.pop_risk, analytic.pop_risk)
        assert np.max(np.abs(res.pop_risk - analytic.pop_risk)) < 0.5

    def test_rows_match_schema(self, small_run):
        rows = small_run.to_rows()
        assert len(rows) == 4
        expected = ["t", "gen_mean", "gen_stderr", "rho_mean", "rho_stderr",
                    "pseudo_err_mean", "pseudo_err_stderr", "train_risk_mean",
                    "pop_risk_mean", "trials", "seed"]
        assert list(rows[0]) == expected
        assert rows[2]["t"] == 2
        assert rows[0]["trials"] == 400
        assert rows[0]["gen_mean"] == pytest.approx(small_run.gen_mean[0])
