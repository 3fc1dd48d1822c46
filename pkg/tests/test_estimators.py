"""Truncated-mean estimators, the linear score fit, per-cell fits, and the OLS
baseline, with the heavy-tail comparisons that motivate truncation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heavytrade.estimators import (EstimatorError, TruncationConfig, fit_cells,
                                   fit_linear, fit_ols, truncated_mean)
from heavytrade.market import ScaledUniformContexts
from heavytrade.noise import StudentTNoise


def cfg_with_tau(tau, n, p=1.5, log_term=3.0):
    """Invert tau = (u n / log_term)^(1/p) for u."""
    return TruncationConfig(u=tau**p * log_term / n, moment_order=p, log_term=log_term)


class TestTruncatedMean:
    def test_definition(self):
        cfg = cfg_with_tau(10.0, 3)
        assert cfg.tau(3) == pytest.approx(10.0)
        assert truncated_mean([1.0, 2.0, 100.0], cfg) == pytest.approx(1.0)

    def test_tau_formula(self):
        cfg = TruncationConfig(u=1.0, moment_order=1.5, log_term=math.log(1e4))
        assert cfg.tau(100) == pytest.approx((100 / math.log(1e4)) ** (2 / 3), rel=1e-12)
        assert cfg.tau(100) == pytest.approx(4.90324, abs=1e-4)

    def test_inactive_truncation_is_sample_mean(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=100)
        cfg = cfg_with_tau(np.max(np.abs(y)) + 1.0, 100)
        assert truncated_mean(y, cfg) == pytest.approx(y.mean(), rel=1e-12)

    def test_declared_length_checked(self):
        cfg = cfg_with_tau(5.0, 3)
        assert truncated_mean([1.0, 2.0, 3.0], cfg, n_declared=3) == 2.0
        with pytest.raises(EstimatorError, match="declared"):
            truncated_mean([1.0, 2.0, 3.0], cfg, n_declared=4)

    def test_empty_rejected(self):
        with pytest.raises(EstimatorError):
            truncated_mean([], cfg_with_tau(1.0, 1))

    @given(data=st.lists(st.floats(0.0, 100.0), min_size=2, max_size=30))
    @settings(max_examples=100, deadline=None)
    def test_monotone_toward_mean_on_nonnegative(self, data):
        # on nonnegative samples the removed tail sum shrinks as tau grows, so
        # the estimate approaches the sample mean monotonically (the signed
        # general case can be non-monotone; see the decisions notes)
        y = np.asarray(data)
        mean = y.mean()
        taus = np.linspace(0.0, y.max() + 1.0, 12)
        dists = [abs(truncated_mean(y, cfg_with_tau(max(t, 1e-9), y.size)) - mean)
                 for t in taus]
        assert all(a >= b - 1e-12 for a, b in zip(dists, dists[1:]))
        assert dists[-1] <= 1e-12

    def test_config_validation(self):
        with pytest.raises(EstimatorError):
            TruncationConfig(u=0.0, moment_order=1.5, log_term=1.0)
        with pytest.raises(EstimatorError):
            TruncationConfig(u=1.0, moment_order=2.5, log_term=1.0)
        with pytest.raises(EstimatorError):
            TruncationConfig(u=1.0, moment_order=1.5, log_term=0.0)

    def test_error_decreases_with_n(self):
        t = StudentTNoise(1.8, moment_order=1.5)
        cfg = TruncationConfig(u=t.sigma_p**1.5, moment_order=1.5,
                               log_term=math.log(2**18))
        med = []
        for n in (2**8, 2**13, 2**18):
            errs = [abs(truncated_mean(t.sample(n, (s, n)), cfg)) for s in range(20)]
            med.append(np.median(errs))
        assert med[0] > med[1] > med[2]


class TestFitLinear:
    def test_noiseless_exact(self):
        rng = np.random.default_rng(1)
        x = rng.random((200, 3)) / math.sqrt(3)
        phi = np.array([0.4, -0.2, 0.1])
        y = x @ phi
        cfg = cfg_with_tau(10.0, 200)
        fit = fit_linear(x, y, cfg, eigen_floor=1e-6)
        assert fit.ok
        np.testing.assert_allclose(fit.phi, phi, atol=1e-10)
        assert np.all(fit.truncation_fraction == 0.0)

    def test_fallback_below_floor(self):
        x = np.array([[1.0, 0.0]])  # rank 1, min eig 0
        fit = fit_linear(x, np.array([1.0]), cfg_with_tau(10.0, 1), eigen_floor=1e-6)
        assert not fit.ok and fit.phi is None
        assert fit.min_eigenvalue == pytest.approx(0.0, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(EstimatorError):
            fit_linear(np.zeros((3, 2)), np.zeros(4), cfg_with_tau(1.0, 3), 1e-6)

    def test_truncation_diagnostics(self):
        x = np.ones((4, 1))
        y = np.array([1.0, 2.0, 3.0, 100.0])
        fit = fit_linear(x, y, cfg_with_tau(10.0, 4), eigen_floor=1e-9)
        assert fit.truncation_fraction[0] == pytest.approx(0.25)
        assert fit.phi[0] == pytest.approx((1 + 2 + 3) / 4.0)

    def test_error_bound_instantiated(self):
        # high-probability bound 4 sqrt(d) (B + sigma_p) (2/lambda) (log(dT)/n)^{1/3}
        # must hold on >= 18/20 seeds (it is loose; this guards gross breakage)
        t = StudentTNoise(1.8, moment_order=1.5)
        d, n, T, B = 2, 100_000, 100_000, 1.0
        lam = 1.0 / 24.0
        ctx = ScaledUniformContexts(d)
        phi = np.array([0.5, -0.3])
        cfg = TruncationConfig(u=(B + t.sigma_p) ** 1.5, moment_order=1.5,
                               log_term=math.log(d * T))
        bound = (4 * math.sqrt(d) * (B + t.sigma_p) * (2 / lam)
                 * (math.log(d * T) / n) ** (1 / 3))
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            x = ctx.sample(n, rng)
            eta = 0.5 * (t.sample(n, rng) + t.sample(n, rng))
            fit = fit_linear(x, x @ phi + eta, cfg, eigen_floor=lam / 2)
            assert fit.ok
            if np.linalg.norm(fit.phi - phi) <= bound:
                hits += 1
        assert hits >= 18


class TestFitCells:
    def test_noiseless_two_cells(self):
        x = np.array([[0.1], [0.2], [0.8]])
        y = np.ones(3)
        est = fit_cells(x, y, 0.5, cfg_with_tau(10.0, 3))
        assert est.n_cells == 2
        np.testing.assert_allclose(est.estimates, [1.0, 1.0])
        assert not est.empty.any()

    def test_empty_cell_flagged(self):
        x = np.array([[0.1], [0.2]])
        est = fit_cells(x, np.ones(2), 0.5, cfg_with_tau(10.0, 2))
        assert est.empty.tolist() == [False, True]
        assert np.isnan(est.estimates[1])
        np.testing.assert_allclose(est.prices(np.array([0, 1])), [1.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(EstimatorError):
            fit_cells(np.zeros((3, 1)), np.zeros(2), 0.5, cfg_with_tau(1.0, 3))

    def test_max_cell_error_bound(self):
        # Eq.-style bound 4 u^{1/p} (log(MT)/min_j n_j)^{(p-1)/p} on >= 18/20 seeds
        t = StudentTNoise(1.8, moment_order=1.5)
        n, T, h, p = 100_000, 100_000, 0.25, 1.5
        M = 4
        u = t.sigma_p**p  # constant market m = 0, so B_m = 0
        cfg = TruncationConfig(u=u, moment_order=p, log_term=math.log(M * T))
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            x = rng.random((n, 1))
            eta = 0.5 * (t.sample(n, rng) + t.sample(n, rng))
            est = fit_cells(x, eta, h, cfg)
            bound = (4 * u ** (1 / p)
                     * (math.log(M * T) / est.counts.min()) ** ((p - 1) / p))
            if np.max(np.abs(est.estimates)) <= bound:
                hits += 1
        assert hits >= 18

    def test_tau_uses_cell_count(self):
        # same outlier response lands in a populous and a sparse cell; only the
        # populous cell's tau keeps it
        x = np.array([[0.1]] * 50 + [[0.9]] * 2)
        y = np.array([3.0] * 49 + [30.0] + [3.0, 30.0])
        cfg = TruncationConfig(u=25.0, moment_order=2.0, log_term=1.0)
        est = fit_cells(x, y, 0.5, cfg)
        tau_big, tau_small = math.sqrt(25 * 50), math.sqrt(25 * 2)
        assert tau_big > 30.0 > tau_small
        assert est.truncation_fraction[0] == 0.0
        assert est.truncation_fraction[1] == pytest.approx(0.5)
        assert est.estimates[1] == pytest.approx(1.5)  # (3 + 0)/2


class TestConcentration:
    def test_gram_concentration_matrix_hoeffding(self):
        # ||Gram_hat - Gram||_op <= C1 sqrt(d log(dT)/n) with the engineering
        # default C1 = 4, for uniform contexts over 20 seeds at n = 1e4
        from heavytrade.estimators import MATRIX_HOEFFDING_C1
        from heavytrade.market import UniformContexts

        d, n, T = 2, 10_000, 10_000
        ctx = UniformContexts(d)
        bound = MATRIX_HOEFFDING_C1 * math.sqrt(d * math.log(d * T) / n)
        for seed in range(20):
            x = ctx.sample(n, seed)
            gram = x.T @ x / n
            dev = np.linalg.norm(gram - ctx.covariance, ord=2)
            assert dev <= bound, (seed, dev, bound)

    def test_robust_term_decays_slower_than_gram_term(self):
        # for p < 2 the truncated-score error (~n^{-(p-1)/p}) dominates the
        # Gram error (~n^{-1/2}); compare fitted slopes over a grid of n
        t = StudentTNoise(1.8, moment_order=1.5)
        d, T, B = 2, 2**16, 1.0
        ctx = ScaledUniformContexts(d)
        phi = np.array([0.5, -0.3])
        cfg = TruncationConfig(u=(B + t.sigma_p) ** 1.5, moment_order=1.5,
                               log_term=math.log(d * T))
        ns = [2**k for k in range(8, 17, 2)]
        mu_err, gram_err = [], []
        for n in ns:
            me, ge = [], []
            for seed in range(40):
                rng = np.random.default_rng((seed, n))
                x = ctx.sample(n, rng)
                eta = 0.5 * (t.sample(n, rng) + t.sample(n, rng))
                fit = fit_linear(x, x @ phi + eta, cfg, eigen_floor=1e-9)
                me.append(np.max(np.abs(fit.mu - ctx.covariance @ phi)))
                ge.append(np.linalg.norm(fit.gram - ctx.covariance, ord=2))
            mu_err.append(np.median(me))
            gram_err.append(np.median(ge))
        # the robust term dominates in level at every n ...
        assert all(m >= 3.0 * g for m, g in zip(mu_err, gram_err)), (mu_err, gram_err)
        # ... and decays more slowly (strict slope ordering)
        lx = np.log(ns)
        slope_mu = np.polyfit(lx, np.log(mu_err), 1)[0]
        slope_gram = np.polyfit(lx, np.log(gram_err), 1)[0]
        assert slope_gram < slope_mu < 0.0, (slope_mu, slope_gram)


class TestFitOls:
    def test_noiseless_exact(self):
        rng = np.random.default_rng(2)
        x = rng.random((50, 2))
        phi = np.array([1.5, -0.5])
        np.testing.assert_allclose(fit_ols(x, x @ phi), phi, atol=1e-10)

    def test_single_point(self):
        assert fit_ols(np.array([[1.0]]), np.array([3.0]))[0] == pytest.approx(3.0)

    def test_singular_raises(self):
        x = np.array([[1.0, 1.0], [2.0, 2.0]])
        with pytest.raises(EstimatorError, match="singular"):
            fit_ols(x, np.array([1.0, 2.0]))

    def test_heavy_tail_failure_witness(self):
        # nu = 1.5: OLS's 95th-percentile error exceeds the truncated fit's
        t = StudentTNoise(1.5, moment_order=1.2)
        d, n, T = 2, 10_000, 10_000
        ctx = ScaledUniformContexts(d)
        phi = np.array([0.5, -0.3])
        u = (1.0 + t.sigma_p) ** 1.2
        cfg = TruncationConfig(u=u, moment_order=1.2, log_term=math.log(d * T))
        err_r, err_o = [], []
        for seed in range(50):
            rng = np.random.default_rng(seed)
            x = ctx.sample(n, rng)
            eta = 0.5 * (t.sample(n, rng) + t.sample(n, rng))
            y = x @ phi + eta
            fit = fit_linear(x, y, cfg, eigen_floor=1.0 / 48.0)
            err_r.append(np.linalg.norm(fit.phi - phi))
            err_o.append(np.linalg.norm(fit_ols(x, y) - phi))
        assert np.quantile(err_o, 0.95) > np.quantile(err_r, 0.95)
