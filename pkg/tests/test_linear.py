import numpy as np
import pytest

from waitbench.data import BinnedSeries
from waitbench.errors import ConfigError, DimensionMismatch, TooFewSamples
from waitbench.linear import (
    EnetConfig,
    enet_fit,
    enet_objective,
    enet_predict,
    ols_smooth,
    soft_threshold,
    var_smooth,
)


class TestOlsSmooth:
    def test_linear_interpolation(self):
        y = 2.0 + 3.0 * np.arange(10)
        fitted = ols_smooth(y, degree=1)
        assert np.max(np.abs(fitted - y)) < 1e-10

    def test_constant(self):
        fitted = ols_smooth(np.full(12, 4.0), degree=3)
        assert np.max(np.abs(fitted - 4.0)) < 1e-10

    def test_residual_orthogonality(self):
        rng = np.random.default_rng(0)
        y = rng.uniform(0, 10, size=48)
        fitted = ols_smooth(y, degree=3)
        t = np.arange(48) / 47
        V = np.vander(t, 4, increasing=True)
        assert np.max(np.abs(V.T @ (y - fitted))) < 1e-8

    def test_accepts_binned_series(self):
        b = BinnedSeries("kid", 3, "problem", 60, np.arange(48))
        fitted = ols_smooth(b, degree=1)
        assert fitted.shape == (48,)
        assert np.max(np.abs(fitted - np.arange(48))) < 1e-9

    def test_length_preserved(self):
        rng = np.random.default_rng(1)
        for n in (5, 17, 48):
            assert ols_smooth(rng.normal(size=n), 3).shape == (n,)

    def test_degree_too_high(self):
        with pytest.raises(TooFewSamples):
            ols_smooth(np.arange(3), degree=3)


class TestVarSmooth:
    def test_constant_group_zero_residual(self):
        group = np.tile([2.0, 5.0], (20, 1))
        fitted, _ = var_smooth(group, 1)
        assert np.max(np.abs(fitted - group)) < 1e-8

    def test_recovers_ar_coefficient(self):
        x = np.empty(20)
        x[0] = 1.0
        for t in range(1, 20):
            x[t] = 0.5 * x[t - 1]
        fitted, model = var_smooth(x[:, None], 1)
        assert model.coef[0][0, 0] == pytest.approx(0.5, abs=1e-8)
        assert np.max(np.abs(fitted[:, 0] - x)) < 1e-8

    def test_warmup_rows_unchanged(self):
        rng = np.random.default_rng(2)
        group = rng.normal(size=(15, 3))
        fitted, _ = var_smooth(group, 2)
        assert np.array_equal(fitted[:2], group[:2])

    def test_length_preserved(self):
        rng = np.random.default_rng(3)
        fitted, _ = var_smooth(rng.normal(size=(12, 2)), 1)
        assert fitted.shape == (12, 2)

    def test_too_short(self):
        with pytest.raises(TooFewSamples):
            var_smooth(np.ones((2, 1)), 2)


class TestSoftThreshold:
    def test_cases(self):
        assert soft_threshold(3.0, 1.0) == 2.0
        assert soft_threshold(-0.5, 1.0) == 0.0
        assert soft_threshold(7.25, 0.0) == 7.25
        assert soft_threshold(-3.0, 1.0) == -2.0

    def test_negative_threshold_rejected(self):
        with pytest.raises(ConfigError):
            soft_threshold(1.0, -0.1)


class TestEnet:
    def test_lam_zero_matches_ols(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(30, 4))
        y = rng.normal(size=30)
        m = enet_fit(X, y, EnetConfig(alpha=0.7, lam=0.0, max_iter=5000, tol=1e-12))
        Z = np.column_stack([np.ones(30), X])
        ref, *_ = np.linalg.lstsq(Z, y, rcond=None)
        assert abs(m.intercept - ref[0]) < 1e-6
        assert np.max(np.abs(m.coef - ref[1:])) < 1e-6

    def test_ridge_identity_design(self):
        # lam2 = 0.5 shrinks the identity-design solution y/(1 + 2*lam2).
        cfg = EnetConfig(alpha=0.0, lam=2.0, max_iter=500, tol=1e-13,
                         standardize=False, fit_intercept=False)
        assert cfg.lam2 == pytest.approx(1.0)
        cfg = EnetConfig(alpha=0.0, lam=1.0, max_iter=500, tol=1e-13,
                         standardize=False, fit_intercept=False)
        assert cfg.lam2 == pytest.approx(0.5)
        m = enet_fit(np.eye(2), np.array([2.0, 4.0]), cfg)
        assert np.max(np.abs(m.coef - [1.0, 2.0])) < 1e-6

    def test_ridge_closed_form_random(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(25, 3))
        y = rng.normal(size=25)
        cfg = EnetConfig(alpha=0.0, lam=0.9, max_iter=20000, tol=1e-13,
                         standardize=False, fit_intercept=False)
        m = enet_fit(X, y, cfg)
        ref = np.linalg.solve(X.T @ X + 2 * cfg.lam2 * np.eye(3), X.T @ y)
        assert np.max(np.abs(m.coef - ref)) < 1e-6

    def test_lasso_orthonormal_soft_threshold(self):
        rng = np.random.default_rng(6)
        Q, _ = np.linalg.qr(rng.normal(size=(15, 4)))
        y = rng.normal(size=15) * 2.5
        cfg = EnetConfig(alpha=1.0, lam=0.5, max_iter=2000, tol=1e-13,
                         standardize=False, fit_intercept=False)
        m = enet_fit(Q, y, cfg)
        ref = np.array([soft_threshold(v, 0.5) for v in Q.T @ y])
        assert np.max(np.abs(m.coef - ref)) < 1e-6

    def test_orthonormal_known_shrinkage(self):
        # Least-squares coefficient 2 with lam1 = 0.5 shrinks to 1.5.
        Q = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        y = Q @ np.array([2.0, -2.0])
        cfg = EnetConfig(alpha=1.0, lam=0.5, max_iter=100, tol=1e-13,
                         standardize=False, fit_intercept=False)
        m = enet_fit(Q, y, cfg)
        assert np.allclose(m.coef, [1.5, -1.5], atol=1e-9)

    def test_objective_non_increasing(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            X = rng.normal(size=(20, 5))
            y = rng.normal(size=20)
            m = enet_fit(X, y, EnetConfig(alpha=0.3, lam=0.4, max_iter=200, tol=1e-12))
            diffs = np.diff(m.objective_path)
            assert diffs.size == 0 or float(diffs.max()) <= 1e-10

    def test_huge_lam_zeroes_slopes(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(20, 4))
        y = rng.normal(size=20)
        m = enet_fit(X, y, EnetConfig(alpha=0.6, lam=1e6))
        assert np.all(m.coef == 0.0)
        assert m.intercept == pytest.approx(float(y.mean()))

    def test_bitwise_deterministic(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(18, 3))
        y = rng.normal(size=18)
        a = enet_fit(X, y, EnetConfig())
        b = enet_fit(X, y, EnetConfig())
        assert a.coef.tobytes() == b.coef.tobytes()
        assert a.intercept == b.intercept

    def test_constant_column_dropped(self):
        rng = np.random.default_rng(10)
        X = np.column_stack([np.full(20, 3.0), rng.normal(size=20)])
        y = rng.normal(size=20)
        m = enet_fit(X, y, EnetConfig(alpha=0.5, lam=0.1))
        assert m.coef[0] == 0.0

    def test_epsilon_relaxation(self):
        cfg = EnetConfig(alpha=0.5, lam=1.0, epsilon=0.1)
        assert cfg.alpha_eff == pytest.approx(0.4)
        assert cfg.lam1 == pytest.approx(0.4)
        assert cfg.lam2 == pytest.approx(0.3)
        with pytest.raises(ConfigError):
            EnetConfig(alpha=0.05, lam=1.0, epsilon=0.1)

    def test_non_convergence_flagged(self):
        rng = np.random.default_rng(16)
        X = rng.normal(size=(30, 6))
        y = rng.normal(size=30)
        m = enet_fit(X, y, EnetConfig(alpha=0.5, lam=0.01, max_iter=1, tol=1e-15))
        assert not m.converged and m.n_sweeps == 1
        full = enet_fit(X, y, EnetConfig(alpha=0.5, lam=0.01, max_iter=5000, tol=1e-12))
        assert full.converged

    def test_objective_function_helper(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(10, 2))
        y = rng.normal(size=10)
        val = enet_objective(X, y, np.zeros(2), 0.0, 0.5, 0.5)
        assert val == pytest.approx(0.5 * float(y @ y))


class TestEnetPredict:
    def test_zero_coefficients_give_intercept(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(15, 3))
        y = np.full(15, 2.5)
        m = enet_fit(X, y, EnetConfig(alpha=1.0, lam=100.0))
        pred = enet_predict(m, X)
        assert np.allclose(pred, 2.5, atol=1e-9)

    def test_reproduces_ols_fit(self):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(25, 3))
        y = rng.normal(size=25)
        m = enet_fit(X, y, EnetConfig(alpha=0.5, lam=0.0, max_iter=5000, tol=1e-12))
        Z = np.column_stack([np.ones(25), X])
        ref, *_ = np.linalg.lstsq(Z, y, rcond=None)
        assert np.max(np.abs(enet_predict(m, X) - Z @ ref)) < 1e-6

    def test_single_row(self):
        rng = np.random.default_rng(14)
        m = enet_fit(rng.normal(size=(10, 2)), rng.normal(size=10), EnetConfig())
        pred = enet_predict(m, np.array([0.3, -0.2]))
        assert pred.shape == (1,) and np.isfinite(pred[0])

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(15)
        m = enet_fit(rng.normal(size=(10, 2)), rng.normal(size=10), EnetConfig())
        with pytest.raises(DimensionMismatch):
            enet_predict(m, np.ones((4, 3)))
