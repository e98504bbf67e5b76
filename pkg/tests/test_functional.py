import numpy as np
import pytest

from levyts.functional import (DAYS_PER_YEAR, FunctionalParams, build_design,
                               gls_fit)
from levyts.series import OffsetCatalog, TimeSeries


def series_from_signal(theta: FunctionalParams, n=1500, noise=None, seed=0,
                       offsets=None, n_harmonics=None):
    epochs = 55000.0 + np.arange(n, dtype=float)
    nh = theta.n_harmonics if n_harmonics is None else n_harmonics
    X = build_design(epochs, nh, offsets)
    values = X @ theta.as_vector()
    if noise is not None:
        values = values + noise * np.random.default_rng(seed).standard_normal(n)
    return TimeSeries(epochs, values)


class TestDesign:
    def test_shape_and_intercept_column(self):
        epochs = 55000.0 + np.arange(4.0)
        X = build_design(epochs, n_harmonics=1)
        assert X.shape == (4, 4)
        assert np.all(X[:, 1] == 1.0)

    def test_heaviside_column(self):
        epochs = 55000.0 + np.arange(10.0)
        cat = OffsetCatalog(np.array([55004.0]))
        X = build_design(epochs, 1, cat)
        assert X[:, -1].tolist() == [0, 0, 0, 0, 1, 1, 1, 1, 1, 1]

    def test_trig_columns_pointwise(self):
        epochs = 55000.0 + np.arange(50.0) * 7.3
        X = build_design(epochs, n_harmonics=2)
        t_yr = (epochs - epochs[0]) / DAYS_PER_YEAR
        for j in (1, 2):
            w = 2.0 * np.pi * j
            assert np.allclose(X[:, 2 * j], np.cos(w * t_yr), atol=1e-14)
            assert np.allclose(X[:, 2 * j + 1], np.sin(w * t_yr), atol=1e-14)

    def test_second_harmonic_doubles_frequency(self):
        epochs = 55000.0 + np.arange(800.0)
        X = build_design(epochs, 2)
        t_yr = (epochs - epochs[0]) / DAYS_PER_YEAR
        assert np.allclose(X[:, 4], np.cos(2 * (2 * np.pi) * t_yr), atol=1e-13)

    def test_harmonic_count_bounds(self):
        epochs = 55000.0 + np.arange(10.0)
        with pytest.raises(ValueError):
            build_design(epochs, 0)
        with pytest.raises(ValueError):
            build_design(epochs, 8)

    def test_offset_outside_span(self):
        epochs = 55000.0 + np.arange(10.0)
        with pytest.raises(ValueError, match="span"):
            build_design(epochs, 1, OffsetCatalog(np.array([56000.0])))


class TestGlsFit:
    def test_exact_recovery_noiseless(self):
        theta = FunctionalParams(2.3, -1.0, ((0.4, 0.2), (0.1, -0.3)))
        ts = series_from_signal(theta, n=1200)
        params, resid, cov = gls_fit(ts, np.eye(1200))
        assert np.allclose(params.as_vector(), theta.as_vector(), rtol=1e-9)
        assert np.max(np.abs(resid.values)) < 1e-9

    def test_pure_noise_trend_within_3_sigma(self):
        # Monte-Carlo: the formal sigma of the trend must cover the scatter
        n, hits = 300, 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            ts = TimeSeries(55000.0 + np.arange(float(n)),
                            rng.standard_normal(n))
            params, _, cov = gls_fit(ts, np.eye(n), n_harmonics=1)
            if abs(params.trend) <= 3.0 * np.sqrt(cov[0, 0]):
                hits += 1
        assert hits >= 97

    def test_trend_recovery_with_white_noise(self):
        theta = FunctionalParams(1.0, 0.0, ((0.4, 0.2),))
        misses = 0
        for seed in range(20):
            ts = series_from_signal(theta, n=3650, noise=1.6, seed=seed)
            params, _, cov = gls_fit(ts, np.eye(3650) * 1.6 ** 2, n_harmonics=1)
            if abs(params.trend - 1.0) > 3.0 * np.sqrt(cov[0, 0]):
                misses += 1
        assert misses <= 1

    def test_residuals_orthogonal_to_design(self):
        rng = np.random.default_rng(5)
        n = 900
        ts = TimeSeries(55000.0 + np.arange(float(n)), rng.standard_normal(n) * 2)
        C = np.eye(n) * 4.0
        _, resid, _ = gls_fit(ts, C, n_harmonics=2)
        X = build_design(ts.epochs, 2)
        scale = np.linalg.norm(ts.values)
        assert np.max(np.abs(X.T @ np.linalg.solve(C, resid.values))) <= 1e-8 * scale

    def test_zero_offset_leaves_estimates_unchanged(self):
        theta = FunctionalParams(1.5, 0.3, ((0.2, 0.1),))
        ts = series_from_signal(theta, n=1000)
        cat = OffsetCatalog(np.array([55499.5]))
        base, _, _ = gls_fit(ts, np.eye(1000), n_harmonics=1)
        with_off, _, _ = gls_fit(ts, np.eye(1000), n_harmonics=1, offsets=cat)
        assert np.allclose(with_off.as_vector()[:-1], base.as_vector(), atol=1e-10)
        assert abs(with_off.offsets[0]) < 1e-10

    def test_gls_equals_ols_for_scaled_identity(self):
        rng = np.random.default_rng(9)
        n = 700
        ts = TimeSeries(55000.0 + np.arange(float(n)),
                        rng.standard_normal(n) + 0.01 * np.arange(n))
        ref, _, _ = gls_fit(ts, np.eye(n))
        for sigma in (0.3, 7.0):
            params, _, _ = gls_fit(ts, sigma ** 2 * np.eye(n))
            assert np.allclose(params.as_vector(), ref.as_vector(), atol=1e-10)

    def test_collinear_design_named(self):
        n = 400
        epochs = 55000.0 + np.arange(float(n))
        # two offsets with no epoch in between: identical Heaviside columns
        cat = OffsetCatalog(np.array([epochs[200] + 0.25, epochs[200] + 0.5]))
        ts = TimeSeries(epochs, np.arange(float(n)))
        with pytest.raises(np.linalg.LinAlgError, match="collinear"):
            gls_fit(ts, np.eye(n), n_harmonics=1, offsets=cat)

    def test_non_pd_covariance_rejected(self):
        n = 100
        ts = TimeSeries(55000.0 + np.arange(float(n)), np.ones(n))
        C = -np.eye(n)
        with pytest.raises(np.linalg.LinAlgError, match="positive definite"):
            gls_fit(ts, C)


class TestParamsVector:
    def test_vector_roundtrip(self):
        theta = FunctionalParams(1.0, 2.0, ((3.0, 4.0), (5.0, 6.0)), (7.0,))
        back = FunctionalParams.from_vector(theta.as_vector(), 2)
        assert back == theta
