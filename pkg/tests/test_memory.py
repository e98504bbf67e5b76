import numpy as np
import pytest
from scipy.special import gammaln

from levyts.memory import (ArmaFit, _arfima_autocov_fast, _coeffs_to_unconstrained,
                           _pacf_to_poly, _poly_to_pacf, _unconstrained_to_coeffs,
                           arfima_autocov, arma_autocov, fit_arma, frac_autocov,
                           select_bic)


def simulate_arma(n, ar=(), ma=(), seed=0, sigma=1.0):
    rng = np.random.default_rng(seed)
    e = sigma * rng.standard_normal(n + 200)
    x = np.zeros(n + 200)
    p, q = len(ar), len(ma)
    for t in range(max(p, q), n + 200):
        x[t] = e[t]
        for i in range(p):
            x[t] += ar[i] * x[t - 1 - i]
        for j in range(q):
            x[t] += ma[j] * e[t - 1 - j]
    return x[200:]


class TestAutocov:
    def test_white(self):
        g = arfima_autocov(np.array([]), np.array([]), 0.0, 1.0, 5)
        assert g[0] == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(g[1:])) < 1e-12

    def test_ar1_closed_form(self):
        g = arfima_autocov(np.array([0.5]), np.array([]), 0.0, 1.0, 8)
        ref = 0.5 ** np.arange(8) / (1 - 0.25)
        assert np.max(np.abs(g - ref)) < 1e-9

    def test_fractional_gamma_formula(self):
        d = 0.2
        g = arfima_autocov(np.array([]), np.array([]), d, 1.0, 11)
        k = np.arange(11)
        ref = np.exp(gammaln(1 - 2 * d) + gammaln(k + d)
                     - gammaln(d) - gammaln(1 - d) - gammaln(k + 1 - d))
        assert np.max(np.abs(g / ref - 1.0)) < 1e-6

    def test_fast_path_matches_quadrature(self):
        for ar, ma, d in [((0.5,), (0.3,), 0.2), ((0.7, -0.2), (0.4,), -0.3),
                          ((), (0.6,), 0.35)]:
            gf = _arfima_autocov_fast(np.array(ar), np.array(ma), d, 10)
            gq = arfima_autocov(np.array(ar), np.array(ma), d, 1.0, 10)
            assert np.max(np.abs(gf / gq - 1.0)) < 1e-8

    def test_fast_path_d0_equals_arma(self):
        ar, ma = np.array([0.6, -0.1]), np.array([0.25])
        gf = _arfima_autocov_fast(ar, ma, 0.0, 30)
        ga = arma_autocov(ar, ma, 30)
        assert np.max(np.abs(gf - ga)) < 1e-10

    def test_d_bound(self):
        with pytest.raises(ValueError, match="0.5"):
            arfima_autocov(np.array([]), np.array([]), 0.6, 1.0, 4)
        with pytest.raises(ValueError, match="0.5"):
            frac_autocov(0.5, 4)

    def test_positive_lag0(self):
        g = _arfima_autocov_fast(np.array([0.9]), np.array([0.8]), 0.4, 50)
        assert g[0] > 0


class TestPacfTransform:
    def test_roundtrip(self):
        r = np.array([0.5, -0.3, 0.2])
        phi = _pacf_to_poly(r)
        assert np.allclose(_poly_to_pacf(phi), r, atol=1e-12)

    def test_stationarity_guaranteed(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            z = rng.uniform(-4, 4, size=5)
            ar, ma = _unconstrained_to_coeffs(z, 3, 2)
            fit = ArmaFit(3, 2, 0.0, tuple(ar), tuple(ma), 1.0, 0.0, 0.0, 0.0,
                          100, True)
            assert np.all(np.abs(fit.ar_roots) > 1.0 + 1e-9)
            assert np.all(np.abs(fit.ma_roots) > 1.0 + 1e-9)


class TestFitArma:
    def test_ar1_recovery(self):
        hits = 0
        for seed in range(10):
            x = simulate_arma(4096, ar=(0.5,), seed=seed)
            fit = fit_arma(x, 1, 0)
            if 0.45 <= fit.ar[0] <= 0.55:
                hits += 1
        assert hits >= 9

    def test_farima_at_zero_d_equals_arma(self):
        x = simulate_arma(1500, ar=(0.4,), ma=(0.2,), seed=1)
        fit_a = fit_arma(x, 1, 1, d_fixed=0.0)
        # same start, same engine, d routed through the fractional path
        z0 = _coeffs_to_unconstrained(np.array(fit_a.ar), np.array(fit_a.ma))
        fit_f = fit_arma(x, 1, 1, d_fixed=0.0, start=z0, maxfev=4)
        assert fit_f.loglik >= fit_a.loglik - 1e-8
        assert abs(fit_f.loglik - fit_a.loglik) < 1e-6

    def test_white_innovation_variance(self):
        devs = []
        for seed in range(10):
            rng = np.random.default_rng(seed)
            x = rng.standard_normal(3000)
            fit = fit_arma(x, 0, 0)
            devs.append(fit.sigma2 / x.var())
        assert abs(np.mean(devs) - 1.0) < 0.02

    def test_loglik_matches_statsmodels(self):
        from statsmodels.tsa.arima.model import ARIMA

        x = simulate_arma(1200, ar=(0.5,), ma=(0.3,), seed=3)
        fit = fit_arma(x, 1, 1)
        ref = ARIMA(x - x.mean(), order=(1, 0, 1), trend="n").fit(method="statespace")
        assert fit.loglik == pytest.approx(ref.llf, abs=0.05)
        assert fit.ar[0] == pytest.approx(ref.params[0], abs=0.02)

    def test_nested_likelihood_monotone(self):
        x = simulate_arma(1000, ar=(0.5,), seed=4)
        prev = fit_arma(x, 1, 0)
        z_prev = _coeffs_to_unconstrained(np.array(prev.ar), np.array(prev.ma))
        grown = fit_arma(x, 2, 0, start=np.concatenate([z_prev, [0.0]]))
        assert grown.loglik >= prev.loglik - 1e-8

    def test_order_bounds(self):
        with pytest.raises(ValueError):
            fit_arma(np.zeros(100), 6, 0)

    def test_fit_error_is_prediction_std(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal(2500) * 1.6
        fit = fit_arma(x, 0, 0)
        assert fit.fit_error == pytest.approx(1.6, rel=0.05)


class TestSelectBic:
    def test_bic_penalty_increases_with_params(self):
        x = simulate_arma(800, ar=(0.3,), seed=7)
        f1 = fit_arma(x, 1, 0)
        penalty1 = f1.bic + 2 * f1.loglik
        f2 = fit_arma(x, 2, 1)
        penalty2 = f2.bic + 2 * f2.loglik
        assert penalty2 > penalty1

    @pytest.mark.slow
    def test_white_noise_selects_00(self):
        wins = 0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            x = rng.standard_normal(1024)
            arma, farima, winner = select_bic(x, d_candidate=0.25,
                                              pmax=2, qmax=2)
            if winner == "arma" and (arma.p, arma.q) == (0, 0):
                wins += 1
        assert wins >= 9

    @pytest.mark.slow
    def test_long_memory_prefers_farima(self):
        # strong fractional residual: FARIMA with the matching d must win
        wins = 0
        for seed in range(6):
            rng = np.random.default_rng(seed)
            e = rng.standard_normal(2048)
            from levyts.noise import pl_filter
            x = np.convolve(e, pl_filter(0.54, 2048))[:2048] + 0.3 * rng.standard_normal(2048)
            _, _, winner = select_bic(x, d_candidate=0.27, pmax=2, qmax=2)
            if winner == "farima":
                wins += 1
        assert wins >= 4

    def test_integer_differencing_applied(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal(900)
        _, farima, _ = select_bic(x, d_candidate=0.65, pmax=1, qmax=1)
        assert farima.n_diff == 1
        assert farima.d == pytest.approx(-0.35, abs=1e-9)
        assert farima.n_obs == 899

    def test_d_exactly_half_is_clipped(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal(800)
        _, farima, _ = select_bic(x, d_candidate=0.5, pmax=0, qmax=0)
        assert abs(farima.d) < 0.5
