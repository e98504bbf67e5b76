"""ARMA(p,q) and FARIMA(p,d,q) Gaussian maximum likelihood with BIC
selection over lag orders.

The exact likelihood comes from the Durbin-Levinson innovations recursion
on the model autocovariance. Optimization runs in a partial-autocorrelation
parameterization, so every evaluated model is stationary and invertible by
construction. The fractional parameter d is never estimated here; it is
pinned by the caller (from the spectral-index fit) and reduced by integer
differencing into (-0.5, 0.5).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.integrate import quad
from scipy.optimize import minimize
from scipy.signal import fftconvolve

__all__ = ["ArmaFit", "arfima_autocov", "arma_autocov", "frac_autocov",
           "fit_arma", "select_bic"]

_PACF_BOUND = 0.999
_MAX_ARMA_TAIL = 32768


# --- autocovariances -------------------------------------------------------

def arma_autocov(ar: np.ndarray, ma: np.ndarray, nlags: int, sigma2: float = 1.0) -> np.ndarray:
    """Exact autocovariance of x_t = sum phi x_{t-i} + e_t + sum theta e_{t-j}."""
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    p, q = ar.size, ma.size
    if p == 0 and q == 0:
        out = np.zeros(nlags)
        out[0] = sigma2
        return out
    # MA(inf) weights psi_0..psi_q
    psi = np.zeros(q + 1)
    psi[0] = 1.0
    for j in range(1, q + 1):
        psi[j] = ma[j - 1] + sum(ar[i - 1] * psi[j - i] for i in range(1, min(j, p) + 1))
    theta_full = np.concatenate(([1.0], ma))
    # solve for gamma(0..p): gamma(k) - sum_i phi_i gamma(|k-i|) = sigma2 * sum_{j>=k} theta_j psi_{j-k}
    n = p + 1
    A = np.zeros((n, n))
    b = np.zeros(n)
    for k in range(n):
        A[k, k] += 1.0
        for i in range(1, p + 1):
            A[k, abs(k - i)] -= ar[i - 1]
        b[k] = sigma2 * sum(theta_full[j] * psi[j - k] for j in range(k, q + 1))
    gamma_head = np.linalg.solve(A, b)
    k0 = max(p, q) + 1
    out = np.zeros(max(nlags, k0))
    out[:n] = gamma_head
    for k in range(n, k0):
        acc = sigma2 * sum(theta_full[j] * psi[j - k] for j in range(k, q + 1)) if k <= q else 0.0
        for i in range(1, p + 1):
            acc += ar[i - 1] * out[k - i]
        out[k] = acc
    if nlags > k0 and p > 0:
        # beyond max(p,q) the sequence obeys the homogeneous AR recurrence
        from scipy.signal import lfilter, lfiltic

        a_poly = np.concatenate(([1.0], -ar))
        zi = lfiltic([1.0], a_poly, y=out[k0 - 1:k0 - 1 - p:-1] if p > 1 else out[k0 - 1:k0])
        tail, _ = lfilter([1.0], a_poly, np.zeros(nlags - k0), zi=zi)
        out[k0:nlags] = tail
    return out[:nlags]


def frac_autocov(d: float, nlags: int, sigma2: float = 1.0) -> np.ndarray:
    """Autocovariance of pure fractional noise (1-B)^-d driven by white noise.

    gamma(0) = sigma2 * Gamma(1-2d) / Gamma(1-d)^2 and
    gamma(k)/gamma(k-1) = (k-1+d)/(k-d), valid for |d| < 0.5.
    """
    if not abs(d) < 0.5:
        raise ValueError(f"fractional parameter must satisfy |d| < 0.5, got {d}")
    from scipy.special import gammaln

    g0 = sigma2 * np.exp(gammaln(1.0 - 2.0 * d) - 2.0 * gammaln(1.0 - d))
    k = np.arange(1, nlags, dtype=float)
    ratios = (k - 1.0 + d) / (k - d)
    return g0 * np.concatenate(([1.0], np.cumprod(ratios)))


def _arma_tail_length(ar: np.ndarray, q: int) -> int:
    """Lag beyond which the ARMA autocovariance is below 1e-13 relatively."""
    if len(ar) == 0:
        return q + 1
    roots = np.roots(np.concatenate(([1.0], -np.asarray(ar)))[::-1])
    rho = 1.0 / float(np.min(np.abs(roots)))  # geometric decay rate, < 1
    rho = min(max(rho, 1e-6), 1.0 - 1e-7)
    return int(np.clip(np.log(1e-13) / np.log(rho), 64, _MAX_ARMA_TAIL))


def _arfima_autocov_fast(ar: np.ndarray, ma: np.ndarray, d: float, nlags: int,
                         sigma2: float = 1.0) -> np.ndarray:
    """ARFIMA autocovariance as the lag convolution of the exact ARMA
    autocovariance with the closed-form fractional-noise autocovariance."""
    p, q = len(ar), len(ma)
    if p == 0 and q == 0:
        return frac_autocov(d, nlags, sigma2)
    tail = _arma_tail_length(ar, q)
    c = arma_autocov(ar, ma, tail, 1.0)
    m = tail - 1
    g = frac_autocov(d, nlags + 2 * m + 1, sigma2)
    c2 = np.concatenate([c[::-1], c[1:]])          # lags -m..m
    g_ext = g[np.abs(np.arange(-m, nlags + m))]    # lags -m..nlags+m-1
    full = fftconvolve(g_ext, c2[::-1], mode="valid")
    return full[:nlags]


def _poly_sq_even_series(coeffs: np.ndarray) -> tuple[float, float, float]:
    """Even Taylor coefficients (w^0, w^2, w^4) of |c(e^{iw})|^2 at w = 0."""
    c = np.asarray(coeffs, dtype=float)
    n = c.size
    # |c(e^{iw})|^2 = sum_m r_m cos(m w) with r_m the coefficient autocorrelation
    r = np.array([2.0 * np.dot(c[: n - m], c[m:]) for m in range(n)])
    r[0] /= 2.0
    m = np.arange(n, dtype=float)
    return float(np.sum(r)), float(-np.sum(r * m ** 2) / 2.0), float(np.sum(r * m ** 4) / 24.0)


def _head_integral(eps: float, k: int, d: float, p0: float, p2: float, p4: float) -> float:
    """int_0^eps w^(-2d) (p0 + p2 w^2 + p4 w^4) cos(k w) dw by series in k*eps."""
    total = 0.0
    for j, pj in enumerate((p0, p2, p4)):
        if pj == 0.0:
            continue
        acc = 0.0
        term_pow = 1.0  # (k eps)^(2n) / (2n)!
        for n in range(12):
            acc += (-1.0) ** n * term_pow / (2 * n + 2 * j + 1 - 2 * d)
            term_pow *= (k * eps) ** 2 / ((2 * n + 1) * (2 * n + 2))
        total += pj * acc * eps ** (2 * j + 1 - 2 * d)
    return total


def arfima_autocov(ar: np.ndarray, ma: np.ndarray, d: float, sigma2: float,
                   maxlag: int) -> np.ndarray:
    """ARFIMA autocovariance by adaptive quadrature of the spectral density.

    gamma(k) = 2 int_0^pi f(w) cos(wk) dw with
    f(w) = sigma2/(2 pi) |theta(e^iw)|^2 / |phi(e^iw)|^2 (2 sin(w/2))^(-2d).
    The w^(-2d)-singular head of the integral is evaluated by an analytic
    series, the oscillatory remainder by adaptive (QAWO) quadrature.
    """
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    if not abs(d) < 0.5:
        raise ValueError(f"fractional parameter must satisfy |d| < 0.5, got {d}")
    theta_poly = np.concatenate(([1.0], ma))
    phi_poly = np.concatenate(([1.0], -ar))

    def spec_smooth(w):
        zi = np.exp(-1j * w)
        num = abs(np.polyval(theta_poly[::-1], zi)) ** 2
        den = abs(np.polyval(phi_poly[::-1], zi)) ** 2
        pl = (2.0 * np.sin(w / 2.0)) ** (-2.0 * d) if d != 0 else 1.0
        return num / den * pl

    # even series of |theta|^2 / |phi|^2 * ((2 sin(w/2))/w)^(-2d) near 0
    n0, n2, n4 = _poly_sq_even_series(theta_poly)
    d0, d2, d4 = _poly_sq_even_series(phi_poly)
    r0 = n0 / d0
    r2 = (n2 - r0 * d2) / d0
    r4 = (n4 - r2 * d2 - r0 * d4) / d0
    # (2 sin(w/2))^(-2d) = w^(-2d) (1 + d w^2/12 + (d^2/288 + d/1440) w^4 + ...)
    s2 = d / 12.0
    s4 = d * d / 288.0 + d / 1440.0
    p0 = r0
    p2 = r2 + r0 * s2
    p4 = r4 + r2 * s2 + r0 * s4

    out = np.empty(maxlag)
    const = sigma2 / np.pi  # 2 * sigma2/(2 pi)
    for k in range(maxlag):
        eps = min(0.02, 0.5 / max(k, 1))
        head = _head_integral(eps, k, d, p0, p2, p4)
        if k == 0:
            val, err = quad(spec_smooth, eps, np.pi, epsabs=1e-10, epsrel=1e-10,
                            limit=400)
        else:
            val, err = quad(spec_smooth, eps, np.pi, weight="cos", wvar=k,
                            epsabs=1e-10, epsrel=1e-10, limit=400)
        if not np.isfinite(val) or err > 1e-7 * max(1.0, abs(val) + abs(head)):
            raise RuntimeError(
                f"autocovariance quadrature did not converge at lag {k} (d={d})")
        out[k] = const * (head + val)
    return out


# --- exact likelihood ------------------------------------------------------

@njit(cache=True, fastmath=True)
def _levinson(gamma, x, min_steps, freeze_tol):
    """Durbin-Levinson innovations: returns (sum ln v_t, sum e_t^2/v_t, e).

    gamma is the unit-innovation autocovariance; e are one-step prediction
    errors in data units. Once the predictor has numerically converged
    (short-memory models) the recursion freezes and only the prediction
    errors are propagated.
    """
    L = x.shape[0]
    phi = np.zeros(L)
    phi_new = np.zeros(L)
    e = np.empty(L)
    v_t = gamma[0]
    if v_t <= 0.0:
        raise ValueError("autocovariance at lag 0 must be positive")
    e[0] = x[0]
    logsum = np.log(v_t)
    quad_sum = x[0] * x[0] / v_t
    stable = 0
    t_frozen = L
    for t in range(1, L):
        acc = gamma[t]
        for j in range(1, t):
            acc -= phi[j - 1] * gamma[t - j]
        k = acc / v_t
        if not -1.0 < k < 1.0:
            raise ValueError("autocovariance sequence is not positive definite")
        for j in range(t - 1):
            phi_new[j] = phi[j] - k * phi[t - 2 - j]
        phi_new[t - 1] = k
        for j in range(t):
            phi[j] = phi_new[j]
        v_prev = v_t
        v_t *= 1.0 - k * k
        pred = 0.0
        for j in range(t):
            pred += phi[j] * x[t - 1 - j]
        e[t] = x[t] - pred
        logsum += np.log(v_t)
        quad_sum += e[t] * e[t] / v_t
        if t >= min_steps and abs(v_prev - v_t) < freeze_tol * v_t and abs(k) < 1e-10:
            stable += 1
            if stable >= 3:
                t_frozen = t + 1
                break
        else:
            stable = 0
    if t_frozen < L:
        m = t_frozen
        for t in range(m, L):
            pred = 0.0
            for j in range(m):
                pred += phi[j] * x[t - 1 - j]
            e[t] = x[t] - pred
            logsum += np.log(v_t)
            quad_sum += e[t] * e[t] / v_t
    return logsum, quad_sum, e


def _concentrated_loglik(gamma_unit: np.ndarray, x: np.ndarray):
    """Max log-likelihood over the innovation variance, plus errors."""
    logsum, quad_sum, e = _levinson(gamma_unit, x, 48, 1e-15)
    L = x.size
    sigma2 = quad_sum / L
    ll = -0.5 * L * (np.log(2.0 * np.pi) + 1.0 + np.log(max(sigma2, 1e-300))) - 0.5 * logsum
    return ll, sigma2, e


# --- PACF parameterization -------------------------------------------------

def _pacf_to_poly(r: np.ndarray) -> np.ndarray:
    """Map partial autocorrelations in (-1,1) to stationary AR coefficients."""
    phi = np.empty(0)
    for k in range(r.size):
        new = np.empty(k + 1)
        new[k] = r[k]
        if k:
            new[:k] = phi - r[k] * phi[::-1]
        phi = new
    return phi


def _poly_to_pacf(phi: np.ndarray) -> np.ndarray:
    """Inverse of :func:`_pacf_to_poly` (clipped into the open unit cube)."""
    phi = np.array(phi, dtype=float)
    out = []
    for k in range(phi.size, 0, -1):
        rk = float(np.clip(phi[k - 1], -_PACF_BOUND, _PACF_BOUND))
        out.append(rk)
        if k > 1:
            denom = max(1.0 - rk * rk, 1e-12)
            phi = (phi[:k - 1] + rk * phi[:k - 1][::-1]) / denom
    return np.array(out[::-1])


def _unconstrained_to_coeffs(z: np.ndarray, p: int, q: int):
    r = _PACF_BOUND * np.tanh(z)
    ar = _pacf_to_poly(r[:p]) if p else np.empty(0)
    ma = -_pacf_to_poly(r[p:]) if q else np.empty(0)
    return ar, ma


def _coeffs_to_unconstrained(ar: np.ndarray, ma: np.ndarray) -> np.ndarray:
    rs = []
    if len(ar):
        rs.append(_poly_to_pacf(np.asarray(ar)))
    if len(ma):
        rs.append(_poly_to_pacf(-np.asarray(ma)))
    if not rs:
        return np.empty(0)
    r = np.clip(np.concatenate(rs), -_PACF_BOUND + 1e-9, _PACF_BOUND - 1e-9)
    return np.arctanh(r / _PACF_BOUND)


# --- fitting ---------------------------------------------------------------

@dataclass(frozen=True)
class ArmaFit:
    """One fitted ARMA/FARIMA model.

    ``fit_error`` is the standard deviation of the one-step-ahead prediction
    errors (mm). ``d`` is the pinned fractional parameter (0 for the ARMA
    branch); ``n_diff`` counts integer differencing applied before the fit.
    """

    p: int
    q: int
    d: float
    ar: tuple[float, ...]
    ma: tuple[float, ...]
    sigma2: float
    loglik: float
    bic: float
    fit_error: float
    n_obs: int
    converged: bool
    n_diff: int = 0

    @property
    def n_params(self) -> int:
        return self.p + self.q + 1

    @property
    def ar_roots(self) -> np.ndarray:
        if not self.ar:
            return np.empty(0, dtype=complex)
        return np.roots(np.concatenate(([1.0], -np.asarray(self.ar)))[::-1])

    @property
    def ma_roots(self) -> np.ndarray:
        if not self.ma:
            return np.empty(0, dtype=complex)
        return np.roots(np.concatenate(([1.0], np.asarray(self.ma)))[::-1])


def fit_arma(x: np.ndarray, p: int, q: int, d_fixed: float = 0.0,
             start: np.ndarray | None = None, maxfev: int | None = None,
             n_diff: int = 0) -> ArmaFit:
    """Exact Gaussian MLE of an ARMA(p,q) model on fractional noise d_fixed.

    The series is zero-meaned internally. The optimizer cannot leave the
    stationary/invertible region thanks to the partial-autocorrelation
    parameterization.
    """
    if not 0 <= p <= 5 or not 0 <= q <= 5:
        raise ValueError(f"lag orders must lie in [0, 5], got p={p}, q={q}")
    if not abs(d_fixed) < 0.5:
        raise ValueError(f"fractional parameter must satisfy |d| < 0.5, got {d_fixed}")
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    L = x.size
    dim = p + q

    def loglik_of(z):
        ar, ma = _unconstrained_to_coeffs(z, p, q)
        gamma = _arfima_autocov_fast(ar, ma, d_fixed, L, 1.0)
        return _concentrated_loglik(gamma, x)

    if dim == 0:
        ll, sigma2, e = loglik_of(np.empty(0))
        return ArmaFit(p, q, d_fixed, (), (), float(sigma2), float(ll),
                       float(-2.0 * ll + 1.0 * np.log(L)), float(np.std(e)),
                       L, True, n_diff)

    z0 = np.zeros(dim) if start is None else np.asarray(start, dtype=float)

    def neg(z):
        try:
            return -loglik_of(z)[0]
        except (ValueError, np.linalg.LinAlgError, RuntimeError):
            return 1e12

    budget = maxfev if maxfev is not None else 60 * dim + 40
    res = minimize(neg, z0, method="Nelder-Mead",
                   options={"maxfev": budget, "xatol": 1e-4, "fatol": 1e-8})
    ll, sigma2, e = loglik_of(res.x)
    ar, ma = _unconstrained_to_coeffs(res.x, p, q)
    bic = float(-2.0 * ll + (p + q + 1) * np.log(L))
    return ArmaFit(p, q, d_fixed, tuple(ar), tuple(ma), float(sigma2), float(ll),
                   bic, float(np.std(e)), L, bool(np.isfinite(ll)), n_diff)


def _reduce_d(d_candidate: float) -> tuple[float, int]:
    """Integer-difference d into (-0.5, 0.5); returns (d, number of diffs)."""
    d = float(d_candidate)
    n_diff = 0
    while d >= 0.5:
        d -= 1.0
        n_diff += 1
    d = float(np.clip(d, -0.4999, 0.4999))
    return d, n_diff


def _grid_search(x: np.ndarray, d: float, pmax: int, qmax: int,
                 maxfev_per_dim: int, n_diff: int) -> ArmaFit:
    """(p,q) grid with warm starts from nested neighbours; best BIC wins."""
    fits: dict[tuple[int, int], ArmaFit] = {}
    zs: dict[tuple[int, int], np.ndarray] = {}
    for p in range(pmax + 1):
        for q in range(qmax + 1):
            dim = p + q
            start = None
            if dim:
                cands = []
                if p and (p - 1, q) in fits:
                    z = zs[(p - 1, q)]
                    cands.append((fits[(p - 1, q)].loglik,
                                  np.concatenate([z[:p - 1], [0.0], z[p - 1:]])))
                if q and (p, q - 1) in fits:
                    z = zs[(p, q - 1)]
                    cands.append((fits[(p, q - 1)].loglik,
                                  np.concatenate([z, [0.0]])))
                if cands:
                    start = max(cands, key=lambda c: c[0])[1]
            fit = fit_arma(x, p, q, d, start=start,
                           maxfev=maxfev_per_dim * max(dim, 1) + 12, n_diff=n_diff)
            fits[(p, q)] = fit
            zs[(p, q)] = _coeffs_to_unconstrained(np.asarray(fit.ar), np.asarray(fit.ma))
    return min(fits.values(), key=lambda f: (f.bic, f.n_params, f.p, f.q))


def select_bic(x: np.ndarray, d_candidate: float, pmax: int = 5, qmax: int = 5,
               maxfev_per_dim: int = 6) -> tuple[ArmaFit, ArmaFit, str]:
    """Best ARMA (d=0) and FARIMA (d pinned) fits by BIC over the lag grid.

    When |d_candidate| >= 0.5 the FARIMA branch fits the integer-differenced
    series with the reduced d, and its BIC refers to that series. Returns
    ``(best_arma, best_farima, winner)`` with ties going to the model with
    fewer parameters, then to ARMA.
    """
    x = np.asarray(x, dtype=float)
    best_arma = _grid_search(x - x.mean(), 0.0, pmax, qmax, maxfev_per_dim, 0)
    d_red, n_diff = _reduce_d(d_candidate)
    x_far = np.diff(x, n_diff) if n_diff else x
    best_farima = _grid_search(x_far - x_far.mean(), d_red, pmax, qmax,
                               maxfev_per_dim, n_diff)
    if best_farima.bic < best_arma.bic:
        winner = "farima"
    elif best_farima.bic == best_arma.bic and best_farima.n_params < best_arma.n_params:
        winner = "farima"
    else:
        winner = "arma"
    return best_arma, best_farima, winner
