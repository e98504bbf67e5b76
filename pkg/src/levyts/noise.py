"""Power-law noise machinery: fractional-differencing filter, mixed
white+coloured covariances, and generators for white/power-law noise,
stable motion and fractional Levy stable motion.

Amplitude convention: the coloured amplitude b_cl is the standard deviation
(mm) of the white noise driving the power-law filter, per sampling step.
An amplitude quoted in mm/yr^(beta/4) converts via
``b_step = b_year * (dt/365.25)^(beta/4)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from numba import njit
from scipy.signal import fftconvolve

from .functional import FunctionalParams, build_design
from .series import TimeSeries
from .stable import stable_rvs

__all__ = [
    "SpectralIndex",
    "NoiseModelSpec",
    "pl_filter",
    "pl_covariance",
    "gen_noise",
    "gen_scenario",
    "gen_stable_motion",
    "gen_flsm",
    "SCENARIO_BANDS",
]

# coloured driving-amplitude bands (mm) of the simulation scenarios
SCENARIO_BANDS = {"A": (0.01, 0.1), "B": (0.1, 1.0), "C": (1.0, 3.0)}


@dataclass(frozen=True)
class SpectralIndex:
    """Power-law index beta with its Hurst and fractional-differencing views.

    beta = 2H - 1 and H = d + 0.5, so d = beta / 2. beta = 0 is white noise
    (H = 0.5), beta = 1 flicker (H = 1), beta = 2 random walk (H = 1.5).
    """

    beta: float

    def __post_init__(self):
        if not 0.0 <= self.beta <= 3.0:
            raise ValueError(f"spectral index must lie in [0, 3], got {self.beta}")

    @property
    def hurst(self) -> float:
        return (self.beta + 1.0) / 2.0

    @property
    def frac_d(self) -> float:
        return self.beta / 2.0

    @classmethod
    def from_hurst(cls, hurst: float) -> "SpectralIndex":
        return cls(2.0 * hurst - 1.0)


@dataclass(frozen=True)
class NoiseModelSpec:
    """Mixed-spectrum noise model: white + coloured power law.

    kind is ``pl+wn`` (beta free) or ``fn+wn`` (flicker, beta pinned to 1).
    a_wh and b_cl are the white amplitude and the coloured driving amplitude
    per step, both in mm.
    """

    kind: str
    a_wh: float
    b_cl: float
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("pl+wn", "fn+wn"):
            raise ValueError(f"noise model kind must be 'pl+wn' or 'fn+wn', got {self.kind!r}")
        if self.a_wh < 0 or self.b_cl < 0:
            raise ValueError("noise amplitudes must be nonnegative")
        if self.a_wh == 0 and self.b_cl == 0:
            raise ValueError("white and coloured amplitudes cannot both be zero")
        if self.kind == "fn+wn" and self.beta != 1.0:
            raise ValueError("fn+wn pins the spectral index to 1")
        SpectralIndex(self.beta)


@njit(cache=True)
def _pl_filter_kernel(beta: float, length: int) -> np.ndarray:
    h = np.empty(length)
    h[0] = 1.0
    for i in range(1, length):
        h[i] = h[i - 1] * (beta / 2.0 + i - 1.0) / i
    return h


def pl_filter(beta: float, length: int) -> np.ndarray:
    """Fractional-differencing (power-law) filter coefficients.

    h_0 = 1 and h_i = h_{i-1} * (beta/2 + i - 1) / i, evaluated exactly in
    that order; beta = 0 gives a pure impulse, beta = 2 the all-ones
    random-walk integrator.
    """
    if length < 1:
        raise ValueError(f"filter length must be at least 1, got {length}")
    return _pl_filter_kernel(float(beta), length)


def _filter_gram(beta: float, n: int) -> np.ndarray:
    """J with J_ij = sum_k h_{i-k} h_{j-k} (Gram matrix of the causal filter)."""
    h = pl_filter(beta, n)
    U = sla.toeplitz(h, np.zeros(n))
    return U @ U.T


def pl_covariance(beta: float, a_wh: float, b_cl: float, epochs: np.ndarray,
                  dt: float = 1.0) -> np.ndarray:
    """Covariance a_wh^2 I + b_cl^2 J on the observed epochs.

    J is the filter Gram matrix, built on the underlying uniform grid with
    rows/columns of missing epochs deleted afterwards. Raises if the epochs
    do not sit on a uniform dt grid.
    """
    if beta < 0:
        raise ValueError(f"spectral index must be nonnegative, got {beta}")
    epochs = np.asarray(epochs, dtype=float)
    idx = np.round((epochs - epochs[0]) / dt).astype(int)
    if not np.allclose(epochs, epochs[0] + idx * dt, rtol=0.0, atol=1e-6 * dt):
        raise ValueError("epochs do not sit on a uniform grid; cannot build the covariance")
    n_grid = int(idx[-1]) + 1
    J = _filter_gram(beta, n_grid)[np.ix_(idx, idx)]
    return a_wh ** 2 * np.eye(len(epochs)) + b_cl ** 2 * J


def gen_noise(spec: NoiseModelSpec, length: int, seed: int,
              t0: float = 55000.0, dt: float = 1.0) -> TimeSeries:
    """Simulate mixed white + coloured noise (deterministic under seed)."""
    if length < 1:
        raise ValueError(f"length must be at least 1, got {length}")
    rng = np.random.default_rng(seed)
    white = spec.a_wh * rng.standard_normal(length)
    driving = spec.b_cl * rng.standard_normal(length)
    coloured = fftconvolve(driving, pl_filter(spec.beta, length))[:length]
    epochs = t0 + dt * np.arange(length)
    return TimeSeries(epochs, white + coloured, dt=dt)


def gen_scenario(scenario: str, beta: float, length: int = 3650, seed: int = 0,
                 kind: str = "pl+wn", t0: float = 55000.0):
    """Simulated series for one scenario: signal truth plus mixed noise.

    The coloured amplitude is drawn uniformly in the scenario band, the
    trend uniformly in [1, 3] mm/yr; intercept 0 and a single annual
    harmonic with (cos, sin) amplitudes (0.4, 0.2) mm.

    Returns ``(series, functional_truth, noise_truth)``.
    """
    if scenario not in SCENARIO_BANDS:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of A, B, C")
    rng = np.random.default_rng(seed)
    lo, hi = SCENARIO_BANDS[scenario]
    b_cl = float(rng.uniform(lo, hi))
    a = float(rng.uniform(1.0, 3.0))
    truth1 = FunctionalParams(trend=a, intercept=0.0, harmonics=((0.4, 0.2),))
    truth2 = NoiseModelSpec(kind=kind, a_wh=1.6, b_cl=b_cl, beta=beta)
    epochs = t0 + np.arange(length, dtype=float)
    X = build_design(epochs, n_harmonics=1)
    signal = X @ truth1.as_vector()
    noise = gen_noise(truth2, length, seed=int(rng.integers(2 ** 63)), t0=t0)
    return TimeSeries(epochs, signal + noise.values), truth1, truth2


def gen_stable_motion(alpha: float, k: float, length: int, seed: int,
                      t0: float = 55000.0, dt: float = 1.0) -> TimeSeries:
    """Levy alpha-stable motion: cumulative sum of i.i.d. stable increments."""
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    rng = np.random.default_rng(seed)
    increments = stable_rvs(alpha, k, length, rng, scale=dt ** (1.0 / alpha))
    epochs = t0 + dt * np.arange(length)
    return TimeSeries(epochs, np.cumsum(increments), dt=dt)


def gen_flsm(alpha: float, hurst: float, length: int, seed: int,
             burnin_factor: int = 10, t0: float = 55000.0) -> TimeSeries:
    """Fractional Levy stable motion by a truncated moving-average kernel.

    Discretizes the integral representation with kernel
    ``(t-u)_+^(H-1/alpha) - (-u)_+^(H-1/alpha)`` driven by symmetric stable
    increments, keeping ``burnin_factor * length`` past steps. At alpha = 2
    the path is distributed as fractional Brownian motion; at H = 1/alpha it
    coincides in distribution with the plain stable motion.
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"Hurst parameter must lie in (0, 1), got {hurst}")
    if length < 1:
        raise ValueError(f"length must be at least 1, got {length}")
    rng = np.random.default_rng(seed)
    m_past = burnin_factor * length
    expo = hurst - 1.0 / alpha
    # increments eta_j at u = j - m_past, j = 0 .. m_past + length - 1
    eta = stable_rvs(alpha, 0.0, m_past + length, rng)
    lags = np.arange(1, m_past + length + 1, dtype=float)
    kernel = lags ** expo if expo != 0.0 else np.ones_like(lags)
    conv = fftconvolve(eta, np.concatenate(([0.0], kernel)))
    pos = conv[m_past + 1: m_past + length + 1]
    past_weights = lags[:m_past][::-1] ** expo if expo != 0.0 else np.ones(m_past)
    base = float(past_weights @ eta[:m_past])
    values = pos - base
    epochs = t0 + np.arange(length, dtype=float)
    return TimeSeries(epochs, values)
