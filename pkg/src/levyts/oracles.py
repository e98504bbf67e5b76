"""Closed-form mean/variance of residual series that still carry a trend,
a seasonal component or step offsets, next to each one's conventional
large-L approximation and a brute-force summation reference.

Conventions: epochs t_i = i for i = 1..L (daily sampling, dt = 1), noise
with mean mu_c and variance sigma_n2, independent of the deterministic
part. Exact mode evaluates the expectation of the time-average variance
estimator in closed form (cross terms have zero expectation); approx mode
reproduces the conventional large-L formulas as published, including their
known quirks (the surviving intercept-squared term for the trend case and
the missing 1/2 on the squared seasonal amplitudes), so the discrepancy is
visible rather than silently patched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .functional import DAYS_PER_YEAR

__all__ = ["ResidualSignalSpec", "trend_moments", "seasonal_moments",
           "offset_moments", "brute_force_moments", "moments"]


@dataclass(frozen=True)
class ResidualSignalSpec:
    """Residual deterministic signal plus noise moments.

    kind 'trend': slope a_r (mm/yr, per-epoch slope a_r/365.25) and
    intercept b_r. kind 'seasonal': (cos, sin) amplitude pairs at annual
    harmonics j = 1, 2, ... and the nominal signal mean delta. kind
    'offsets': magnitudes g_k at day indices T_k.
    """

    kind: str
    a_r: float = 0.0
    b_r: float = 0.0
    seasonal_pairs: tuple[tuple[float, float], ...] = ()
    delta: float = 0.0
    offsets: tuple[tuple[float, float], ...] = ()  # (g_k, T_k)
    mu_c: float = 0.0
    sigma_n2: float = 1.0

    def __post_init__(self):
        if self.kind not in ("trend", "seasonal", "offsets"):
            raise ValueError(f"kind must be trend/seasonal/offsets, got {self.kind!r}")
        if self.sigma_n2 < 0:
            raise ValueError("noise variance must be nonnegative")
        if self.offsets:
            ts = [t for _, t in self.offsets]
            if sorted(ts) != ts:
                raise ValueError("offset epochs must be sorted")


def _slope_per_epoch(spec: ResidualSignalSpec) -> float:
    return spec.a_r / DAYS_PER_YEAR


def _deterministic_part(spec: ResidualSignalSpec, L: int) -> np.ndarray:
    t = np.arange(1, L + 1, dtype=float)
    if spec.kind == "trend":
        return _slope_per_epoch(spec) * t + spec.b_r
    if spec.kind == "seasonal":
        out = np.zeros(L)
        for j, (c, e) in enumerate(spec.seasonal_pairs, start=1):
            w = 2.0 * np.pi * j / DAYS_PER_YEAR
            out += c * np.cos(w * t) + e * np.sin(w * t)
        return out
    out = np.zeros(L)
    for g, T in spec.offsets:
        out += g * (t >= T)
    return out


def brute_force_moments(spec: ResidualSignalSpec, L: int) -> tuple[float, float]:
    """Direct O(L) summation of the deterministic part plus noise moments."""
    m = _deterministic_part(spec, L)
    mean = float(np.mean(m)) + spec.mu_c
    var = float(np.mean((m - np.mean(m)) ** 2)) + spec.sigma_n2
    return mean, var


def _cos_sum(w: float, L: int) -> float:
    """sum_{i=1..L} cos(w i), stable closed form."""
    half = w / 2.0
    if abs(np.sin(half)) < 1e-14:
        return L * np.cos(w)
    return float(np.sin(L * half) / np.sin(half) * np.cos((L + 1) * half))


def _sin_sum(w: float, L: int) -> float:
    half = w / 2.0
    if abs(np.sin(half)) < 1e-14:
        return L * np.sin(w)
    return float(np.sin(L * half) / np.sin(half) * np.sin((L + 1) * half))


def trend_moments(spec: ResidualSignalSpec, L: int, mode: str = "exact") -> tuple[float, float]:
    """Mean and variance with a remaining linear trend.

    exact: mean b_r + a(L+1)/2 + mu_c; variance a^2[(L+1)(2L+1)/6-((L+1)/2)^2]
    + sigma_n2 (cross terms have zero expectation). approx: the large-L
    approximation, mean ~ aL/2 + mu_c and variance
    ~ a^2 L^2/12 + sigma_n2 + b_r^2 - mu_c a L.
    """
    if spec.kind != "trend":
        raise ValueError("trend_moments requires a trend spec")
    a = _slope_per_epoch(spec)
    if mode == "exact":
        mean = spec.b_r + a * (L + 1) / 2.0 + spec.mu_c
        var = a * a * ((L + 1.0) * (2.0 * L + 1.0) / 6.0 - ((L + 1.0) / 2.0) ** 2) + spec.sigma_n2
        return float(mean), float(var)
    if mode == "approx":
        mean = a * L / 2.0 + spec.mu_c
        var = a * a * L * L / 12.0 + spec.sigma_n2 + spec.b_r ** 2 - spec.mu_c * a * L
        return float(mean), float(var)
    raise ValueError(f"mode must be 'exact' or 'approx', got {mode!r}")


def seasonal_moments(spec: ResidualSignalSpec, L: int, mode: str = "exact") -> tuple[float, float]:
    """Mean and variance with a remaining pseudo-periodic component.

    exact: closed-form trigonometric sums for the time average of the
    signal and its square. approx: mean ~ delta + mu_c, variance
    ~ sigma_n2 + sum(c^2 + e^2) - (delta + mu_c)^2, which carries no 1/2 on
    the squared amplitudes.
    """
    if spec.kind != "seasonal":
        raise ValueError("seasonal_moments requires a seasonal spec")
    pairs = spec.seasonal_pairs
    if mode == "approx":
        amp2 = sum(c * c + e * e for c, e in pairs)
        mean = spec.delta + spec.mu_c
        var = spec.sigma_n2 + amp2 - (spec.delta + spec.mu_c) ** 2
        return float(mean), float(var)
    if mode != "exact":
        raise ValueError(f"mode must be 'exact' or 'approx', got {mode!r}")
    freqs = [2.0 * np.pi * j / DAYS_PER_YEAR for j in range(1, len(pairs) + 1)]
    m1 = sum(c * _cos_sum(w, L) + e * _sin_sum(w, L)
             for (c, e), w in zip(pairs, freqs)) / L
    # time average of the squared signal via product-to-sum identities
    m2 = 0.0
    for (cj, ej), wj in zip(pairs, freqs):
        for (ck, ek), wk in zip(pairs, freqs):
            wp, wm = wj + wk, wj - wk
            cos_p, cos_m = _cos_sum(wp, L), (_cos_sum(wm, L) if abs(wm) > 0 else float(L))
            sin_p, sin_m = _sin_sum(wp, L), (_sin_sum(wm, L) if abs(wm) > 0 else 0.0)
            m2 += 0.5 * (cj * ck * (cos_m + cos_p)
                         + ej * ek * (cos_m - cos_p)
                         + cj * ek * (sin_p - sin_m)
                         + ej * ck * (sin_p + sin_m))
    m2 /= L
    mean = m1 + spec.mu_c
    var = m2 - m1 * m1 + spec.sigma_n2
    return float(mean), float(var)


def offset_moments(spec: ResidualSignalSpec, L: int, mode: str = "exact") -> tuple[float, float]:
    """Mean and variance with remaining step offsets.

    exact: epoch-count weighted step sums. approx: the displayed formulas,
    whose mean weighs every step by the final-epoch Heaviside only.
    """
    if spec.kind != "offsets":
        raise ValueError("offset_moments requires an offsets spec")
    for _, T in spec.offsets:
        if not 1.0 <= T <= L:
            raise ValueError(f"offset epoch {T} outside the series span [1, {L}]")
    if mode == "approx":
        step_sum = sum(g for g, T in spec.offsets if L >= T)
        mean = step_sum / L + spec.mu_c
        var = spec.sigma_n2 + step_sum ** 2 / L - mean ** 2
        return float(mean), float(var)
    if mode != "exact":
        raise ValueError(f"mode must be 'exact' or 'approx', got {mode!r}")
    counts = {T: L - int(np.ceil(T)) + 1 for _, T in spec.offsets}
    m1 = sum(g * counts[T] for g, T in spec.offsets) / L
    m2 = 0.0
    for gk, Tk in spec.offsets:
        for gl, Tl in spec.offsets:
            m2 += gk * gl * counts[max(Tk, Tl)]
    m2 /= L
    mean = m1 + spec.mu_c
    var = m2 - m1 * m1 + spec.sigma_n2
    return float(mean), float(var)


def moments(spec: ResidualSignalSpec, L: int, mode: str = "exact") -> tuple[float, float]:
    """Dispatch on the signal kind."""
    fn = {"trend": trend_moments, "seasonal": seasonal_moments,
          "offsets": offset_moments}[spec.kind]
    return fn(spec, L, mode)
