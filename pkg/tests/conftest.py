"""Shared fixtures and independent estimator oracles used across tests.

The estimators here (periodogram slope, aggregated-variance Hurst) are
deliberately simple textbook constructions, kept independent of the package
internals they are used to check.
"""

import numpy as np
import pytest


def periodogram_beta(x: np.ndarray) -> float:
    """Spectral-index estimate: regress log-periodogram on log(2 sin(pi f)).

    Pure power-law noise built from the fractional-differencing filter has
    spectrum proportional to (2 sin(pi f))^(-beta), so the slope of this
    regression estimates -beta without discretization bias.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    fx = np.fft.rfft(x - x.mean())
    power = np.abs(fx[1:]) ** 2
    freq = np.arange(1, power.size + 1) / n
    keep = (freq > 2.0 / n) & (freq < 0.4)
    lx = np.log(2.0 * np.sin(np.pi * freq[keep]))
    ly = np.log(power[keep])
    slope = np.polyfit(lx, ly, 1)[0]
    return -float(slope)


def aggregated_variance_hurst(path: np.ndarray) -> float:
    """Hurst estimate from the variance of aggregated increments.

    For an H-self-similar path the variance of block means of the increment
    series scales as m^(2H-2) with block size m.
    """
    inc = np.diff(np.asarray(path, dtype=float))
    n = inc.size
    sizes = np.unique(np.logspace(0.5, np.log10(n // 20), 12).astype(int))
    logm, logv = [], []
    for m in sizes:
        k = n // m
        if k < 10:
            continue
        means = inc[: k * m].reshape(k, m).mean(axis=1)
        v = means.var()
        if v > 0:
            logm.append(np.log(m))
            logv.append(np.log(v))
    slope = np.polyfit(logm, logv, 1)[0]
    return float(1.0 + slope / 2.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20250810)
