"""Deterministic signal model: linear trend, seasonal harmonics, step offsets.

The design uses time in years from the first epoch, an intercept, up to
seven annual-harmonic cosine/sine pairs and one Heaviside column per
catalogued offset. Fitting is generalized least squares against an
arbitrary positive-definite noise covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .series import OffsetCatalog, TimeSeries

__all__ = ["FunctionalParams", "build_design", "design_columns", "gls_fit", "DAYS_PER_YEAR"]

DAYS_PER_YEAR = 365.25


@dataclass(frozen=True)
class FunctionalParams:
    """Estimated deterministic-model coefficients.

    trend is in mm/yr, intercept in mm; ``harmonics`` holds one
    (cos, sin) amplitude pair (mm) per harmonic j at frequency
    2*pi*j / 365.25 days; ``offsets`` are step magnitudes (mm).
    """

    trend: float
    intercept: float
    harmonics: tuple[tuple[float, float], ...] = ()
    offsets: tuple[float, ...] = ()

    @property
    def n_harmonics(self) -> int:
        return len(self.harmonics)

    def as_vector(self) -> np.ndarray:
        flat = [self.trend, self.intercept]
        for c, s in self.harmonics:
            flat.extend((c, s))
        flat.extend(self.offsets)
        return np.array(flat)

    @classmethod
    def from_vector(cls, vec: np.ndarray, n_harmonics: int) -> "FunctionalParams":
        vec = np.asarray(vec, dtype=float)
        harmonics = tuple((float(vec[2 + 2 * j]), float(vec[3 + 2 * j]))
                          for j in range(n_harmonics))
        offsets = tuple(float(v) for v in vec[2 + 2 * n_harmonics:])
        return cls(float(vec[0]), float(vec[1]), harmonics, offsets)


def design_columns(n_harmonics: int, n_offsets: int) -> list[str]:
    cols = ["trend", "intercept"]
    for j in range(1, n_harmonics + 1):
        cols += [f"cos{j}", f"sin{j}"]
    cols += [f"offset{k}" for k in range(1, n_offsets + 1)]
    return cols


def build_design(epochs: np.ndarray, n_harmonics: int = 2,
                 offsets: OffsetCatalog | None = None) -> np.ndarray:
    """Design matrix with columns [t_yr, 1, cos_1, sin_1, ..., H(t-T_1), ...].

    ``epochs`` are MJD days; time is measured in years from the first epoch.
    Harmonic j oscillates at j cycles per 365.25 days. Heaviside columns are
    0 before their offset epoch and 1 at/after it.
    """
    epochs = np.asarray(epochs, dtype=float)
    if not 1 <= n_harmonics <= 7:
        raise ValueError(f"number of harmonics must be in [1, 7], got {n_harmonics}")
    t_yr = (epochs - epochs[0]) / DAYS_PER_YEAR
    cols = [t_yr, np.ones_like(t_yr)]
    for j in range(1, n_harmonics + 1):
        w = 2.0 * np.pi * j
        cols.append(np.cos(w * t_yr))
        cols.append(np.sin(w * t_yr))
    if offsets is not None and len(offsets):
        if np.any(offsets.epochs <= epochs[0]) or np.any(offsets.epochs > epochs[-1]):
            raise ValueError("offset epoch outside the series span")
        for T in offsets.epochs:
            cols.append((epochs >= T).astype(float))
    return np.column_stack(cols)


def _check_rank(X: np.ndarray, names: list[str]) -> None:
    # Identify near-collinear columns via the smallest right singular vector.
    s = np.linalg.svd(X, compute_uv=False)
    if s[-1] > 1e-10 * s[0]:
        return
    _, _, vt = np.linalg.svd(X)
    involved = [names[i] for i in np.flatnonzero(np.abs(vt[-1]) > 0.3)]
    raise np.linalg.LinAlgError(
        "design matrix is rank deficient; collinear columns: " + ", ".join(involved))


def gls_fit(ts: TimeSeries, covariance: np.ndarray, n_harmonics: int = 2,
            offsets: OffsetCatalog | None = None, design: np.ndarray | None = None):
    """Generalized least squares fit of the functional model.

    Returns ``(params, residual_series, param_covariance)`` where the
    residuals are the input series minus the fitted signal and the
    parameter covariance is ``(X' C^-1 X)^-1``.
    """
    X = build_design(ts.epochs, n_harmonics, offsets) if design is None else design
    names = design_columns(n_harmonics, X.shape[1] - 2 - 2 * n_harmonics)
    _check_rank(X, names)
    C = np.asarray(covariance, dtype=float)
    if C.shape != (len(ts), len(ts)):
        raise ValueError(f"covariance shape {C.shape} does not match series length {len(ts)}")
    try:
        chol = sla.cholesky(C, lower=True)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("noise covariance is not positive definite") from exc
    Xw = sla.solve_triangular(chol, X, lower=True)
    yw = sla.solve_triangular(chol, ts.values, lower=True)
    theta, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    residual = ts.values - X @ theta
    cov_theta = np.linalg.inv(Xw.T @ Xw)
    params = FunctionalParams.from_vector(theta, n_harmonics)
    return params, ts.with_values(residual), cov_theta
