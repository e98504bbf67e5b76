"""The window-growing classification procedure: nested end-growing windows,
re-fitting of both models per window, variation percentages between the
first and last windows, and the Levy-class verdict.

Classes:
  GaussianLevy   - variations within the small band, Gaussian residuals
  FractionalLevy - variations up to the large band
  StableLevy     - variations beyond the large band, or heavy-tailed
                   residual distribution
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import kurtosis, skew

from .functional import FunctionalParams
from .memory import ArmaFit, select_bic
from .mle import StochasticFit, fit_stochastic
from .series import OffsetCatalog, TimeSeries, slice_window
from .stable import (StableParams, dist_correlation, fit_normal, fit_stable_ml,
                     stable_pdf)

__all__ = [
    "Thresholds",
    "WindowFitRecord",
    "ClassificationReport",
    "variation_pct",
    "classify",
    "run_nstep",
    "report_to_json",
    "DEFAULT_STEP_FRACTIONS",
]

DEFAULT_STEP_FRACTIONS = (0.0, 0.3, 0.5, 0.7, 0.8, 1.0)
GAUSSIAN_LEVY = "GaussianLevy"
FRACTIONAL_LEVY = "FractionalLevy"
STABLE_LEVY = "StableLevy"


@dataclass(frozen=True)
class Thresholds:
    """Decision thresholds; the variation bands come from the method's
    little/bigger-differences rules, the heavy-tail pair is configurable."""

    small_pct: float = 3.0
    large_pct: float = 20.0
    alpha_heavy: float = 1.9
    corr_margin: float = 0.02

    def __post_init__(self):
        if not 0.0 < self.small_pct < self.large_pct:
            raise ValueError("need 0 < small_pct < large_pct")
        if not self.large_pct <= 100.0:
            raise ValueError("large_pct must be at most 100")
        if not 0.3 < self.alpha_heavy <= 2.0:
            raise ValueError("alpha_heavy must lie in (0.3, 2]")
        if not 0.0 <= self.corr_margin <= 1.0:
            raise ValueError("corr_margin must lie in [0, 1]")


@dataclass(frozen=True)
class WindowFitRecord:
    end_offset_days: float
    n_obs: int
    n_gaps: int
    theta1: FunctionalParams
    theta2: StochasticFit
    residual_std: float
    residual_skewness: float
    residual_excess_kurtosis: float
    stable: StableParams
    normal_mean: float
    normal_std: float
    corr_normal: float
    corr_levy: float
    arma: ArmaFit
    farima: ArmaFit
    memory_winner: str


@dataclass(frozen=True)
class ClassificationReport:
    series_meta: dict
    records: tuple[WindowFitRecord, ...]
    functional_pct: float
    stochastic_pct: float
    functional_pct_by_step: tuple[float, ...]
    stochastic_pct_by_step: tuple[float, ...]
    functional_pct_per_param: tuple[tuple[float, ...], ...]
    stochastic_pct_per_param: tuple[tuple[float, ...], ...]
    distribution_verdict: str
    memory_verdict: str
    levy_class: str
    thresholds: Thresholds
    flags: tuple[str, ...] = field(default=())


def variation_pct(params_first: np.ndarray, params_last: np.ndarray,
                  tiny: float = 1e-12) -> float:
    """100 * sum|theta_N - theta_1| / sum|theta_1|.

    Parameters whose initial absolute value is below ``tiny`` are excluded
    from both sums; an all-excluded initial vector raises.
    """
    first = np.asarray(params_first, dtype=float)
    last = np.asarray(params_last, dtype=float)
    if first.shape != last.shape:
        raise ValueError("parameter vectors must share their layout")
    keep = np.abs(first) >= tiny
    if not np.any(keep):
        raise ValueError("initial parameter vector is entirely (near) zero")
    num = float(np.sum(np.abs(last[keep] - first[keep])))
    den = float(np.sum(np.abs(first[keep])))
    return 100.0 * num / den


def _per_param_pct(first: np.ndarray, last: np.ndarray, tiny: float = 1e-12):
    first = np.asarray(first, dtype=float)
    last = np.asarray(last, dtype=float)
    out = np.full(first.shape, np.nan)
    keep = np.abs(first) >= tiny
    out[keep] = 100.0 * np.abs(last[keep] - first[keep]) / np.abs(first[keep])
    return tuple(float(v) for v in out)


def classify(v_stochastic: float, v_functional: float, alpha_hat: float,
             corr_levy_minus_normal: float,
             thresholds: Thresholds = Thresholds()) -> str:
    """Levy-class decision from the variation percentages and the
    first-window residual distribution."""
    for name, v in (("stochastic", v_stochastic), ("functional", v_functional)):
        if v is None or not np.isfinite(v):
            raise ValueError(f"missing {name} variation percentage")
    if alpha_hat is None or not np.isfinite(alpha_hat):
        raise ValueError("missing stable-fit alpha for the first window")
    if corr_levy_minus_normal is None or not np.isfinite(corr_levy_minus_normal):
        raise ValueError("missing distribution-correlation margin")
    v_max = max(v_stochastic, v_functional)
    heavy = alpha_hat < thresholds.alpha_heavy and corr_levy_minus_normal > thresholds.corr_margin
    if v_max > thresholds.large_pct or heavy:
        return STABLE_LEVY
    if v_max <= thresholds.small_pct:
        return GAUSSIAN_LEVY
    return FRACTIONAL_LEVY


def _fit_window(window: TimeSeries, kind: str, n_harmonics: int,
                offsets: OffsetCatalog | None, offset_days: float,
                pmax: int, qmax: int, memory_budget: int,
                stochastic_maxfev: int) -> tuple[WindowFitRecord, list[str]]:
    flags: list[str] = []
    window_offsets = offsets.within(window.epochs[0], window.epochs[-1]) if offsets else None
    fit2, theta1, residual = fit_stochastic(window, kind=kind, n_harmonics=n_harmonics,
                                            offsets=window_offsets, maxfev=stochastic_maxfev)
    if not fit2.converged:
        flags.append(f"stochastic_fit_not_converged:offset={offset_days:g}")
    r = residual.values
    stable = fit_stable_ml(r)
    mu, sd = fit_normal(r)

    def normal_pdf(xs):
        return np.exp(-0.5 * ((xs - mu) / sd) ** 2) / (sd * np.sqrt(2.0 * np.pi))

    corr_n = dist_correlation(r, normal_pdf)
    corr_l = dist_correlation(r, lambda xs: stable_pdf(xs, stable))
    arma, farima, winner = select_bic(r, d_candidate=fit2.beta / 2.0,
                                      pmax=pmax, qmax=qmax,
                                      maxfev_per_dim=memory_budget)
    record = WindowFitRecord(
        end_offset_days=float(offset_days),
        n_obs=len(window),
        n_gaps=window.n_gaps,
        theta1=theta1,
        theta2=fit2,
        residual_std=float(np.std(r)),
        residual_skewness=float(skew(r)),
        residual_excess_kurtosis=float(kurtosis(r)),
        stable=stable,
        normal_mean=mu,
        normal_std=sd,
        corr_normal=corr_n,
        corr_levy=corr_l,
        arma=arma,
        farima=farima,
        memory_winner=winner,
    )
    return record, flags


def run_nstep(ts: TimeSeries, kind: str = "pl+wn",
              step_offsets_days: tuple[float, ...] | None = None,
              n_harmonics: int = 2, offsets: OffsetCatalog | None = None,
              thresholds: Thresholds = Thresholds(), growth_days: float = 365.0,
              pmax: int = 5, qmax: int = 5, memory_budget: int = 6,
              stochastic_maxfev: int = 160) -> ClassificationReport:
    """Full pipeline: nested windows, per-window fits, variations, verdict.

    Deterministic: repeated calls on the same series produce identical
    reports. Window fit failures become flags, and classification then uses
    the converged windows only, with a degraded-confidence flag.
    """
    if ts.span_days < 3 * 365.0 - 1.0:
        raise ValueError("the procedure needs a series spanning at least 3 years")
    if step_offsets_days is None:
        step_offsets_days = tuple(f * growth_days for f in DEFAULT_STEP_FRACTIONS)
    flags: list[str] = []
    records: list[WindowFitRecord] = []
    for offset_days in step_offsets_days:
        window = slice_window(ts, offset_days, growth_days)
        record, w_flags = _fit_window(window, kind, n_harmonics, offsets, offset_days,
                                      pmax, qmax, memory_budget, stochastic_maxfev)
        records.append(record)
        flags.extend(w_flags)

    converged = [rec for rec in records if rec.theta2.converged]
    usable = converged if len(converged) >= 2 else records
    if len(converged) < len(records):
        flags.append("classification_degraded:nonconverged_windows_excluded")
    first, last = usable[0], usable[-1]

    v_f = variation_pct(first.theta1.as_vector(), last.theta1.as_vector())
    v_g = variation_pct(first.theta2.as_vector(), last.theta2.as_vector())
    f_steps = tuple(variation_pct(first.theta1.as_vector(), rec.theta1.as_vector())
                    for rec in records)
    g_steps = tuple(variation_pct(first.theta2.as_vector(), rec.theta2.as_vector())
                    for rec in records)
    f_per_param = tuple(_per_param_pct(first.theta1.as_vector(), rec.theta1.as_vector())
                        for rec in records)
    g_per_param = tuple(_per_param_pct(first.theta2.as_vector(), rec.theta2.as_vector())
                        for rec in records)

    margin = first.corr_levy - first.corr_normal
    heavy = first.stable.alpha < thresholds.alpha_heavy and margin > thresholds.corr_margin
    levy_class = classify(v_g, v_f, first.stable.alpha, margin, thresholds)

    meta = {
        "n_obs": len(ts),
        "n_gaps": ts.n_gaps,
        "first_epoch": float(ts.epochs[0]),
        "last_epoch": float(ts.epochs[-1]),
        "dt_days": ts.dt,
        "noise_model": kind,
        "n_harmonics": n_harmonics,
        "step_offsets_days": [float(s) for s in step_offsets_days],
    }
    return ClassificationReport(
        series_meta=meta,
        records=tuple(records),
        functional_pct=v_f,
        stochastic_pct=v_g,
        functional_pct_by_step=f_steps,
        stochastic_pct_by_step=g_steps,
        functional_pct_per_param=f_per_param,
        stochastic_pct_per_param=g_per_param,
        distribution_verdict="levy-alpha-stable" if heavy else "gaussian",
        memory_verdict=first.memory_winner,
        levy_class=levy_class,
        thresholds=thresholds,
        flags=tuple(flags),
    )


def _memory_dict(fit: ArmaFit) -> dict:
    return {
        "p": fit.p, "q": fit.q, "d": fit.d, "n_diff": fit.n_diff,
        "ar": list(fit.ar), "ma": list(fit.ma), "sigma2": fit.sigma2,
        "loglik": fit.loglik, "bic": fit.bic, "fit_error_mm": fit.fit_error,
        "converged": fit.converged,
    }


def report_to_dict(report: ClassificationReport) -> dict:
    steps = []
    for rec in report.records:
        steps.append({
            "end_offset_days": rec.end_offset_days,
            "n_obs": rec.n_obs,
            "n_gaps": rec.n_gaps,
            "theta1": {
                "trend_mm_yr": rec.theta1.trend,
                "intercept_mm": rec.theta1.intercept,
                "harmonics": [list(h) for h in rec.theta1.harmonics],
                "offsets_mm": list(rec.theta1.offsets),
            },
            "theta2": {
                "a_wh_mm": rec.theta2.a_wh, "b_cl": rec.theta2.b_cl,
                "beta": rec.theta2.beta, "sigma_a": rec.theta2.sigma_a,
                "sigma_b": rec.theta2.sigma_b, "sigma_beta": rec.theta2.sigma_beta,
                "loglik": rec.theta2.loglik, "converged": rec.theta2.converged,
                "iterations": rec.theta2.n_iter,
            },
            "residual": {
                "std_mm": rec.residual_std,
                "skewness": rec.residual_skewness,
                "excess_kurtosis": rec.residual_excess_kurtosis,
            },
            "stable": asdict(rec.stable),
            "normal": {"mean": rec.normal_mean, "std": rec.normal_std},
            "correlations": {"normal": rec.corr_normal, "levy": rec.corr_levy},
            "memory_model": {
                "arma": _memory_dict(rec.arma),
                "farima": _memory_dict(rec.farima),
                "winner": rec.memory_winner,
            },
        })
    first = report.records[0]
    return {
        "series_meta": report.series_meta,
        "steps": steps,
        "variations": {
            "functional_pct": report.functional_pct,
            "stochastic_pct": report.stochastic_pct,
            "functional_pct_by_step": list(report.functional_pct_by_step),
            "stochastic_pct_by_step": list(report.stochastic_pct_by_step),
            "functional_pct_per_param": [list(v) for v in report.functional_pct_per_param],
            "stochastic_pct_per_param": [list(v) for v in report.stochastic_pct_per_param],
        },
        "distribution": {
            "verdict": report.distribution_verdict,
            "normal": {"mean": first.normal_mean, "std": first.normal_std},
            "stable": asdict(first.stable),
            "correlations": {"normal": first.corr_normal, "levy": first.corr_levy},
        },
        "memory_model": {
            "arma": _memory_dict(first.arma),
            "farima": _memory_dict(first.farima),
            "winner": report.memory_verdict,
        },
        "levy_class": report.levy_class,
        "thresholds": asdict(report.thresholds),
        "flags": list(report.flags),
    }


def report_to_json(report: ClassificationReport) -> str:
    """Deterministic JSON serialization (sorted keys, repr floats)."""
    return json.dumps(report_to_dict(report), sort_keys=True, indent=1,
                      allow_nan=True)
