"""Mixed-spectrum time-series modelling with Levy-process residual
classification: power-law noise MLE, ARMA/FARIMA selection, alpha-stable
fitting and the window-growing classification procedure."""

__version__ = "0.1.0"

from .classify import (ClassificationReport, Thresholds, classify, run_nstep,
                       report_to_json, variation_pct)
from .functional import FunctionalParams, build_design, gls_fit
from .memory import ArmaFit, arfima_autocov, fit_arma, select_bic
from .mle import StochasticFit, fit_stochastic, log_likelihood
from .noise import (NoiseModelSpec, SpectralIndex, gen_flsm, gen_noise,
                    gen_scenario, gen_stable_motion, pl_covariance, pl_filter)
from .oracles import (ResidualSignalSpec, brute_force_moments, offset_moments,
                      seasonal_moments, trend_moments)
from .series import (OffsetCatalog, TimeSeries, parse_offsets, parse_series,
                     slice_window, write_series)
from .stable import (StableParams, dist_correlation, fit_normal, fit_stable_ml,
                     stable_charfn, stable_pdf, stable_rvs)

__all__ = [name for name in dir() if not name.startswith("_")]
