"""Trend, covariance and one-step prediction for locally stationary time series."""

from .autocov import LagCurve, ResidualSeries, autocov_at, autocov_bandwidth, fit_lag_curves, residuals
from .bandselect import BandSelection, longrun_variance, normal_quantile, select_band, sigma_hat
from .covmatrix import (
    BandedCovariance,
    SpectralFloorParams,
    banded_local,
    banded_stationary,
    operator_norm,
    pd_correct,
    taper_local,
)
from .estimation import CovarianceEstimate, EstimationSettings, estimate_covariance
from .predictor import fit_coefficients, predict_one, rolling_backtest
from .simulate import InnovationLaw, ProcessSpec, simulate_path, true_covariance
from .smoothing import BIWEIGHT, EPANECHNIKOV, KernelSpec, gcv_select, hat_diagonal, local_linear_fit

__version__ = "0.1.0"
