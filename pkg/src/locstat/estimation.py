"""End-to-end covariance estimation: trend, residuals, band width, lag curves, matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .autocov import LagCurve, ResidualSeries, fit_lag_curves, residuals
from .bandselect import BandSelection, select_band
from .covmatrix import BandedCovariance, banded_local, banded_stationary, taper_local
from .smoothing import (BandwidthSearch, LocalLinearFit, bandwidth_grid, gcv_select, get_kernel,
                        lag_bandwidth_grid, local_linear_fit)

__all__ = ["EstimationSettings", "CovarianceEstimate", "estimate_covariance", "prediction_band_range"]


def prediction_band_range(m: int) -> tuple[int, int]:
    """``(ceil(log m), 5 + ceil(log m))``."""
    l0 = int(math.ceil(math.log(m)))
    return l0, l0 + 5


@dataclass(frozen=True)
class EstimationSettings:
    """Tuning knobs shared by the estimators and the predictor.

    ``l0``/``l1`` set to ``None`` select the prediction range
    ``ceil(log m) .. 5 + ceil(log m)``. ``trend_min=None`` puts the lower
    end of the trend grid at ``m^(-1/3)``.
    """

    kernel: str = "biweight"
    l0: int | None = 1
    l1: int | None = 6
    alpha: float = 0.01
    block: int | None = None
    bandwidth_count: int = 20
    trend_min: float | None = None
    trend_max: float = 0.5
    lag_min: float = 0.2
    lag_max: float = 1.0
    beta: float = 0.5
    floor_multiplier: float = 10.0
    taper: bool = False

    def band_range(self, m: int) -> tuple[int, int]:
        auto0, auto1 = prediction_band_range(m)
        l0 = auto0 if self.l0 is None else int(self.l0)
        l1 = auto1 if self.l1 is None else int(self.l1)
        l1 = min(l1, m - 1)
        return min(l0, l1), l1

    def trend_candidates(self, m: int) -> np.ndarray:
        return bandwidth_grid(m, self.bandwidth_count, self.trend_min, self.trend_max)

    def lag_candidates(self, m: int) -> np.ndarray:
        return lag_bandwidth_grid(m, self.bandwidth_count, self.lag_min, self.lag_max)

    def with_(self, **kw) -> "EstimationSettings":
        return replace(self, **kw)


@dataclass
class CovarianceEstimate:
    trend: LocalLinearFit
    trend_search: BandwidthSearch
    residuals: ResidualSeries
    band: BandSelection
    curves: dict[int, LagCurve]
    local: BandedCovariance
    stationary: BandedCovariance
    tapered: BandedCovariance | None = None

    @property
    def l_n(self) -> int:
        return self.band.selected

    @property
    def tau(self) -> float:
        return self.trend.bandwidth


def estimate_covariance(y, n: int | None = None, settings: EstimationSettings | None = None,
                        extra_lags: int = 0) -> CovarianceEstimate:
    """Run the full estimation pipeline on the window ``y_1..y_m`` (design ``i/n``).

    ``extra_lags`` requests curves beyond the selected band (e.g. for the
    prediction vector).
    """
    settings = settings or EstimationSettings()
    kern = get_kernel(settings.kernel)
    y = np.asarray(y, dtype=float)
    m = y.shape[0]
    n = m if n is None else int(n)
    cands = settings.lag_candidates(m)

    search = gcv_select(y, settings.trend_candidates(m), kern, n=n)
    trend = local_linear_fit(y, np.arange(1, m + 1) / n, search.selected, kern, n=n)
    res = residuals(y, trend)

    l0, l1 = settings.band_range(m)
    band = select_band(res, l0, l1, settings.alpha, kern, settings.block, cands)
    l_n = band.selected
    top = max(2 * l_n - 1, l_n) if settings.taper else l_n
    top = min(max(top, l_n + extra_lags), m - 1)
    curves = fit_lag_curves(res, range(top + 1), cands, kern)

    local = banded_local(curves, n, l_n, dim=m)
    stationary = banded_stationary(res, l_n)
    tapered = taper_local(curves, n, l_n, dim=m) if settings.taper else None
    return CovarianceEstimate(trend, search, res, band, curves, local, stationary, tapered)
