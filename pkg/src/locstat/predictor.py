"""Estimated best linear one-step predictor and rolling backtests.

With ``w = (a_m, ..., a_1)`` solving ``Sigma_pd w = g`` the forecast is

    X_pred = a_{m+1} + sum_s a_{m+1-s} X_s,
    a_{m+1} = mu_hat(m/n) - sum_s a_{m+1-s} mu_hat(s/n),

i.e. the trend at the window end plus a weighted sum of detrended
observations. The right-hand side ``g`` evaluates lag ``s`` at
``(2m - s + 1)/(2n)``, half a grid step before the midpoint
``(2m + 2 - s)/(2n)`` of the pair ``(m+1, m+1-s)``; the printed
evaluation point is kept.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import linalg

from .autocov import LagCurve
from .covmatrix import BandedCovariance, floor_params, pd_correct
from .errors import LengthMismatch, SolveFailure
from .estimation import CovarianceEstimate, EstimationSettings, estimate_covariance

__all__ = [
    "PredictorCoefficients",
    "ForecastResult",
    "BacktestReport",
    "gamma_vector",
    "solve_weights",
    "fit_coefficients",
    "predict_one",
    "rolling_backtest",
    "PREDICTION_SETTINGS",
]

log = logging.getLogger(__name__)

PREDICTION_SETTINGS = EstimationSettings(l0=None, l1=None)


@dataclass
class PredictorCoefficients:
    window: int
    n: int
    intercept: float
    weights: np.ndarray
    gamma_vector: np.ndarray
    band: int
    trend_at_window_end: float
    floor: float
    covariance: BandedCovariance | None = None
    estimate: CovarianceEstimate | None = field(default=None, repr=False)


@dataclass
class ForecastResult:
    point: float
    trend_at_window_end: float
    standardization: float | None = None


@dataclass
class BacktestReport:
    steps: np.ndarray
    predictions: np.ndarray
    realized: np.ndarray
    standardized_errors: np.ndarray | None = None
    failures: dict[int, str] = field(default_factory=dict)

    @property
    def errors(self) -> np.ndarray:
        return self.realized - self.predictions

    @property
    def mse(self) -> float:
        e = self.errors
        e = e[np.isfinite(e)]
        return float(np.mean(e**2)) if e.size else float("nan")

    def __len__(self):
        return len(self.steps)

    def write_csv(self, path_or_file) -> None:
        """Columns ``step, prediction, realized, error, standardized_error``."""
        if not hasattr(path_or_file, "write"):
            with open(path_or_file, "w", newline="") as fh:
                return self.write_csv(fh)
        std = self.standardized_errors
        w = csv.writer(path_or_file, lineterminator="\n")
        w.writerow(["step", "prediction", "realized", "error", "standardized_error"])
        for j, step in enumerate(self.steps):
            z = "" if std is None or not np.isfinite(std[j]) else repr(float(std[j]))
            pred = self.predictions[j]
            w.writerow([int(step),
                        repr(float(pred)) if np.isfinite(pred) else "",
                        repr(float(self.realized[j])),
                        repr(float(self.errors[j])) if np.isfinite(pred) else "",
                        z])


def gamma_vector(curves: Mapping[int, LagCurve], m: int, n: int, l_n: int) -> np.ndarray:
    """``(g_m, ..., g_1)`` with ``g_s = gamma_s((2m - s + 1)/(2n))`` for ``s <= l_n``, else 0."""
    g = np.zeros(m)
    for s in range(1, min(l_n, m) + 1):
        g[m - s] = curves[s].at((2 * m - s + 1) / (2.0 * n))
    return g


def solve_weights(sigma, g) -> np.ndarray:
    """Solve the symmetric positive-definite system ``sigma w = g``."""
    A = np.asarray(sigma, dtype=float)
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=True)
        w = linalg.cho_solve(factor, g)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SolveFailure(f"prediction system is not numerically positive definite: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise SolveFailure("non-finite prediction weights")
    return w


def fit_coefficients(y, n: int | None = None, settings: EstimationSettings | None = None) -> PredictorCoefficients:
    """Fit the predictor of ``X_{m+1}`` from the window ``y_1..y_m`` on design scale ``n``."""
    settings = settings or PREDICTION_SETTINGS
    y = np.asarray(y, dtype=float)
    m = y.shape[0]
    if m < 10:
        raise ValueError(f"window must hold at least 10 observations, got {m}")
    n = m if n is None else int(n)
    est = estimate_covariance(y, n, settings)
    l_n = est.l_n
    sigma = est.tapered if settings.taper else est.local
    params = floor_params(est.curves[0], m, settings.beta, settings.floor_multiplier)
    sigma_pd = pd_correct(sigma, params)
    g = gamma_vector(est.curves, m, n, l_n)
    w = solve_weights(sigma_pd.dense, g) if l_n > 0 else np.zeros(m)
    mu = est.trend.level
    intercept = float(mu[-1] - np.dot(w, mu))
    return PredictorCoefficients(m, n, intercept, w, g, l_n, float(mu[-1]), params.floor, sigma_pd, est)


def predict_one(coeffs: PredictorCoefficients, y, sigma: Callable | float | None = None) -> ForecastResult:
    """``intercept + weights . y``; ``sigma`` (function of t or value) records ``sigma((m+1)/n)``."""
    y = np.asarray(y, dtype=float)
    if y.shape != (coeffs.window,):
        raise LengthMismatch(f"expected {coeffs.window} observations, got {y.shape[0]}")
    point = coeffs.intercept + float(np.dot(coeffs.weights, y))
    scale = None
    if sigma is not None:
        scale = float(sigma((coeffs.window + 1) / coeffs.n)) if callable(sigma) else float(sigma)
    return ForecastResult(point, coeffs.trend_at_window_end, scale)


def rolling_backtest(y, start: int, settings: EstimationSettings | None = None, n: int | None = None,
                     sigma: Callable | None = None) -> BacktestReport:
    """Predict ``y_s`` from ``y_1..y_{s-1}`` for every ``s`` in ``start..T``.

    ``start`` is 1-based and must be at least 11. The design scale ``n``
    defaults to the series length ``T``. Failing steps are logged and
    recorded with a NaN prediction.
    """
    y = np.asarray(y, dtype=float)
    T = y.shape[0]
    if start < 11:
        raise ValueError("start must be at least 11 (windows of at least 10 observations)")
    if start > T:
        raise ValueError(f"start {start} is beyond the series length {T}")
    n = T if n is None else int(n)
    steps = np.arange(start, T + 1)
    preds = np.full(steps.size, np.nan)
    std = np.full(steps.size, np.nan) if sigma is not None else None
    failures: dict[int, str] = {}
    for j, s in enumerate(steps):
        m = s - 1
        try:
            coeffs = fit_coefficients(y[:m], n, settings)
            fc = predict_one(coeffs, y[:m], sigma)
        except (ArithmeticError, ValueError) as exc:
            log.warning("backtest step %d failed: %s", s, exc)
            failures[int(s)] = f"{type(exc).__name__}: {exc}"
            continue
        preds[j] = fc.point
        if std is not None:
            std[j] = (y[s - 1] - fc.point) / fc.standardization
    return BacktestReport(steps, preds, y[steps - 1].copy(), std, failures)
