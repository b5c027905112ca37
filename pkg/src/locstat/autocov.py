"""Residuals of the trend fit and local linear estimates of the lag curves.

For an even lag ``k`` the curve ``gamma_k(t)`` is the local linear fit of the
product series ``e[i - k/2] * e[i + k/2]``; for an odd lag it is the average
of the two fits obtained from the products shifted by ``(k-1)/2, (k+1)/2``
and ``(k+1)/2, (k-1)/2``. Residuals outside the window ``1..m`` count as 0,
and those padded products stay in the fit, which biases the curves toward
zero within ``k/2`` design points of either edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import GridMismatch, MissingMidpoint
from .smoothing import (
    BandwidthSearch,
    KernelSpec,
    LocalLinearFit,
    lag_bandwidth_grid,
    gcv_select_many,
    get_kernel,
    smooth,
)

__all__ = [
    "ResidualSeries",
    "LagCurve",
    "residuals",
    "lag_products",
    "autocov_at",
    "autocov_bandwidth",
    "fit_lag_curves",
    "lattice_grid",
]


@dataclass(frozen=True)
class ResidualSeries:
    """Residuals ``e_1..e_m`` on the design scale ``n``; zero outside the window."""

    values: np.ndarray
    n: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("residuals must be one-dimensional")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "n", int(self.n))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def window(self) -> tuple[int, int]:
        return (1, self.m)

    def __len__(self):
        return self.m

    def at(self, i) -> np.ndarray | float:
        """Residual at 1-based index ``i`` (scalar or array), 0 outside ``1..m``."""
        i = np.asarray(i)
        inside = (i >= 1) & (i <= self.m)
        out = np.where(inside, self.values[np.clip(i, 1, self.m) - 1], 0.0)
        return float(out) if out.ndim == 0 else out

    def scaled(self, c: float) -> "ResidualSeries":
        return ResidualSeries(self.values * c, self.n)

    def reversed(self) -> "ResidualSeries":
        return ResidualSeries(self.values[::-1].copy(), self.n)


@dataclass
class LagCurve:
    lag: int
    grid: np.ndarray
    values: np.ndarray
    bandwidth: float
    parity_parts: tuple[np.ndarray, np.ndarray] | None = None
    n: int | None = None

    def at(self, t) -> np.ndarray | float:
        """Values at points ``t`` that lie on the evaluation grid."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        pos = np.searchsorted(self.grid, t_arr)
        pos = np.clip(pos, 0, len(self.grid) - 1)
        left = np.clip(pos - 1, 0, len(self.grid) - 1)
        pick = np.where(np.abs(self.grid[left] - t_arr) < np.abs(self.grid[pos] - t_arr), left, pos)
        tol = 1e-9 * max(1.0, float(np.max(np.abs(self.grid))))
        miss = np.abs(self.grid[pick] - t_arr) > tol
        if np.any(miss):
            raise MissingMidpoint(f"lag-{self.lag} curve has no value at t={t_arr[miss][0]:.10g}")
        out = self.values[pick]
        return float(out[0]) if np.ndim(t) == 0 else out


def lattice_grid(m: int, n: int) -> np.ndarray:
    """All points ``h/(2n)``, ``h = 0..2m``: design points, midpoints ``(i+j)/(2n)`` and 0."""
    return np.arange(2 * m + 1) / (2.0 * n)


def residuals(y, fit: LocalLinearFit) -> ResidualSeries:
    """``e_i = y_i - mu_hat(i/n)`` for the window ``1..m``."""
    y = np.asarray(y, dtype=float)
    m, n = y.shape[0], fit.n
    design = np.arange(1, m + 1) / n
    pos = np.searchsorted(fit.grid, design - 1e-12)
    if np.any(pos >= len(fit.grid)) or not np.allclose(fit.grid[np.minimum(pos, len(fit.grid) - 1)], design,
                                                         rtol=0, atol=1e-12):
        raise GridMismatch("fit grid does not cover the design points i/n, i = 1..m")
    return ResidualSeries(y - fit.level[pos], n)


def lag_products(res: ResidualSeries, left: int, right: int) -> np.ndarray:
    """Products ``e[i - left] * e[i + right]`` for ``i = 1..m`` with zero padding."""
    i = np.arange(1, res.m + 1)
    return res.at(i - left) * res.at(i + right)


def _parts(res: ResidualSeries, k: int) -> list[np.ndarray]:
    if k % 2 == 0:
        return [lag_products(res, k // 2, k // 2)]
    return [lag_products(res, (k - 1) // 2, (k + 1) // 2), lag_products(res, (k + 1) // 2, (k - 1) // 2)]


def _check_lag(res: ResidualSeries, k: int) -> int:
    k = int(k)
    if k < 0 or k >= res.n:
        raise ValueError(f"lag must satisfy 0 <= k < n, got {k}")
    return k


def autocov_at(res: ResidualSeries, k: int, grid, b: float, kernel: KernelSpec | str | None = None) -> LagCurve:
    """Local linear estimate of the lag-``k`` autocovariance curve on ``grid``."""
    k = _check_lag(res, k)
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    parts = _parts(res, k)
    fits = smooth(np.column_stack(parts), grid, b, kernel, n=res.n)
    if k % 2 == 0:
        return LagCurve(k, grid, fits[:, 0], float(b), None, res.n)
    plus, minus = fits[:, 0], fits[:, 1]
    return LagCurve(k, grid, 0.5 * (plus + minus), float(b), (plus, minus), res.n)


def autocov_bandwidth(res: ResidualSeries, k: int, candidates: Sequence[float] | None = None,
                      kernel: KernelSpec | str | None = None) -> BandwidthSearch:
    """GCV bandwidth for lag ``k``; odd lags search on the "+" product series only."""
    k = _check_lag(res, k)
    if candidates is None:
        candidates = lag_bandwidth_grid(res.m)
    return gcv_select_many(_parts(res, k)[0][:, None], candidates, kernel, n=res.n)[0]


def fit_lag_curves(res: ResidualSeries, lags: Iterable[int], candidates: Sequence[float] | None = None,
                   kernel: KernelSpec | str | None = None, grid=None) -> dict[int, LagCurve]:
    """Per-lag GCV bandwidths and curves for several lags at once.

    ``grid`` defaults to :func:`lattice_grid`, which contains every midpoint
    needed by the banded estimators and the prediction vector.
    """
    kern = get_kernel(kernel)
    lags = [_check_lag(res, k) for k in lags]
    if not lags:
        return {}
    if candidates is None:
        candidates = lag_bandwidth_grid(res.m)
    if grid is None:
        grid = lattice_grid(res.m, res.n)
    grid = np.asarray(grid, dtype=float)
    searches = gcv_select_many(np.column_stack([_parts(res, k)[0] for k in lags]), candidates, kern, n=res.n)
    by_bw: dict[float, list[int]] = {}
    for k, s in zip(lags, searches):
        by_bw.setdefault(s.selected, []).append(k)
    curves: dict[int, LagCurve] = {}
    for b, ks in by_bw.items():
        cols, owners = [], []
        for k in ks:
            for p in _parts(res, k):
                cols.append(p)
                owners.append(k)
        fitted = smooth(np.column_stack(cols), grid, b, kern, n=res.n)
        for k in ks:
            idx = [j for j, o in enumerate(owners) if o == k]
            if len(idx) == 1:
                curves[k] = LagCurve(k, grid, fitted[:, idx[0]], b, None, res.n)
            else:
                plus, minus = fitted[:, idx[0]], fitted[:, idx[1]]
                curves[k] = LagCurve(k, grid, 0.5 * (plus + minus), b, (plus, minus), res.n)
    return {k: curves[k] for k in lags}
