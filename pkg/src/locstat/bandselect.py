"""Long-run variance of lagged products and the data-driven band width.

For lag ``k`` the block-difference statistic compares adjacent partial sums
of ``e_i e_{i+k}`` over blocks of length ``b``,

    D_j = (S(j-b+1, j) - S(j+1, j+b)) / b,

and ``g2(t) = sum_j (b/2) D_j^2 w(t, j)`` smooths their squares with
normalised kernel weights. The band width ``l_n`` is the largest lag in
``[l0, l1]`` whose normalised sample autocovariance exceeds
``kappa(alpha) * sigma_l``; ``l0 - 1`` when none does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .autocov import ResidualSeries, lag_products
from .errors import BlockTooLarge, DegenerateWindow, DomainError, GridMismatch
from .smoothing import KernelSpec, lag_bandwidth_grid, gcv_select_many, get_kernel

__all__ = [
    "LongRunVarianceCurve",
    "BandSelection",
    "default_block",
    "longrun_variance",
    "sigma_hat",
    "normal_quantile",
    "threshold_multiplier",
    "select_band",
]


@dataclass
class LongRunVarianceCurve:
    lag: int
    block: int
    bandwidth: float
    grid: np.ndarray
    values: np.ndarray
    m: int
    n: int


@dataclass
class BandSelection:
    l0: int
    l1: int
    alpha: float
    kappa: float
    lags: np.ndarray
    statistics: np.ndarray
    sigmas: np.ndarray
    bandwidths: np.ndarray
    selected: int = field(init=False)

    def __post_init__(self):
        hit = (self.sigmas > 0.0) & (self.statistics >= self.kappa * self.sigmas)
        self.selected = int(self.lags[hit].max()) if hit.any() else self.l0 - 1

    @property
    def exceedances(self) -> np.ndarray:
        return self.lags[(self.sigmas > 0.0) & (self.statistics >= self.kappa * self.sigmas)]


def default_block(m: int) -> int:
    """Block length ``ceil(2 m^(1/3))``."""
    return int(math.ceil(2.0 * m ** (1.0 / 3.0)))


def _block_differences(products: np.ndarray, b: int) -> np.ndarray:
    # products are indexed i = 1..m and vanish outside; pad b zeros on both sides
    m = products.shape[0]
    padded = np.concatenate([np.zeros(b), products, np.zeros(b)])
    csum = np.concatenate([[0.0], np.cumsum(padded)])
    j = np.arange(1, m + 1) + b  # position of index j inside ``padded`` (1-based in csum)
    left = csum[j] - csum[j - b]
    right = csum[j + b] - csum[j]
    return (left - right) / b


def longrun_variance(res: ResidualSeries, k: int, b: int | None = None, bandwidth: float | None = None,
                     kernel: KernelSpec | str | None = None, grid=None) -> LongRunVarianceCurve:
    """Estimate the long-run variance curve of ``e_i e_{i+k}``.

    Parameters
    ----------
    res : ResidualSeries
    k : int
        Lag of the product series.
    b : int, optional
        Block length, default :func:`default_block`.
    bandwidth : float, optional
        Smoothing bandwidth of the weights ``w(t, j)``. When omitted it is
        chosen by GCV on the product series ``e_i e_{i+k}``.
    grid : array_like, optional
        Evaluation points, default ``j/n`` for ``j = 0..min(m, n-k)``.

    Raises
    ------
    BlockTooLarge
        If ``b > m/4``.
    """
    kern = get_kernel(kernel)
    m, n = res.m, res.n
    b = default_block(m) if b is None else int(b)
    if b < 2:
        raise ValueError("block length must be at least 2")
    if b > m / 4:
        raise BlockTooLarge(f"block length {b} exceeds m/4 = {m / 4:g}")
    products = lag_products(res, 0, k)
    if bandwidth is None:
        bandwidth = gcv_select_many(products[:, None], lag_bandwidth_grid(m), kern, n=n)[0].selected
    if grid is None:
        grid = np.arange(min(m, n - k) + 1) / n
    grid = np.atleast_1d(np.asarray(grid, dtype=float))

    delta = _block_differences(products, b)
    terms = 0.5 * b * delta**2
    t_eval = np.clip(grid, b / n, (m - b) / n)
    x = np.arange(1, m + 1) / n
    w = kern((x[None, :] - t_eval[:, None]) / bandwidth)
    total = w.sum(axis=1)
    if np.any(total <= 0.0):
        raise DegenerateWindow(f"no design point within bandwidth {bandwidth:g} of some grid point")
    values = (w @ terms) / total
    return LongRunVarianceCurve(int(k), b, float(bandwidth), grid, values, m, n)


def sigma_hat(curve: LongRunVarianceCurve, m: int | None = None, n: int | None = None,
              k: int | None = None) -> float:
    """Square root of the trapezoid integral of ``g2`` over ``[0, min(m, n-k)/n]``."""
    m = curve.m if m is None else int(m)
    n = curve.n if n is None else int(n)
    k = curve.lag if k is None else int(k)
    upper = min(m, n - k) / n
    g = curve.grid
    tol = 1e-9
    if g[0] > tol or g[-1] < upper - tol:
        raise GridMismatch(f"curve grid [{g[0]:g}, {g[-1]:g}] does not cover [0, {upper:g}]")
    keep = g <= upper + tol
    integral = np.trapezoid(curve.values[keep], g[keep]) if hasattr(np, "trapezoid") else \
        np.trapz(curve.values[keep], g[keep])
    return math.sqrt(max(float(integral), 0.0))


def normal_quantile(p: float) -> float:
    """Inverse standard normal distribution function."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    return float(special.ndtri(p))


def threshold_multiplier(alpha: float, l0: int, l1: int) -> float:
    """``kappa(alpha)``: the ``(1 + (1-alpha)^(1/(l1-l0+1)))/2`` normal quantile."""
    level = 0.5 * (1.0 + (1.0 - alpha) ** (1.0 / (l1 - l0 + 1)))
    return normal_quantile(level)


def select_band(res: ResidualSeries, l0: int = 1, l1: int = 6, alpha: float = 0.01,
                kernel: KernelSpec | str | None = None, block: int | None = None,
                candidates=None) -> BandSelection:
    """Largest lag in ``[l0, l1]`` with a significant sample autocovariance."""
    m, n = res.m, res.n
    if not 1 <= l0 <= l1 < m:
        raise ValueError(f"need 1 <= l0 <= l1 < m, got l0={l0}, l1={l1}, m={m}")
    kern = get_kernel(kernel)
    lags = np.arange(l0, l1 + 1)
    products = np.column_stack([lag_products(res, 0, int(l)) for l in lags])
    if candidates is None:
        candidates = lag_bandwidth_grid(m)
    searches = gcv_select_many(products, candidates, kern, n=n)
    stats = np.abs(products.sum(axis=0)) / math.sqrt(n)
    sigmas = np.empty(len(lags))
    bws = np.empty(len(lags))
    for j, l in enumerate(lags):
        curve = longrun_variance(res, int(l), block, searches[j].selected, kern)
        sigmas[j] = sigma_hat(curve)
        bws[j] = curve.bandwidth
    return BandSelection(int(l0), int(l1), float(alpha), threshold_multiplier(alpha, l0, l1),
                         lags, stats, sigmas, bws)
