"""Kernel-weighted local linear regression on the design grid ``i/n``.

The smoother works on a window ``y_1..y_m`` observed at ``i/n`` (``m <= n``)
and is expressed through the equivalent kernel

    K*(u) = (M2 K(u) - M1 K(u) u) / (M0 M2 - M1^2),

so that the fitted level at ``t`` is a fixed linear combination of the
observations. Because those weights depend only on ``(m, n, tau, kernel)``
they are cached; the Monte Carlo drivers refit thousands of series on the
same grids.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AllDegenerate, DegenerateWindow

__all__ = [
    "KernelSpec",
    "BIWEIGHT",
    "EPANECHNIKOV",
    "get_kernel",
    "LocalLinearFit",
    "BandwidthSearch",
    "equivalent_weights",
    "smooth",
    "local_linear_fit",
    "hat_diagonal",
    "bandwidth_grid",
    "lag_bandwidth_grid",
    "design_smooth",
    "gcv_scores",
    "gcv_select",
    "gcv_select_many",
]


def _biweight(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) < 1.0, 0.9375 * (1.0 - u * u) ** 2, 0.0)


def _epanechnikov(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)


_KERNELS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "biweight": _biweight,
    "epanechnikov": _epanechnikov,
}


@dataclass(frozen=True)
class KernelSpec:
    """A symmetric density kernel supported on ``[-1, 1]``."""

    family: str = "biweight"

    def __post_init__(self):
        if self.family not in _KERNELS:
            raise ValueError(f"unknown kernel family {self.family!r}; choose from {sorted(_KERNELS)}")

    def __call__(self, u) -> np.ndarray:
        return _KERNELS[self.family](u)

    evaluate = __call__


BIWEIGHT = KernelSpec("biweight")
EPANECHNIKOV = KernelSpec("epanechnikov")


def get_kernel(kernel: KernelSpec | str | None) -> KernelSpec:
    if kernel is None:
        return BIWEIGHT
    if isinstance(kernel, KernelSpec):
        return kernel
    return KernelSpec(str(kernel).lower())


@dataclass
class LocalLinearFit:
    grid: np.ndarray
    level: np.ndarray
    slope: np.ndarray
    bandwidth: float
    hat_diagonal: np.ndarray
    n: int
    m: int


@dataclass
class BandwidthSearch:
    """GCV scores over a bandwidth grid; ``selected`` is the (first) argmin."""

    candidates: np.ndarray
    scores: np.ndarray
    selected: float = field(init=False)
    index: int = field(init=False)

    def __post_init__(self):
        self.candidates = np.asarray(self.candidates, dtype=float)
        self.scores = np.asarray(self.scores, dtype=float)
        finite = np.isfinite(self.scores)
        if not finite.any():
            raise AllDegenerate("no bandwidth candidate produced a finite GCV score")
        masked = np.where(finite, self.scores, np.inf)
        # np.argmin returns the first minimiser, i.e. the smallest bandwidth on ties
        self.index = int(np.argmin(masked))
        self.selected = float(self.candidates[self.index])


def _check_bandwidth(tau: float) -> float:
    tau = float(tau)
    if not tau > 0.0 or not np.isfinite(tau):
        raise ValueError(f"bandwidth must be positive and finite, got {tau}")
    return tau


def equivalent_weights(t, m: int, n: int, tau: float, kernel: KernelSpec | str | None = None,
                       slope: bool = False):
    """Weights ``w[g, i]`` with ``mu_hat(t_g) = sum_i w[g, i] * y_i``.

    Parameters
    ----------
    t : array_like
        Evaluation points.
    m, n : int
        Window length and design scale; design points are ``i/n``, ``i = 1..m``.
    tau : float
        Bandwidth.
    kernel : KernelSpec or str, optional
        Defaults to the biweight kernel.
    slope : bool
        Also return the weights of the derivative estimate.

    Raises
    ------
    DegenerateWindow
        If fewer than two design points receive positive weight at some ``t``.
    """
    kern = get_kernel(kernel)
    tau = _check_bandwidth(tau)
    if m < 2:
        raise DegenerateWindow(f"window of length {m} cannot support a linear fit")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.arange(1, m + 1) / n
    u = (x[None, :] - t[:, None]) / tau
    w = kern(u)
    support = np.count_nonzero(w > 0.0, axis=1)
    if np.any(support < 2):
        bad = t[support < 2][0]
        raise DegenerateWindow(
            f"fewer than 2 design points in [t - tau, t + tau] at t={bad:.6g} (tau={tau:.6g}, m={m}, n={n})"
        )
    wu = w * u
    s0 = w.sum(axis=1)
    s1 = wu.sum(axis=1)
    s2 = (wu * u).sum(axis=1)
    det = s0 * s2 - s1 * s1
    if np.any(det <= 0.0):
        bad = t[det <= 0.0][0]
        raise DegenerateWindow(f"singular local design at t={bad:.6g}")
    level = (s2[:, None] * w - s1[:, None] * wu) / det[:, None]
    if not slope:
        return level
    slope_w = (s0[:, None] * wu - s1[:, None] * w) / (det[:, None] * tau)
    return level, slope_w


@functools.lru_cache(maxsize=48)
def _design_weights(m: int, n: int, tau: float, family: str) -> np.ndarray:
    w = equivalent_weights(np.arange(1, m + 1) / n, m, n, tau, KernelSpec(family))
    w.setflags(write=False)
    return w


@functools.lru_cache(maxsize=24)
def _lattice_weights(m: int, n: int, tau: float, family: str) -> np.ndarray:
    # rows h = 0..2m evaluate at t = h / (2n): design points, midpoints and t = 0
    w = equivalent_weights(np.arange(2 * m + 1) / (2.0 * n), m, n, tau, KernelSpec(family))
    w.setflags(write=False)
    return w


def _lattice_index(t: np.ndarray, m: int, n: int):
    h = t * (2.0 * n)
    hi = np.rint(h)
    if np.all(np.abs(h - hi) <= 1e-8) and hi.min() >= 0 and hi.max() <= 2 * m:
        return hi.astype(int)
    return None


def smooth(values, t, tau: float, kernel: KernelSpec | str | None = None, n: int | None = None) -> np.ndarray:
    """Local linear level of ``values`` (one column per series) at the points ``t``.

    ``values`` has shape ``(m,)`` or ``(m, p)``. Points on the half-step lattice
    ``h/(2n)`` reuse cached weights.
    """
    kern = get_kernel(kernel)
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    n = m if n is None else int(n)
    tau = _check_bandwidth(tau)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    idx = _lattice_index(t, m, n)
    if idx is None:
        w = equivalent_weights(t, m, n, tau, kern)
    elif np.array_equal(idx, np.arange(2, 2 * m + 1, 2)):
        w = _design_weights(m, n, tau, kern.family)
    else:
        w = _lattice_weights(m, n, tau, kern.family)[idx]
    return w @ values


def hat_diagonal(m: int, n: int, tau: float, kernel: KernelSpec | str | None = None) -> np.ndarray:
    """Diagonal ``T_ii`` of the smoother matrix at the design points."""
    kern = get_kernel(kernel)
    return np.diagonal(_design_weights(int(m), int(n), _check_bandwidth(tau), kern.family)).copy()


def local_linear_fit(y, grid, tau: float, kernel: KernelSpec | str | None = None,
                     n: int | None = None) -> LocalLinearFit:
    """Weighted least-squares intercept and slope at every grid point.

    ``y`` is the window ``y_1..y_m`` observed at ``i/n``; ``n`` defaults to ``m``.
    """
    kern = get_kernel(kernel)
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("y must be one-dimensional")
    m = y.shape[0]
    n = m if n is None else int(n)
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    level_w, slope_w = equivalent_weights(grid, m, n, tau, kern, slope=True)
    return LocalLinearFit(
        grid=grid,
        level=level_w @ y,
        slope=slope_w @ y,
        bandwidth=float(tau),
        hat_diagonal=hat_diagonal(m, n, tau, kern),
        n=n,
        m=m,
    )


def bandwidth_grid(m: int, count: int = 20, lower: float | None = None, upper: float = 0.5) -> np.ndarray:
    """Log-spaced candidates on ``[max(4/m, lower), upper]``.

    ``lower=None`` uses ``m^(-1/3)``, the undersmoothing boundary for a
    trend fitted under serially dependent errors.
    """
    lower = m ** (-1.0 / 3.0) if lower is None else lower
    lo = max(4.0 / m, lower)
    if lo >= upper:
        return np.array([upper])
    return np.geomspace(lo, upper, count)


def lag_bandwidth_grid(m: int, count: int = 20, lower: float = 0.2, upper: float = 1.0) -> np.ndarray:
    """Default candidates for lag-product and long-run-variance curves."""
    return bandwidth_grid(m, count, lower, upper)


def design_smooth(Y, n: int, tau: float, kernel: KernelSpec | str | None = None):
    """Fitted values at the design points and the smoother diagonal.

    At ``t = i/n`` the kernel weight of observation ``j`` depends on ``j - i``
    only, so every moment sum is a discrete convolution; this avoids the
    ``m x m`` weight matrix.
    """
    kern = get_kernel(kernel)
    tau = _check_bandwidth(tau)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    m = Y.shape[0]
    w = int(min(m - 1, math.floor(n * tau)))
    offsets = np.arange(w, -w - 1, -1)
    u = offsets / (n * tau)
    k = kern(u)
    ku = k * u

    def corr(v, taps):
        return np.convolve(v, taps)[w: w + m]

    ones = np.ones(m)
    support = corr(ones, (k > 0).astype(float))
    if np.any(support < 1.5):
        raise DegenerateWindow(f"fewer than 2 design points within tau={tau:.6g} of some design point")
    s0, s1, s2 = corr(ones, k), corr(ones, ku), corr(ones, ku * u)
    det = s0 * s2 - s1 * s1
    if np.any(det <= 0.0):
        raise DegenerateWindow(f"singular local design for tau={tau:.6g}")
    fitted = np.empty_like(Y)
    for c in range(Y.shape[1]):
        fitted[:, c] = (s2 * corr(Y[:, c], k) - s1 * corr(Y[:, c], ku)) / det
    hat = s2 * float(kern(0.0)) / det
    return fitted, hat


def gcv_scores(Y, candidates: Sequence[float], kernel: KernelSpec | str | None = None,
               n: int | None = None) -> np.ndarray:
    """GCV objective for each candidate (rows) and each column of ``Y``.

    The objective is ``n^-1 RSS / (1 - tr(T)/n)^2``. Candidates whose fit is
    degenerate, or whose denominator vanishes, score ``inf``.
    """
    kern = get_kernel(kernel)
    Y = np.asarray(Y, dtype=float)
    single = Y.ndim == 1
    if single:
        Y = Y[:, None]
    m = Y.shape[0]
    n = m if n is None else int(n)
    out = np.full((len(candidates), Y.shape[1]), np.inf)
    for c, tau in enumerate(candidates):
        try:
            fitted, hat = design_smooth(Y, n, tau, kern)
        except DegenerateWindow:
            continue
        denom = (1.0 - hat.sum() / n) ** 2
        if denom == 0.0:
            continue
        resid = Y - fitted
        out[c] = np.einsum("ij,ij->j", resid, resid) / n / denom
    return out[:, 0] if single else out


def gcv_select(y, candidates: Sequence[float] | None = None, kernel: KernelSpec | str | None = None,
               n: int | None = None) -> BandwidthSearch:
    """Bandwidth minimising the GCV objective for a single series."""
    y = np.asarray(y, dtype=float)
    if candidates is None:
        candidates = bandwidth_grid(y.shape[0])
    return BandwidthSearch(np.asarray(candidates, dtype=float), gcv_scores(y, candidates, kernel, n))


def gcv_select_many(Y, candidates: Sequence[float] | None = None, kernel: KernelSpec | str | None = None,
                    n: int | None = None) -> list[BandwidthSearch]:
    """Column-wise :func:`gcv_select`, sharing one smoother per candidate."""
    Y = np.asarray(Y, dtype=float)
    if candidates is None:
        candidates = bandwidth_grid(Y.shape[0])
    scores = gcv_scores(Y, candidates, kernel, n)
    return [BandwidthSearch(np.asarray(candidates, dtype=float), scores[:, j]) for j in range(Y.shape[1])]
