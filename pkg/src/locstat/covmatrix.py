"""Banded covariance estimators, the eigenvalue floor and the operator norm."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import linalg

from .autocov import LagCurve, ResidualSeries
from .errors import EigenFailure, MissingMidpoint

__all__ = [
    "BandedCovariance",
    "SpectralFloorParams",
    "taper_weight",
    "banded_stationary",
    "banded_local",
    "taper_local",
    "floor_params",
    "pd_correct",
    "operator_norm",
]

FLAVORS = ("stationary", "local", "tapered", "pd_corrected")


@dataclass(frozen=True)
class BandedCovariance:
    """Symmetric ``dim x dim`` matrix.

    Banded flavours keep one array per diagonal (``diagonals[d]`` has length
    ``dim - d``); the pd-corrected flavour is dense-backed.
    """

    dim: int
    half_width: int
    flavor: str
    diagonals: tuple[np.ndarray, ...] | None = None
    dense: np.ndarray | None = None

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if (self.diagonals is None) == (self.dense is None):
            raise ValueError("exactly one of diagonals / dense must be given")

    @property
    def width(self) -> int:
        """Largest ``|i - j|`` that may hold a nonzero entry."""
        if self.dense is not None:
            return self.dim - 1
        return len(self.diagonals) - 1

    def entry(self, i: int, j: int) -> float:
        """Entry at 1-based position ``(i, j)``."""
        if self.dense is not None:
            return float(self.dense[i - 1, j - 1])
        d = abs(i - j)
        if d > self.width:
            return 0.0
        return float(self.diagonals[d][min(i, j) - 1])

    def to_dense(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense.copy()
        A = np.zeros((self.dim, self.dim))
        idx = np.arange(self.dim)
        for d, diag in enumerate(self.diagonals):
            A[idx[: self.dim - d], idx[d:]] = diag
            A[idx[d:], idx[: self.dim - d]] = diag
        return A

    def __array__(self, dtype=None, copy=None):
        A = self.to_dense()
        return A if dtype is None else A.astype(dtype)

    def write_csv(self, path_or_file) -> None:
        """Triplets ``i,j,value`` (1-based, both triangles) for banded flavours;
        row-major dense rows for the pd-corrected flavour."""
        if not hasattr(path_or_file, "write"):
            with open(path_or_file, "w", newline="") as fh:
                return self.write_csv(fh)
        writer = csv.writer(path_or_file, lineterminator="\n")
        if self.dense is not None:
            for row in self.dense:
                writer.writerow([repr(float(v)) for v in row])
            return
        writer.writerow(["i", "j", "value"])
        for i in range(1, self.dim + 1):
            for j in range(max(1, i - self.width), min(self.dim, i + self.width) + 1):
                writer.writerow([i, j, repr(self.entry(i, j))])


@dataclass(frozen=True)
class SpectralFloorParams:
    beta: float
    gamma0_integral: float
    m: int
    multiplier: float = 10.0

    @property
    def floor(self) -> float:
        return self.multiplier * self.gamma0_integral / self.m**self.beta


def taper_weight(x) -> np.ndarray:
    """Trapezoid taper: 1 on ``|x| < 1``, ``2 - |x|`` on ``[1, 2]``, 0 beyond."""
    a = np.abs(np.asarray(x, dtype=float))
    return np.where(a < 1.0, 1.0, np.clip(2.0 - a, 0.0, 1.0))


def banded_stationary(res: ResidualSeries, l_n: int) -> BandedCovariance:
    """Toeplitz band of sample autocovariances ``(m-d)^-1 sum_s e_s e_{s+d}``."""
    e = res.values
    m = e.shape[0]
    if not 0 <= l_n < m:
        raise ValueError(f"band half-width must satisfy 0 <= l_n < {m}")
    diags = tuple(np.full(m - d, np.dot(e[: m - d], e[d:]) / (m - d)) for d in range(l_n + 1))
    return BandedCovariance(m, int(l_n), "stationary", diags)


def _midpoint_diagonals(curves: Mapping[int, LagCurve], dim: int, n: int, max_lag: int,
                        weights=None) -> tuple[np.ndarray, ...]:
    diags = []
    for d in range(max_lag + 1):
        w = 1.0 if weights is None else float(weights[d])
        i = np.arange(1, dim - d + 1)
        if w == 0.0:
            diags.append(np.zeros(dim - d))
            continue
        if d not in curves:
            raise MissingMidpoint(f"no curve supplied for lag {d}")
        diags.append(w * curves[d].at((2 * i + d) / (2.0 * n)))
    return tuple(diags)


def banded_local(curves: Mapping[int, LagCurve], n: int, l_n: int, dim: int | None = None) -> BandedCovariance:
    """Entry ``(i, j)`` is ``gamma_{|i-j|}((i+j)/(2n))`` inside the band, 0 outside.

    ``dim`` defaults to ``n``; pass the window length ``m`` for the
    ``m x m`` matrix of a prefix.
    """
    dim = n if dim is None else int(dim)
    if not 0 <= l_n < dim:
        raise ValueError(f"band half-width must satisfy 0 <= l_n < {dim}")
    return BandedCovariance(dim, int(l_n), "local", _midpoint_diagonals(curves, dim, n, l_n))


def taper_local(curves: Mapping[int, LagCurve], n: int, l_n: int, dim: int | None = None) -> BandedCovariance:
    """Tapered variant: lag ``d`` scaled by ``taper_weight(d / l_n)``; needs lags up to ``2 l_n - 1``."""
    dim = n if dim is None else int(dim)
    if l_n == 0:
        return BandedCovariance(dim, 0, "tapered", _midpoint_diagonals(curves, dim, n, 0))
    max_lag = min(2 * l_n - 1, dim - 1)
    weights = taper_weight(np.arange(max_lag + 1) / l_n)
    return BandedCovariance(dim, int(l_n), "tapered", _midpoint_diagonals(curves, dim, n, max_lag, weights))


def floor_params(gamma0: LagCurve, m: int, beta: float = 0.5, multiplier: float = 10.0) -> SpectralFloorParams:
    """Eigenvalue floor ``multiplier * int_0^{m/n} gamma_0 / m^beta`` (trapezoid on ``j/n``)."""
    n = gamma0.n
    t = np.arange(m + 1) / n
    vals = gamma0.at(t)
    integral = float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(t)))
    return SpectralFloorParams(float(beta), integral, int(m), float(multiplier))


def pd_correct(A, params: SpectralFloorParams | float) -> BandedCovariance:
    """Raise every eigenvalue below the floor to the floor, keeping eigenvectors."""
    floor = params.floor if isinstance(params, SpectralFloorParams) else float(params)
    if not np.isfinite(floor):
        raise ValueError("floor must be finite")
    dense = np.asarray(A, dtype=float)
    half_width = A.half_width if isinstance(A, BandedCovariance) else dense.shape[0] - 1
    try:
        vals, vecs = linalg.eigh(dense, check_finite=True, driver="evd")
    except (linalg.LinAlgError, ValueError) as exc:
        raise EigenFailure(str(exc)) from exc
    out = (vecs * np.maximum(vals, floor)) @ vecs.T
    out = 0.5 * (out + out.T)
    return BandedCovariance(dense.shape[0], half_width, "pd_corrected", dense=out)


def _power_norm(A: np.ndarray, tol: float = 1e-10, maxiter: int = 10000) -> float:
    rng = np.random.default_rng(0)
    x = rng.standard_normal(A.shape[1])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(maxiter):
        y = A.T @ (A @ x)
        new = np.linalg.norm(y)
        if new == 0.0:
            return 0.0
        x = y / new
        if abs(new - lam) <= tol * new:
            lam = new
            break
        lam = new
    return float(np.sqrt(lam))


def operator_norm(A) -> float:
    """Largest singular value of ``A``."""
    dense = np.asarray(A, dtype=float)
    if dense.ndim != 2:
        raise ValueError("operator_norm expects a matrix")
    if dense.size == 0:
        return 0.0
    symmetric = dense.shape[0] == dense.shape[1] and np.array_equal(dense, dense.T)
    if dense.shape[0] > 2000:
        return _power_norm(dense)
    if symmetric:
        return float(np.max(np.abs(linalg.eigvalsh(dense))))
    return float(linalg.svdvals(dense)[0])
