"""Exact simulation of the benchmark processes and their true covariances.

Linear kinds are realised through the frozen-time moving-average form

    eps_i = sigma(i/n) * sum_{j=0}^{J} c_j(i/n) e_{i-j},

where ``c_j(t)`` are the power-series coefficients of
``prod_s (1 - a_s(t) z)^(-1)`` (autoregressive kinds) or of
``prod_s (1 - a_s(t) z)`` (moving-average kinds). All observations share one
innovation stream, so cross-time covariances come out right; ``J`` extra
pre-sample innovations stand in for the infinite past.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import stats

from .errors import Unsupported, UnstableFilter

__all__ = [
    "InnovationLaw",
    "ProcessSpec",
    "TrueCovariance",
    "KINDS",
    "make_rng",
    "mean_function",
    "sample_innovations",
    "simulate_path",
    "true_covariance",
    "frozen_autocov",
    "tvar6_coefficients",
    "tvar6_sigma",
]

KINDS = ("model_a", "model_b", "model_c", "model_d", "tvar6", "tvma6")
_ALIASES = {"a": "model_a", "b": "model_b", "c": "model_c", "d": "model_d"}
_ABS_NORMAL_MEAN = math.sqrt(2.0 / math.pi)


def make_rng(seed=None, replication: int | None = None) -> np.random.Generator:
    """Generator for stream ``(seed, replication)``; passes Generators through."""
    if isinstance(seed, np.random.Generator):
        return seed
    if replication is None:
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replication)]))


@dataclass(frozen=True)
class InnovationLaw:
    """Unit-variance, zero-mean innovation distribution."""

    family: str = "std_normal"

    FAMILIES = ("std_normal", "std_t6", "std_chisq5", "std_chisq6")

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise ValueError(f"unknown innovation family {self.family!r}")

    def sample(self, count: int, rng) -> np.ndarray:
        rng = make_rng(rng)
        if self.family == "std_normal":
            return rng.standard_normal(count)
        if self.family == "std_t6":
            return rng.standard_t(6, count) / math.sqrt(1.5)
        dof = 5 if self.family == "std_chisq5" else 6
        return (rng.chisquare(dof, count) - dof) / math.sqrt(2.0 * dof)

    def ppf(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.family == "std_normal":
            return stats.norm.ppf(q)
        if self.family == "std_t6":
            return stats.t.ppf(q, 6) / math.sqrt(1.5)
        dof = 5 if self.family == "std_chisq5" else 6
        return (stats.chi2.ppf(q, dof) - dof) / math.sqrt(2.0 * dof)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family == "std_normal":
            return stats.norm.cdf(x)
        if self.family == "std_t6":
            return stats.t.cdf(x * math.sqrt(1.5), 6)
        dof = 5 if self.family == "std_chisq5" else 6
        return stats.chi2.cdf(x * math.sqrt(2.0 * dof) + dof, dof)


def sample_innovations(law: InnovationLaw | str, count: int, rng_state) -> np.ndarray:
    """``count`` iid draws from ``law``, deterministic given ``rng_state``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    law = law if isinstance(law, InnovationLaw) else InnovationLaw(law)
    return law.sample(int(count), rng_state)


def mean_function(mean: str, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if mean == "I":
        return 2.0 * np.sin(2.0 * np.pi * t)
    if mean == "II":
        return 2.0 - 8.0 * (t - 0.5) ** 2
    if mean == "III":
        return np.zeros_like(t)
    raise ValueError(f"unknown mean function {mean!r}; choose I, II or III")


def tvar6_coefficients(t) -> np.ndarray:
    """Factor roots ``a_1(t)..a_6(t)`` of the time-varying AR(6)/MA(6) models, shape ``(len(t), 6)``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.column_stack([
        0.6 * np.sin(2.0 * np.pi * (t - 0.05)),
        0.3 * np.cos(3.0 * np.pi * t) ** 2,
        np.exp(t - 0.6) ** 2 / 3.0 - 0.4,
        -0.4 * np.sin(6.0 * np.pi * t) - 0.1,
        (t - 0.3) ** 2 - 0.2,
        np.full_like(t, 0.2),
    ])


def tvar6_sigma(t) -> np.ndarray:
    return np.sqrt(1.0 + 0.5 * np.sin(2.0 * np.pi * np.asarray(t, dtype=float)))


_DEFAULT_LAW = {
    "model_a": "std_normal",
    "model_b": "std_t6",
    "model_c": "std_normal",
    "model_d": "std_chisq5",
    "tvar6": "std_normal",
    "tvma6": "std_normal",
}


@dataclass(frozen=True)
class ProcessSpec:
    """One benchmark process: error filter, scale, mean and innovation law.

    ``noise_scale`` multiplies the error process (1 reproduces the published
    models).
    """

    kind: str
    mean: str = "III"
    law: InnovationLaw | None = None
    noise_scale: float = 1.0
    tol: float = 1e-10

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown process kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        mean_function(self.mean, 0.0)
        law = self.law
        if law is None:
            law = InnovationLaw(_DEFAULT_LAW[kind])
        elif not isinstance(law, InnovationLaw):
            law = InnovationLaw(law)
        object.__setattr__(self, "law", law)

    @property
    def is_linear(self) -> bool:
        return self.kind != "model_c"

    @property
    def autoregressive(self) -> bool:
        return self.kind in ("model_a", "model_b", "tvar6")

    def mu(self, t) -> np.ndarray:
        return mean_function(self.mean, t)

    def sigma(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k == "model_a":
            s = np.ones_like(t)
        elif k == "model_b":
            s = np.full_like(t, 0.8)
        elif k == "model_c":
            s = np.ones_like(t)
        elif k == "model_d":
            s = (np.cos(np.pi * t) + 2.0) / 4.0
        else:
            s = tvar6_sigma(t)
        return self.noise_scale * s

    def factors(self, t) -> np.ndarray:
        """Roots ``a_s(t)`` of the lag polynomial ``prod_s (1 - a_s(t) B)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kind == "model_a":
            return np.full((t.size, 1), 0.3)
        if self.kind == "model_b":
            return (0.7 * np.sin(2.0 * np.pi * t))[:, None]
        if self.kind in ("tvar6", "tvma6"):
            return tvar6_coefficients(t)
        raise Unsupported(f"{self.kind} has no product-form lag polynomial")

    def truncation(self, t) -> int:
        """Number of MA terms beyond lag 0 needed for a tail below ``tol``."""
        if self.kind == "model_d":
            return 2
        if self.kind == "tvma6":
            return 6
        if self.kind == "model_c":
            return 1
        a = self.factors(t)
        rho = float(np.max(np.abs(a)))
        if rho >= 1.0:
            raise UnstableFilter(f"lag polynomial has a root of modulus {rho:.4g} >= 1 inside the unit disc")
        if rho == 0.0:
            return 0
        p = a.shape[1]
        # |c_j| <= C(j+p-1, p-1) rho^j; stop once the geometric tail of that bound is below tol
        j, bound = 0, 1.0
        while True:
            nxt = bound * rho * (j + p) / (j + 1)
            ratio = rho * (j + 1 + p) / (j + 2)
            if ratio < 1.0 and nxt / (1.0 - ratio) <= self.tol:
                return j
            j, bound = j + 1, nxt

    def ma_coefficients(self, t, J: int | None = None) -> np.ndarray:
        """Frozen-time MA coefficients ``c_0(t)..c_J(t)`` (before scaling by sigma)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if J is None:
            J = self.truncation(t)
        C = np.zeros((t.size, J + 1))
        if self.kind == "model_d":
            C[:, : min(3, J + 1)] = np.array([1.0, 0.9, -0.6])[: J + 1]
            return C
        if self.kind == "model_c":
            raise Unsupported("model (c) is nonlinear and has no MA representation")
        a = self.factors(t)
        C[:, 0] = 1.0
        if self.kind == "tvma6":
            for s in range(a.shape[1]):
                C[:, 1:] = C[:, 1:] - a[:, s : s + 1] * C[:, :-1].copy()
            return C
        for s in range(a.shape[1]):
            # divide by (1 - a_s z): c_j <- c_j + a_s c_{j-1}, sequential in j
            for j in range(1, J + 1):
                C[:, j] += a[:, s] * C[:, j - 1]
        return C


@dataclass
class TrueCovariance:
    matrix: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def _design(n: int) -> np.ndarray:
    return np.arange(1, n + 1) / n


@lru_cache(maxsize=32)
def _filter_table(spec: ProcessSpec, n: int) -> tuple[int, np.ndarray]:
    # sigma(i/n) c_j(i/n), rows i = 1..n; read-only so cached copies stay intact
    t = _design(n)
    J = spec.truncation(t)
    D = spec.sigma(t)[:, None] * spec.ma_coefficients(t, J)
    D.setflags(write=False)
    return J, D


def simulate_path(spec: ProcessSpec, n: int, rng_state=None) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``(X_1..X_n, eps_1..eps_n)`` for ``spec``."""
    if n < 10:
        raise ValueError("n must be at least 10")
    rng = make_rng(rng_state)
    t = _design(n)
    if spec.kind == "model_c":
        e = spec.law.sample(n + 1, rng)
        scale = (np.exp(4.0 * (t - 0.5) ** 2) + 1.0) / 6.0
        eps = spec.noise_scale * (scale * e[1:] + 0.6 * (np.abs(e[:-1]) - _ABS_NORMAL_MEAN))
    else:
        J, D = _filter_table(spec, n)
        e = spec.law.sample(n + J, rng)
        windows = sliding_window_view(e, J + 1)[:, ::-1]  # row i: e_i, e_{i-1}, ..., e_{i-J}
        eps = np.einsum("ij,ij->i", D, windows)
    return spec.mu(t) + eps, eps


def frozen_autocov(spec: ProcessSpec, t, k: int) -> np.ndarray:
    """``gamma_k(t)`` of the stationary process obtained by freezing time at ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k = abs(int(k))
    if spec.kind == "model_c":
        scale = (np.exp(4.0 * (t - 0.5) ** 2) + 1.0) / 6.0
        v = scale**2 + 0.36 * (1.0 - 2.0 / math.pi) if k == 0 else np.zeros_like(t)
        return spec.noise_scale**2 * v
    C = spec.ma_coefficients(t, max(spec.truncation(t), k))
    g = np.einsum("ij,ij->i", C[:, : C.shape[1] - k], C[:, k:])
    return spec.sigma(t) ** 2 * g


def true_covariance(spec: ProcessSpec, n: int) -> TrueCovariance:
    """``Cov(eps_i, eps_j)`` for ``1 <= i, j <= n``."""
    t = _design(n)
    if spec.kind == "model_c":
        return TrueCovariance(np.diag(frozen_autocov(spec, t, 0)))
    J, D = _filter_table(spec, n)
    S = np.zeros((n, n))
    idx = np.arange(n)
    for d in range(min(J, n - 1) + 1):
        # earlier index i pairs c_r(t_i) with c_{r+d}(t_{i+d})
        vals = np.einsum("ij,ij->i", D[: n - d, : J + 1 - d], D[d:, d:])
        S[idx[: n - d], idx[d:]] = vals
        S[idx[d:], idx[: n - d]] = vals
    return TrueCovariance(S)
