"""Monte Carlo drivers for the covariance-loss, prediction and QQ experiments.

Every replication draws from its own stream ``(seed, replication)`` and
workers return plain records, so results do not depend on the worker count.
"""

from __future__ import annotations

import csv
import functools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ..covmatrix import operator_norm
from ..estimation import EstimationSettings, estimate_covariance
from ..predictor import fit_coefficients, predict_one
from ..simulate import ProcessSpec, make_rng, simulate_path, true_covariance
from .config import ExperimentConfig

__all__ = [
    "CellResult",
    "ExperimentReport",
    "QQTable",
    "run_cov_experiment",
    "run_pred_experiment",
    "emit_qq",
    "prediction_window",
    "pred_errors",
]

log = logging.getLogger(__name__)

# a cell is reported invalid when more than this share of replications fails
MAX_FAILURE_SHARE = 0.01
CELL_COLUMNS = ["model", "mean", "n", "estimator", "mean_loss", "se", "reps"]


@dataclass
class CellResult:
    model: str
    mean: str
    n: int
    estimator: str
    losses: np.ndarray
    requested: int
    failures: dict[int, str] = field(default_factory=dict)

    @property
    def reps(self) -> int:
        return int(self.losses.size)

    @property
    def mean_loss(self) -> float:
        return float(np.mean(self.losses)) if self.reps else float("nan")

    @property
    def se(self) -> float:
        """Sample standard deviation over ``sqrt(reps)``."""
        if self.reps < 2:
            return float("nan")
        return float(np.std(self.losses, ddof=1) / math.sqrt(self.reps))

    @property
    def valid(self) -> bool:
        return self.reps > 0 and len(self.failures) <= MAX_FAILURE_SHARE * self.requested

    def row(self) -> list:
        return [self.model, self.mean, self.n, self.estimator,
                repr(self.mean_loss) if self.valid else "nan",
                repr(self.se) if self.valid else "nan", self.reps]


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    cells: list[CellResult]

    def cell(self, n: int, estimator: str, model: str | None = None) -> CellResult:
        for c in self.cells:
            if c.n == n and c.estimator == estimator and (model is None or c.model == model):
                return c
        raise KeyError((model, n, estimator))

    def write_csv(self, path_or_file) -> None:
        """Cell rows ``model,mean,n,estimator,mean_loss,se,reps``."""
        def emit(fh):
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CELL_COLUMNS)
            for c in self.cells:
                w.writerow(c.row())
        if hasattr(path_or_file, "write"):
            emit(path_or_file)
        else:
            with open(path_or_file, "w", newline="") as fh:
                emit(fh)


@dataclass
class QQTable:
    probabilities: np.ndarray
    theoretical: np.ndarray
    sample: np.ndarray
    law: str

    def __len__(self):
        return self.sample.size

    @property
    def r2(self) -> float:
        """Squared correlation of the quantile pairs."""
        return float(np.corrcoef(self.theoretical, self.sample)[0, 1] ** 2)

    def write_csv(self, path_or_file) -> None:
        def emit(fh):
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["probability", "theoretical", "sample"])
            for p, q, s in zip(self.probabilities, self.theoretical, self.sample):
                w.writerow([repr(float(p)), repr(float(q)), repr(float(s))])
        if hasattr(path_or_file, "write"):
            emit(path_or_file)
        else:
            with open(path_or_file, "w", newline="") as fh:
                emit(fh)


def _process(cfg: ExperimentConfig) -> ProcessSpec:
    return ProcessSpec(cfg.model, cfg.mean, cfg.law, cfg.noise_scale)


def _pmap(func: Callable, tasks: Sequence, workers: int) -> list:
    """Ordered map; a process pool when ``workers > 1``."""
    if workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks, chunksize=chunk))


@functools.lru_cache(maxsize=8)
def _truth(spec: ProcessSpec, n: int) -> np.ndarray:
    return true_covariance(spec, n).matrix


def _cov_replication(task) -> tuple[int, dict[str, float] | str]:
    spec, n, seed, rep, settings, estimators = task
    try:
        x, _ = simulate_path(spec, n, make_rng(seed, rep))
        est = estimate_covariance(x, n, settings)
        truth = _truth(spec, n)
        mats = {"local": est.local, "stationary": est.stationary, "tapered": est.tapered}
        return rep, {name: operator_norm(mats[name].to_dense() - truth) for name in estimators}
    except (ArithmeticError, ValueError, KeyError) as exc:
        return rep, f"{type(exc).__name__}: {exc}"


def _collect(cfg, n, label_records: Iterable[tuple[int, dict | str]], labels: Sequence[str]) -> list[CellResult]:
    values = {lab: [] for lab in labels}
    failures: dict[int, str] = {}
    for rep, rec in label_records:
        if isinstance(rec, str):
            failures[rep] = rec
            log.warning("replication %d (n=%d) failed: %s", rep, n, rec)
            continue
        for lab in labels:
            values[lab].append(rec[lab])
    return [CellResult(cfg.model, cfg.mean, n, lab, np.asarray(values[lab], dtype=float), cfg.reps, dict(failures))
            for lab in labels]


def run_cov_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Spectral-norm loss of the local and stationary banded estimators per sample size."""
    spec = _process(cfg)
    settings = cfg.settings(prediction=False)
    estimators = cfg.estimators
    cells = []
    for n in cfg.n:
        tasks = [(spec, n, cfg.seed, rep, settings, estimators) for rep in range(cfg.reps)]
        records = _pmap(_cov_replication, tasks, cfg.worker_count)
        cells.extend(_collect(cfg, n, records, estimators))
    return ExperimentReport(cfg, cells)


def prediction_window(n: int, t_pred: float) -> int:
    """Window length ``m``: ``floor(t n)`` observations, at most ``n - 1``."""
    return min(int(math.floor(t_pred * n)), n - 1)


def _pred_replication(task) -> tuple[int, dict[str, float] | str]:
    spec, n, seed, rep, settings, t_preds = task
    try:
        x, _ = simulate_path(spec, n, make_rng(seed, rep))
        out = {}
        for t in t_preds:
            m = prediction_window(n, t)
            coeffs = fit_coefficients(x[:m], n, settings)
            fc = predict_one(coeffs, x[:m], spec.sigma)
            err = x[m] - fc.point
            out[f"err@{t:g}"] = err
            out[f"std@{t:g}"] = err / fc.standardization
        return rep, out
    except (ArithmeticError, ValueError, KeyError) as exc:
        return rep, f"{type(exc).__name__}: {exc}"


def pred_errors(cfg: ExperimentConfig, n: int) -> tuple[dict[str, np.ndarray], dict[int, str]]:
    """Raw and standardized one-step errors per ``t_pred`` at sample size ``n``."""
    spec = _process(cfg)
    tasks = [(spec, n, cfg.seed, rep, cfg.settings(prediction=True), cfg.t_pred) for rep in range(cfg.reps)]
    records = _pmap(_pred_replication, tasks, cfg.worker_count)
    keys = [f"{kind}@{t:g}" for t in cfg.t_pred for kind in ("err", "std")]
    out = {k: [] for k in keys}
    failures = {}
    for rep, rec in records:
        if isinstance(rec, str):
            failures[rep] = rec
            log.warning("replication %d (n=%d) failed: %s", rep, n, rec)
            continue
        for k in keys:
            out[k].append(rec[k])
    return {k: np.asarray(v, dtype=float) for k, v in out.items()}, failures


def run_pred_experiment(cfg: ExperimentConfig, errors: dict | None = None) -> ExperimentReport:
    """Mean squared one-step prediction error per ``(n, t_pred)``.

    The estimator column reads ``t_pred=<t>``. ``errors`` may carry
    precomputed output of :func:`pred_errors` keyed by ``n``.
    """
    cells = []
    for n in cfg.n:
        errs, failures = errors[n] if errors and n in errors else pred_errors(cfg, n)
        for t in cfg.t_pred:
            cells.append(CellResult(cfg.model, cfg.mean, n, f"t_pred={t:g}", errs[f"err@{t:g}"] ** 2,
                                    cfg.reps, dict(failures)))
    return ExperimentReport(cfg, cells)


def qq_table(errors, law) -> QQTable:
    """Sorted errors paired with ``law`` quantiles at ``(i - 0.5)/N``."""
    sample = np.sort(np.asarray(errors, dtype=float))
    N = sample.size
    if N == 0:
        raise ValueError("no errors to compare")
    p = (np.arange(1, N + 1) - 0.5) / N
    return QQTable(p, np.asarray(law.ppf(p), dtype=float), sample, law.family)


def emit_qq(cfg: ExperimentConfig, errors: dict | None = None) -> QQTable:
    """QQ table of standardized errors pooled over ``t_pred`` (first sample size)."""
    n = cfg.n[0]
    errs, _ = errors[n] if errors and n in errors else pred_errors(cfg, n)
    pooled = np.concatenate([errs[f"std@{t:g}"] for t in cfg.t_pred])
    return qq_table(pooled, _process(cfg).law)
