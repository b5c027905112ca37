"""Experiment configuration, Monte Carlo drivers and the market-data pipeline."""

from .config import ExperimentConfig, load_config
from .experiments import (
    CellResult,
    ExperimentReport,
    QQTable,
    emit_qq,
    pred_errors,
    prediction_window,
    qq_table,
    run_cov_experiment,
    run_pred_experiment,
)
from .market import MarketSeries, analyze_csv, load_market, log_abs_returns, resolve_start

__all__ = [
    "ExperimentConfig",
    "load_config",
    "CellResult",
    "ExperimentReport",
    "QQTable",
    "emit_qq",
    "pred_errors",
    "prediction_window",
    "qq_table",
    "run_cov_experiment",
    "run_pred_experiment",
    "MarketSeries",
    "analyze_csv",
    "load_market",
    "log_abs_returns",
    "resolve_start",
]
