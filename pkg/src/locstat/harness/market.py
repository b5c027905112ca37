"""Price-file loading, log-absolute-return transform and rolling backtests."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyAfterCleaning, ParseError
from ..predictor import BacktestReport, rolling_backtest
from .config import ExperimentConfig

__all__ = ["MarketSeries", "read_series", "log_abs_returns", "clean", "load_market", "resolve_start", "analyze_csv"]

log = logging.getLogger(__name__)

DATE_COLUMNS = ("date", "Date", "DATE", "timestamp", "time")


@dataclass
class MarketSeries:
    """Raw values plus the cleaned series actually modelled.

    ``dropped`` holds positions (in the transformed series, 0-based) of
    non-finite entries that were removed.
    """

    dates: list[str]
    raw: np.ndarray
    values: np.ndarray
    kept_dates: list[str]
    dropped: list[int]
    length_before: int

    @property
    def length_after(self) -> int:
        return int(self.values.size)


def read_series(path, column: str = "Close") -> tuple[list[str], np.ndarray]:
    """Read one numeric column from a comma-delimited UTF-8 file with a header row."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty", 1) from None
        header = [h.strip() for h in header]
        if column not in header:
            raise ParseError(f"column {column!r} not in header {header}", 1)
        col = header.index(column)
        date_col = next((header.index(c) for c in DATE_COLUMNS if c in header), None)
        dates, values = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, found {len(row)}", line)
            text = row[col].strip()
            try:
                values.append(float(text))
            except ValueError:
                raise ParseError(f"cannot parse {text!r} as a number", line) from None
            dates.append(row[date_col].strip() if date_col is not None else str(len(dates) + 1))
    return dates, np.asarray(values, dtype=float)


def log_abs_returns(prices) -> np.ndarray:
    """``log|log p_t - log p_{t-1}|``; zero returns map to ``-inf``."""
    p = np.asarray(prices, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.diff(np.log(p))
        return np.log(np.abs(r))


def clean(values) -> tuple[np.ndarray, list[int]]:
    v = np.asarray(values, dtype=float)
    ok = np.isfinite(v)
    return v[ok], [int(i) for i in np.flatnonzero(~ok)]


def load_market(path, column: str = "Close", transform: bool = True) -> MarketSeries:
    dates, raw = read_series(path, column)
    series = log_abs_returns(raw) if transform else raw
    series_dates = dates[1:] if transform else dates
    values, dropped = clean(series)
    if dropped:
        log.info("dropped %d non-finite values", len(dropped))
    if values.size == 0:
        raise EmptyAfterCleaning(f"no finite values left in column {column!r}")
    drop = set(dropped)
    kept = [d for i, d in enumerate(series_dates) if i not in drop]
    return MarketSeries(dates, raw, values, kept, dropped, int(series.size))


def resolve_start(start: int, length: int) -> int:
    """1-based first forecast step; ``-k`` means the last ``k`` observations."""
    s = length + start + 1 if start < 0 else start
    if s < 11 or s > length:
        raise ValueError(f"start {start} gives step {s}, outside 11..{length}")
    return s


def analyze_csv(path, cfg: ExperimentConfig | None = None) -> BacktestReport:
    """Rolling one-step backtest of the (optionally transformed) column."""
    cfg = cfg or ExperimentConfig(experiment="market")
    series = load_market(path, cfg.column, cfg.log_abs_returns)
    start = resolve_start(cfg.start, series.length_after)
    report = rolling_backtest(series.values, start, cfg.settings(prediction=True))
    log.info("backtest over %d steps: mse %.6g", len(report), report.mse)
    return report
