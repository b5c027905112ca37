"""Experiment configuration: INI file with sections, every key overridable from the CLI."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields, replace
from io import StringIO
from typing import Any, Callable

from ..errors import ConfigError
from ..estimation import EstimationSettings

__all__ = ["ExperimentConfig", "load_config", "CONFIG_KEYS", "EXPERIMENTS", "MODELS", "MEANS"]

EXPERIMENTS = ("cov_loss", "pred_mse", "qq", "market")
MODELS = ("a", "b", "c", "d", "tvar6", "tvma6")
MEANS = ("I", "II", "III")


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    def inner(text: str):
        text = text.strip()
        if text == "" or text.lower() in ("auto", "none", "default"):
            return None
        return parse(text)
    return inner


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(",", " ").split())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _words(text: str) -> tuple[str, ...]:
    return tuple(tok for tok in text.replace(",", " ").split())


# key -> (section, parser); the CLI flag is ``--`` + key with dashes
CONFIG_KEYS: dict[str, tuple[str, Callable[[str], Any]]] = {
    "experiment": ("experiment", str),
    "model": ("experiment", str),
    "mean": ("experiment", str),
    "law": ("experiment", _optional(str)),
    "n": ("experiment", _ints),
    "reps": ("experiment", int),
    "seed": ("experiment", int),
    "workers": ("experiment", int),
    "t_pred": ("experiment", _floats),
    "noise_scale": ("experiment", float),
    "estimators": ("experiment", _words),
    "kernel": ("estimation", str),
    "l0": ("estimation", _optional(int)),
    "l1": ("estimation", _optional(int)),
    "alpha": ("estimation", float),
    "block": ("estimation", _optional(int)),
    "bandwidth_count": ("estimation", int),
    "trend_min": ("estimation", _optional(float)),
    "trend_max": ("estimation", float),
    "lag_min": ("estimation", float),
    "lag_max": ("estimation", float),
    "beta": ("estimation", float),
    "floor_multiplier": ("estimation", float),
    "taper": ("estimation", _bool),
    "column": ("market", str),
    "log_abs_returns": ("market", _bool),
    "start": ("market", int),
    "out": ("output", _optional(str)),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to rerun an experiment.

    ``l0``/``l1`` left as ``None`` resolve per experiment: ``1..6`` for
    covariance losses, ``ceil(log m)..5 + ceil(log m)`` for prediction.
    ``workers=0`` uses every available core.
    """

    experiment: str = "cov_loss"
    model: str = "a"
    mean: str = "I"
    law: str | None = None
    n: tuple[int, ...] = (250, 500, 1000)
    reps: int = 200
    seed: int = 1
    workers: int = 0
    t_pred: tuple[float, ...] = (0.5, 1.0)
    noise_scale: float = 1.0
    estimators: tuple[str, ...] = ("local", "stationary")
    kernel: str = "biweight"
    l0: int | None = None
    l1: int | None = None
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
    column: str = "Close"
    log_abs_returns: bool = True
    start: int = -176
    out: str | None = None

    def __post_init__(self):
        if isinstance(self.n, int):
            object.__setattr__(self, "n", (self.n,))
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        object.__setattr__(self, "t_pred", tuple(float(v) for v in self.t_pred))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        self.validate()

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.mean not in MEANS:
            raise ConfigError(f"mean must be one of {MEANS}, got {self.mean!r}")
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if not self.n or min(self.n) < 50:
            raise ConfigError("sample sizes must be at least 50")
        if any(not 0.0 < t <= 1.0 for t in self.t_pred):
            raise ConfigError("t_pred values must lie in (0, 1]")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")
        bad = set(self.estimators) - {"local", "stationary", "tapered"}
        if bad:
            raise ConfigError(f"unknown estimators {sorted(bad)}")

    @property
    def worker_count(self) -> int:
        return self.workers or (os.cpu_count() or 1)

    def settings(self, prediction: bool = False) -> EstimationSettings:
        """Estimation knobs; band range defaults depend on the experiment type."""
        l0, l1 = self.l0, self.l1
        if not prediction:
            l0 = 1 if l0 is None else l0
            l1 = 6 if l1 is None else l1
        return EstimationSettings(
            kernel=self.kernel, l0=l0, l1=l1, alpha=self.alpha, block=self.block,
            bandwidth_count=self.bandwidth_count, trend_min=self.trend_min, trend_max=self.trend_max,
            lag_min=self.lag_min, lag_max=self.lag_max, beta=self.beta,
            floor_multiplier=self.floor_multiplier,
            taper=self.taper or "tapered" in self.estimators,
        )

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def to_ini(self) -> str:
        """Round-trippable INI text of the full configuration."""
        parser = configparser.ConfigParser()
        for f in fields(self):
            section, _ = CONFIG_KEYS[f.name]
            if not parser.has_section(section):
                parser.add_section(section)
            parser.set(section, f.name, _format(getattr(self, f.name)))
        buf = StringIO()
        parser.write(buf)
        return buf.getvalue()


def _format(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def parse_values(raw: dict[str, str]) -> dict[str, Any]:
    """Convert ``key -> text`` pairs, rejecting unknown keys."""
    out = {}
    for key, text in raw.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key][1](text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    return out


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read an INI file; keys must sit in their own section."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raw = {}
    for section in parser.sections():
        for key, text in parser.items(section):
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            if CONFIG_KEYS[key][0] != section:
                raise ConfigError(f"{path}: key {key!r} belongs in [{CONFIG_KEYS[key][0]}], not [{section}]")
            raw[key] = text
    base = base or ExperimentConfig()
    return replace(base, **parse_values(raw))
