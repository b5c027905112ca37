"""Command line entry point: ``locstat <subcommand> [options]``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import sys
from dataclasses import replace

import numpy as np

from .covmatrix import floor_params, pd_correct
from .errors import LocstatError
from .estimation import estimate_covariance
from .harness.config import CONFIG_KEYS, ExperimentConfig, load_config
from .harness.experiments import emit_qq, run_cov_experiment, run_pred_experiment
from .harness.market import analyze_csv, load_market
from .predictor import fit_coefficients, predict_one
from .simulate import ProcessSpec, make_rng, simulate_path

log = logging.getLogger("locstat")

# flags whose spelling or arity differs from the generic ``--key VALUE``
_NARGS = {"n": "+", "t_pred": "+", "estimators": "+"}
_BOOLEAN = {"taper", "log_abs_returns"}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-v", "--verbose", action="count", default=0)
    g = p.add_argument_group("configuration overrides")
    g.add_argument("--config", help="INI file; flags given here override it")
    for key in CONFIG_KEYS:
        flag = "--" + key.replace("_", "-")
        if key in _BOOLEAN:
            g.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction, default=None)
        elif key in _NARGS:
            g.add_argument(flag, dest=key, nargs=_NARGS[key], default=None)
        else:
            g.add_argument(flag, dest=key, default=None)


def build_config(args: argparse.Namespace, **defaults) -> ExperimentConfig:
    """Defaults, then the config file, then explicit flags."""
    cfg = ExperimentConfig(**defaults) if defaults else ExperimentConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    updates = {}
    for key, (_, parse) in CONFIG_KEYS.items():
        value = getattr(args, key, None)
        if value is None:
            continue
        if key in _BOOLEAN:
            updates[key] = bool(value)
        elif isinstance(value, list):
            updates[key] = parse(" ".join(value))
        else:
            updates[key] = parse(value)
    return replace(cfg, **updates)


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _input_series(args, cfg: ExperimentConfig) -> np.ndarray:
    if args.input:
        return load_market(args.input, cfg.column, args.log_abs_returns is True).values
    spec = ProcessSpec(cfg.model, cfg.mean, cfg.law, cfg.noise_scale)
    x, _ = simulate_path(spec, cfg.n[0], make_rng(cfg.seed, args.replication))
    return x


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    spec = ProcessSpec(cfg.model, cfg.mean, cfg.law, cfg.noise_scale)
    n = cfg.n[0]
    x, eps = simulate_path(spec, n, make_rng(cfg.seed, args.replication))
    with _output(cfg.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "t", "x", "epsilon"])
        for i in range(n):
            w.writerow([i + 1, repr((i + 1) / n), repr(float(x[i])), repr(float(eps[i]))])
    return 0


def cmd_estimate_cov(args) -> int:
    cfg = build_config(args)
    y = _input_series(args, cfg)
    settings = cfg.settings(prediction=False)
    if args.estimator == "tapered":
        settings = settings.with_(taper=True)
    est = estimate_covariance(y, None, settings)
    log.info("m=%d tau=%.4g l_n=%d", y.size, est.tau, est.l_n)
    if args.estimator == "pd":
        mat = pd_correct(est.local, floor_params(est.curves[0], y.size, settings.beta, settings.floor_multiplier))
    else:
        mat = {"local": est.local, "stationary": est.stationary, "tapered": est.tapered}[args.estimator]
    with _output(cfg.out) as fh:
        mat.write_csv(fh)
    return 0


def cmd_predict(args) -> int:
    cfg = build_config(args)
    y = _input_series(args, cfg)
    m = y.size
    n = args.design_n or m + 1
    coeffs = fit_coefficients(y, n, cfg.settings(prediction=True))
    fc = predict_one(coeffs, y)
    with _output(cfg.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "n", "band", "intercept", "trend_at_window_end", "prediction"])
        w.writerow([m, n, coeffs.band, repr(coeffs.intercept), repr(fc.trend_at_window_end), repr(fc.point)])
    return 0


def cmd_bench(args) -> int:
    cfg = build_config(args)
    if cfg.experiment == "market":
        raise SystemExit("use the analyze subcommand for market data")
    if cfg.experiment == "cov_loss":
        report = run_cov_experiment(cfg)
    elif cfg.experiment == "pred_mse":
        report = run_pred_experiment(cfg)
    else:
        table = emit_qq(cfg)
        log.info("QQ squared correlation %.4f over %d errors", table.r2, len(table))
        with _output(cfg.out) as fh:
            table.write_csv(fh)
        return 0
    for c in report.cells:
        if not c.valid:
            log.warning("cell n=%d %s invalid: %d of %d replications failed",
                        c.n, c.estimator, len(c.failures), c.requested)
    with _output(cfg.out) as fh:
        report.write_csv(fh)
    return 0


def cmd_analyze(args) -> int:
    cfg = build_config(args, experiment="market")
    report = analyze_csv(args.path, cfg)
    log.info("%d forecast steps, mse %.6g, %d failed", len(report), report.mse, len(report.failures))
    with _output(cfg.out) as fh:
        report.write_csv(fh)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locstat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one path, CSV columns index,t,x,epsilon")
    p.add_argument("--replication", type=int, default=0)
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate-cov", help="banded covariance estimate of a series")
    p.add_argument("--input", help="CSV file; simulates from --model when omitted")
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--estimator", choices=["local", "stationary", "tapered", "pd"], default="local")
    _add_config_flags(p)
    p.set_defaults(func=cmd_estimate_cov)

    p = sub.add_parser("predict", help="one-step prediction of the next observation")
    p.add_argument("--input", help="CSV file; simulates from --model when omitted")
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--design-n", type=int, default=None, help="design scale n (default: length + 1)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", help="Monte Carlo experiments (cov_loss, pred_mse, qq)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("analyze", help="rolling one-step backtest of a price file")
    p.add_argument("path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (LocstatError, OSError) as exc:
        print(f"locstat: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
