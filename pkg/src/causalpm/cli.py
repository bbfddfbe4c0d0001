"""Command-line harness: deterministic experiments with CSV/JSON outputs.

Exit codes: 0 success, 2 config error, 3 exponent-solver failure,
4 plant-model violation, 1 anything else.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ExperimentConfig, load
from .control import ModelViolation
from .exponents import NoPositiveExponent
from .experiments import run_experiment

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_MODEL = 4


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="flat key-value config file")
    sub.add_argument("--out", help="output directory (overrides config)")
    sub.add_argument("--seed", type=int, help="master seed (overrides config)")
    sub.add_argument("--trials", type=int, help="trial count (overrides config)")
    sub.add_argument("--workers", type=int, help="worker processes (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalpm",
        description="Feedback-coding and control experiments over a binary symmetric channel",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("exponent-sweep", "stabilizable gain versus inverse channel budget"),
        ("alpha-vs-p", "stabilizable gain versus crossover probability"),
        ("error-prob", "prefix-decoding error decay curves"),
        ("control-sim", "closed-loop plant simulations and stability sweeps"),
    ):
        _add_common(subs.add_parser(name, help=blurb))
    return parser


def _resolve_config(args) -> ExperimentConfig:
    cfg = load(args.config)
    if cfg.experiment != args.command:
        raise ConfigError(
            f"config is for {cfg.experiment!r} but the {args.command!r} command was invoked"
        )
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trials is not None:
        cfg.trials = args.trials
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.out = args.out
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        written = run_experiment(cfg)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoPositiveExponent as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ModelViolation as exc:
        print(f"model violation: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
