"""Command-line entry point.

Subcommands: train (run a federated experiment), pmepr (envelope
statistics), analyze (closed-form tables), validate (Monte Carlo vs
closed-form oracle suite). Exit codes: 0 success, 1 validation
failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import sys

from .config import SCHEMES, ConfigError, ExperimentConfig, load_config
from .experiments import cmd_analyze, cmd_pmepr, cmd_train
from .validation import run_all

EXIT_OK = 0
EXIT_VALIDATION_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to the YAML experiment config")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--scheme", choices=SCHEMES, help="override config scheme")
    p.add_argument("--output", help="override config output_dir")
    p.add_argument("--threads", type=int, default=1,
                   help="upper bound on worker threads (results identical at any value)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="airvote",
                                     description="Over-the-air majority-vote training simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a training experiment")
    _add_config_args(p_train)

    p_pmepr = sub.add_parser("pmepr", help="peak-to-mean envelope power statistics")
    _add_config_args(p_pmepr)
    p_pmepr.add_argument("--symbols", type=int, default=10_000, help="number of symbols to draw")

    p_analyze = sub.add_parser("analyze", help="emit closed-form tables as CSV")
    _add_config_args(p_analyze)

    p_validate = sub.add_parser("validate", help="run the Monte Carlo oracle suite")
    p_validate.add_argument("--seed", type=int, default=20_260_810)
    p_validate.add_argument("--quick", action="store_true", help="reduced trial counts")
    return parser


def _load(args) -> ExperimentConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.scheme is not None:
        overrides["scheme"] = args.scheme
    if args.output is not None:
        overrides["output_dir"] = args.output
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "validate":
        results = run_all(seed=args.seed, quick=args.quick)
        for r in results:
            print(r.line())
        failed = [r for r in results if not r.passed]
        print(f"{len(results) - len(failed)}/{len(results)} checks passed")
        return EXIT_VALIDATION_FAILURE if failed else EXIT_OK

    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG_ERROR

    try:
        if args.command == "train":
            out = cmd_train(cfg, threads=args.threads)
            print(f"wrote {out['rounds_csv']} and {out['summary_json']}")
        elif args.command == "pmepr":
            out = cmd_pmepr(cfg, args.symbols)
            print(f"wrote {out['pmepr_csv']} and {out['envelope_csv']}")
        elif args.command == "analyze":
            out = cmd_analyze(cfg)
            print(f"wrote {out['bound_csv']} and {out['mv_error_csv']}")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
