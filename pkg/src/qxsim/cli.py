"""``qxsim`` command line: run one registered experiment and emit its table."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import experiments
from .errors import BadParam, QxsimError, UnknownExperiment

EXIT_OK = 0
EXIT_BAD_ARGS = 2
EXIT_RUNTIME = 3


def _key_value(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qxsim",
        description="Run a registered experiment and write its result table as CSV or JSON.",
    )
    parser.add_argument("experiment", nargs="?", help="experiment name (see --list)")
    parser.add_argument("--param", action="append", type=_key_value, default=[], metavar="KEY=VALUE",
                        help="override a parameter; repeatable")
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    parser.add_argument("--out", help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    parser.add_argument("--list", action="store_true", help="list experiments and exit")
    parser.add_argument("--json-list", action="store_true", help="list experiments as JSON and exit")
    parser.add_argument("--record-time", action="store_true",
                        help="store wall time in JSON metadata (output is then not byte-reproducible)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list:
        print(experiments.summarize())
        return EXIT_OK
    if args.json_list:
        print(json.dumps(experiments.list_experiments(), indent=2))
        return EXIT_OK
    if not args.experiment:
        parser.print_usage(sys.stderr)
        print("qxsim: error: an experiment name is required", file=sys.stderr)
        return EXIT_BAD_ARGS
    cfg = experiments.ExperimentConfig(args.experiment, dict(args.param), args.seed, args.out, args.fmt)
    try:
        table = experiments.run_experiment(cfg, record_time=args.record_time)
        text = experiments.write_table(table, cfg.fmt, cfg.out)
    except UnknownExperiment as exc:
        print(f"qxsim: unknown experiment {exc.args[0]!r}; try --list", file=sys.stderr)
        return EXIT_BAD_ARGS
    except BadParam as exc:
        print(f"qxsim: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS
    except (QxsimError, OSError, ValueError, RuntimeError) as exc:
        print(f"qxsim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if not cfg.out:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
