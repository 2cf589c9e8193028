"""Command line front end.

    mcsic run --scenario fig4 --seed 42 --out results.csv --workers 8
    mcsic run --config custom.cfg
    mcsic validate
    mcsic list-scenarios

Exit codes: 0 success, 2 configuration error, 3 divergence faults above
--fault-limit.
"""

import argparse
import sys
from dataclasses import replace

from .config import (
    ConfigError,
    PRESET_DESCRIPTIONS,
    build_presets,
    get_preset,
    parse_config_file,
)
from .engine import run_scenario, total_faults, write_csv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcsic",
        description="Link-level BER simulator for multicarrier DS-CDMA "
        "interference cancellation receivers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a preset or a config file")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--scenario", help="preset name (see list-scenarios)")
    source.add_argument("--config", help="path to a key=value scenario file")
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--out", default="results.csv", help="output CSV path")
    run.add_argument("--workers", type=int, default=1, help="trial worker processes")
    run.add_argument(
        "--fault-limit",
        type=int,
        default=0,
        help="max tolerated despreader divergence faults before exit code 3",
    )

    sub.add_parser("validate", help="run the property and oracle checks")
    sub.add_parser("list-scenarios", help="print the available presets")
    return parser


def _cmd_run(args) -> int:
    if args.workers < 1:
        print(f"error: workers must be >= 1, got {args.workers}", file=sys.stderr)
        return 2
    try:
        if args.scenario:
            configs = get_preset(args.scenario, seed=args.seed)
        else:
            configs = parse_config_file(args.config)
            if args.seed is not None:
                configs = [replace(c, seed=args.seed) for c in configs]
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    rows = run_scenario(configs, workers=args.workers)
    write_csv(rows, args.out)
    faults = total_faults(rows)
    print(f"{len(rows)} points -> {args.out} ({faults} faults)")
    if faults > args.fault_limit:
        print(
            f"error: {faults} divergence faults exceed limit {args.fault_limit}",
            file=sys.stderr,
        )
        return 3
    return 0


def _cmd_list() -> int:
    for name in sorted(build_presets()):
        print(f"{name:6s} {PRESET_DESCRIPTIONS[name]}")
    return 0


def _cmd_validate() -> int:
    from .validate import run_all

    failures = run_all()
    return 1 if failures else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate()
    return _cmd_list()


if __name__ == "__main__":
    sys.exit(main())
