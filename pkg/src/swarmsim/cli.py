"""Command-line entry point.

Exit codes: 0 success, 1 configuration error (bad flags, bad config file),
2 runtime error (map load, spawn, controller fault, I/O during the run).
Errors print one machine-parseable line to stderr:
``error: config: <reason>`` or ``error: runtime: <reason>``.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .bench import bench, format_csv
from .config import parse_config
from .engine import run
from .errors import ConfigError, SimulationError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmsim",
        description="Deterministic headless 2D swarm-robotics simulator.",
    )
    parser.add_argument("--config", required=True, help="properties file describing the run")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (repeatable; later wins)",
    )
    parser.add_argument("--seed", type=int, help="shorthand for --set seed=N")
    parser.add_argument("--ticks", type=int, help="shorthand for --set ticks=N")
    parser.add_argument("--log", metavar="PATH", help="shorthand for --set log.path=PATH")
    parser.add_argument(
        "--bench",
        metavar="N1,N2,...",
        help="run the scaling benchmark over these robot counts and print CSV",
    )
    parser.add_argument("--frames-every", type=int, metavar="N", help="write a frame every N ticks")
    parser.add_argument("--frames-dir", metavar="DIR", help="directory for frame images")
    parser.add_argument("--quiet", action="store_true", help="suppress the report block")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage/help; -h exits 0, bad flags exit 1
        return 0 if exc.code == 0 else 1

    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.ticks is not None:
        overrides.append(f"ticks={args.ticks}")
    if args.log is not None:
        overrides.append(f"log.path={args.log}")
    if args.frames_every is not None:
        overrides.append(f"frames.every={args.frames_every}")
    if args.frames_dir is not None:
        overrides.append(f"frames.dir={args.frames_dir}")

    try:
        with open(args.config, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        print(f"error: config: cannot read {args.config}: {exc}", file=sys.stderr)
        return 1
    try:
        config = parse_config(text, overrides)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1

    if args.bench is not None:
        try:
            sizes = [int(part) for part in args.bench.split(",") if part.strip()]
        except ValueError:
            print(f"error: config: --bench expects integers, got {args.bench!r}", file=sys.stderr)
            return 1
        if not sizes:
            print("error: config: --bench needs at least one size", file=sys.stderr)
            return 1
        print(format_csv(bench(config, sizes)), end="")
        return 0

    try:
        report = run(config)
    except SimulationError as exc:
        print(f"error: runtime: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: runtime: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        print(report.format_block())
    return 0


def console_entry() -> None:
    sys.exit(main())
