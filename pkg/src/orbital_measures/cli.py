"""Command-line entry point: ``orbital-measures run|list-scenarios|version``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .runner import SCENARIOS, ConfigError, emit_report, load_config, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_FAILURE = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbital-measures", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config file")
    run.add_argument("config", help="path to a TOML scenario file")
    run.add_argument("--format", choices=("human", "machine"),
                     help="report format (overrides output.format)")
    run.add_argument("--out", help="write the report here instead of stdout")
    run.add_argument("--workers", type=int, default=1, help="worker threads (default 1)")
    sub.add_parser("list-scenarios", help="list built-in scenarios")
    sub.add_parser("version", help="print the tool version")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    if args.command == "list-scenarios":
        width = max(map(len, SCENARIOS))
        for name, text in SCENARIOS.items():
            print(f"{name.ljust(width)}  {text}")
        return EXIT_OK

    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        report = run_scenario(config, workers=args.workers)
        document = emit_report(report, args.format or config.output_format)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(document)
        else:
            sys.stdout.write(document)
    except Exception as exc:
        print(f"internal failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if not report.ok:
        print(f"scenario failed: {report.error}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK
