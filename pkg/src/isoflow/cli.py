"""Command line entry point.

    isoflow <experiment> --config <path> [--out <dir>] [--format csv,json,svg] [--seed-none]
    isoflow validate <path>

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 a reported invariant failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import EXPERIMENTS, FORMATS, load_config, validate
from .errors import ConfigError, NumericalError, WindowError
from .experiments import ExperimentResult, run_experiment
from .io import write_csv, write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INVARIANT = 4


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors, which matches the config-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _formats(text: str) -> tuple[str, ...]:
    items = tuple(dict.fromkeys(x.strip() for x in text.split(",") if x.strip()))
    bad = [x for x in items if x not in FORMATS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"formats must be a comma-separated subset of {','.join(FORMATS)}")
    return items


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isoflow", description="KdV isospectral flow laboratory")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, type=Path, help="TOML run configuration")
        p.add_argument("--out", type=Path, help="output directory (overrides output.directory)")
        p.add_argument("--format", type=_formats, help="comma-separated subset of csv,json,svg")
        p.add_argument("--seed-none", action="store_true",
                       help="accepted for compatibility; runs are deterministic and draw no random numbers")
    v = sub.add_parser("validate", help="check a configuration file without running it")
    v.add_argument("path", type=Path)
    return parser


def write_outputs(result: ExperimentResult, report: dict, out: Path, formats: Sequence[str]) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []
    if "csv" in formats:
        for table in result.tables:
            files.append(write_csv(out / f"{table.name}.csv", table.header, table.rows))
    if "svg" in formats:
        for name, draw in result.figures.items():
            files.append(draw(out / f"{name}.svg"))
    if "json" in formats:
        report = dict(report, files=sorted(p.name for p in files) + ["report.json"])
        files.append(write_json(out / "report.json", report))
    return files


def _run(args) -> int:
    try:
        cfg = load_config(args.config, args.command)
    except ConfigError as exc:
        for line in exc.messages:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out if args.out is not None else cfg.output_directory
    formats = args.format or cfg.formats
    try:
        result = run_experiment(cfg, args.command)
    except (NumericalError, WindowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        files = write_outputs(result, result.report(cfg), out, formats)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for line in result.warnings:
        print(f"warning: {line}", file=sys.stderr)
    for check in result.checks:
        print(check.line())
    print(f"{len(files)} file(s) written to {out}")
    return EXIT_OK if result.passed else EXIT_INVARIANT


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        message = validate(args.path)
        print(message)
        return EXIT_OK if message == "ok" else EXIT_CONFIG
    return _run(args)


if __name__ == "__main__":
    sys.exit(main())
