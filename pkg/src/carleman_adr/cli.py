"""Command-line entry point: four experiment subcommands over config files.

Exit codes: 0 on success, 1 when a verification tolerance is breached,
2 for invalid configuration or arguments.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import RUNNERS, Config, ConfigError, ToleranceError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carleman-adr",
        description="Carleman ADR studies: convergence, Pauli scaling, "
                    "post-selection scans, block-encoding verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    help_lines = {
        "convergence": "Carleman truncation error vs the nonlinear Euler reference",
        "pauli": "Pauli term counts and truncation distances vs system size",
        "p0scan": "post-selection probability over stencil-weight grids",
        "beverify": "statevector checks of the L and quadratic-coupling encodings",
    }
    for name, text in help_lines.items():
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, help="key = value config file")
        cmd.add_argument("--out", required=True, help="output directory for CSV files")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses code 2 for bad arguments already; keep 0 for --help
        return int(exc.code or 0)
    try:
        config = Config.load(args.config)
        RUNNERS[args.command](config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ToleranceError as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
