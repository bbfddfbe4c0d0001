"""Command line: ``figplots plot --spec <path>``.

Exit codes: 0 success, 2 spec/CSV problems, 1 anything else.
"""

from __future__ import annotations

import argparse
import sys

from .plot import PlotSpec, SpecError, plot_figure


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figplots",
                                     description="Render figures from experiment CSV outputs")
    subs = parser.add_subparsers(dest="command", required=True)
    plot = subs.add_parser("plot", help="render one figure from a JSON spec")
    plot.add_argument("--spec", required=True, help="JSON plot spec file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = plot_figure(PlotSpec.from_file(args.spec))
    except (SpecError, FileNotFoundError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
