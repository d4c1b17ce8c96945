"""CLI: one figure job per invocation.

Exit codes: 0 success, 2 bad arguments, 3 schema/data error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FigureJob, FigureKind, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mirageplots",
        description="Render figures from miragesim run directories")
    ap.add_argument("figure", choices=[k.value for k in FigureKind])
    ap.add_argument("--run-dir", action="append", required=True, type=Path,
                    help="input run directory (repeat for side-by-side "
                         "panels, max 2)")
    ap.add_argument("--out", required=True, type=Path,
                    help="output image path; .png and .svg are written")
    ap.add_argument("--linear-y", action="store_true",
                    help="use a linear y-axis (default: log for fig6/fig7)")
    return ap


def parse_and_dispatch(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        job = FigureJob(figure=FigureKind(args.figure),
                        run_dirs=tuple(args.run_dir), out=args.out,
                        log_y=False if args.linear_y else None)
    except ValueError as e:
        print(f"bad arguments: {e}", file=sys.stderr)
        return 2
    try:
        for path in render(job):
            print(f"wrote {path}")
    except SchemaError as e:
        print(f"input error: {e}", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
