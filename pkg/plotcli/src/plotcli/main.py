"""`plot <kind> <csv...> -o <file>`: regenerate paper-style figures.

Exit codes: 0 on success, 2 on schema/input errors (the message names the
offending column), 1 on anything unexpected.
"""

from __future__ import annotations

import argparse
import sys

from .csvio import SchemaError
from .figures import KINDS, FigureSpec, render


def _parse_range(text):
    if text is None:
        return None
    lo, hi = text.split(":")
    return (float(lo), float(hi))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="plot",
        description="Render toricmem CSV outputs as SVG+PNG figures.",
    )
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("csvs", nargs="+", metavar="csv")
    ap.add_argument("-o", "--out", required=True, help="output path (suffix ignored; .svg and .png written)")
    ap.add_argument("--x-range", help="lo:hi")
    ap.add_argument("--y-range", help="lo:hi")
    ap.add_argument("--title")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            kind=args.kind,
            inputs=tuple(args.csvs),
            output=args.out,
            x_range=_parse_range(args.x_range),
            y_range=_parse_range(args.y_range),
            title=args.title,
        )
        svg, png = render(spec)
    except (SchemaError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # pragma: no cover - defensive
        print(f"internal error: {err}", file=sys.stderr)
        return 1
    print(svg)
    print(png)
    return 0


if __name__ == "__main__":
    sys.exit(main())
