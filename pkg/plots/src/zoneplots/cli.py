"""plots <figure-kind> --in <files...> --out <img> [--zoom lo,hi]"""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render profile, mesh-history, and loss figures from "
                    "adaptive-zoning experiment CSVs.",
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        help="input CSV files")
    parser.add_argument("--out", required=True, help="output image path (.png or .svg)")
    parser.add_argument("--zoom", default=None, help="x range lo,hi for the zoom panel")
    parser.add_argument("--quantity", default=None,
                        help="profile column to plot (default: first value column)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    zoom = None
    if args.zoom is not None:
        try:
            lo, hi = (float(v) for v in args.zoom.split(","))
        except ValueError:
            print(f"bad --zoom {args.zoom!r}; expected lo,hi", file=sys.stderr)
            return 2
        zoom = (lo, hi)
    try:
        spec = FigureSpec(kind=args.kind, inputs=args.inputs, output=args.out,
                          zoom=zoom, quantity=args.quantity)
        path = render(spec)
    except RenderError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
