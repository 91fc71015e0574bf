"""`viz <snapshot> --field rho --style schlieren|contour --out img.png`"""

from __future__ import annotations

import argparse
import sys

from .reader import read_snapshot
from .render import render_contour, render_schlieren


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="viz",
                                     description="render mhdpp snapshots")
    parser.add_argument("snapshot", help="snapshot file (.vtk or .csv)")
    parser.add_argument("--field", default="rho")
    parser.add_argument("--style", default="contour",
                        choices=("contour", "schlieren"))
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--levels", type=int, default=30)
    parser.add_argument("--alpha", type=float, default=10.0,
                        help="schlieren shading strength")
    parser.add_argument("--log-scale", action="store_true",
                        help="schlieren of log10(field)")
    args = parser.parse_args(argv)

    try:
        snap = read_snapshot(args.snapshot)
        if args.style == "contour":
            render_contour(snap, args.field, args.out, levels=args.levels)
        else:
            render_schlieren(snap, args.field, args.out, alpha=args.alpha,
                             log_scale=args.log_scale)
    except (KeyError, ValueError) as exc:
        print(f"viz error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
