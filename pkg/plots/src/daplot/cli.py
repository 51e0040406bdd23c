"""Command-line figure rendering: one figure per invocation."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="daplot",
        description="Render assimilation-run CSVs into publication-style figures.",
    )
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV", help="input CSV file(s)")
    parser.add_argument("--labels", nargs="*", default=None,
                        help="one label per input (defaults to file stems)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--ycolumn", default="err_psi_l2",
                        help="error column for error-vs-* kinds")
    parser.add_argument("--grid-n", type=int, default=None,
                        help="grid size; draws the 2/3 cutoff line on spectra")
    args = parser.parse_args(argv)

    labels = args.labels
    if not labels:
        from pathlib import Path

        labels = [Path(p).stem for p in args.inputs]
        # disambiguate identical stems (e.g. many errors.csv) by parent dir
        if len(set(labels)) != len(labels):
            labels = [f"{Path(p).parent.name}/{Path(p).stem}" for p in args.inputs]
    if len(labels) != len(args.inputs):
        parser.error(f"{len(args.inputs)} inputs but {len(labels)} labels")

    spec = FigureSpec(
        kind=args.kind,
        inputs=tuple(zip(args.inputs, labels)),
        output=args.out,
        y_column=args.ycolumn,
        grid_n=args.grid_n,
    )
    render(spec)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
