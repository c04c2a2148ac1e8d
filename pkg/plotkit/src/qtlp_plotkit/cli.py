"""Command-line entry point: qtlp-plot plot --kind K --in CSV --out PNG."""

import argparse
import sys

from .plots import PLOT_KINDS, PlotSpec, render


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="qtlp-plot",
        description="Render a qtlp diagnostics CSV to a static image.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    plot = commands.add_parser("plot", help="render one plot kind")
    plot.add_argument("--kind", required=True, choices=PLOT_KINDS,
                      help="which figure to draw")
    plot.add_argument("--in", dest="input_csv", required=True, metavar="CSV",
                      help="diagnostics CSV written by a solver run")
    plot.add_argument("--out", dest="output_image", required=True, metavar="PNG",
                      help="image file to write")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    spec = PlotSpec(args.input_csv, args.output_image, args.kind)
    try:
        render(spec)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {spec.output_image}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
