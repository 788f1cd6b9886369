"""Command line front end: render sweep CSVs to an image file."""

import argparse
import json
import sys

from .render import PlotDataError, PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render sweep CSVs as a log-log distance-vs-level figure.",
    )
    parser.add_argument("csvs", nargs="*", help="input sweep CSV files")
    parser.add_argument("--spec", default=None, help="JSON file holding the full plot spec")
    parser.add_argument(
        "--labels", default=None, help="comma-separated series labels, one per CSV"
    )
    parser.add_argument("--out", default=None, help="output image path")
    parser.add_argument(
        "--linear-axes",
        action="store_true",
        help="plot on linear axes instead of log-log",
    )
    return parser


def spec_from_args(args) -> PlotSpec:
    if args.spec is not None:
        if args.csvs:
            raise PlotDataError("pass either --spec or positional CSVs, not both")
        with open(args.spec) as fh:
            raw = json.load(fh)
        for key in ("input_csvs", "labels", "output_image"):
            if key not in raw:
                raise PlotDataError(f"plot spec is missing key {key!r}")
        return PlotSpec(
            input_csvs=tuple(raw["input_csvs"]),
            labels=tuple(raw["labels"]),
            output_image=raw["output_image"],
            log_axes=bool(raw.get("log_axes", True)),
        )
    if not args.csvs:
        raise PlotDataError("no input CSVs given (positional arguments or --spec)")
    if args.out is None:
        raise PlotDataError("--out PATH is required with positional CSVs")
    if args.labels is not None:
        labels = tuple(s.strip() for s in args.labels.split(","))
    else:
        labels = tuple(args.csvs)
    return PlotSpec(
        input_csvs=tuple(args.csvs),
        labels=labels,
        output_image=args.out,
        log_axes=not args.linear_axes,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = spec_from_args(args)
        render(spec)
    except (PlotDataError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"figure written to {spec.output_image}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
