"""CLI entry point for freqband."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from freqband import __version__
from freqband.commands import RunConfig, run
from freqband.dataio import read_document
from freqband.errors import EXIT_OK, FreqbandError, UsageError
from freqband.simgen import SCHEMES, TABLES


def _add_output(parser: argparse.ArgumentParser, required: bool = False) -> None:
    parser.add_argument(
        "-o",
        "--output",
        required=required,
        help="Output file (default: stdout)" if not required else "Output file",
    )


def _add_detection(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-i", "--input", required=True, help="CSV file, rows = time")
    parser.add_argument("--sampling-rate", type=float, help="Samples per second (reports Hz)")
    parser.add_argument("--alpha", type=float, default=0.05, help="Significance level")
    parser.add_argument("--resamples", type=int, default=100, help="Bootstrap resamples R")
    parser.add_argument("--stride", type=int, default=1, help="Time-grid step in samples")
    parser.add_argument("--wmin-div", type=int, default=8, help="W_min = N / this (default: 8)")
    parser.add_argument("--wmax-div", type=int, default=4, help="W_max = N / this (default: 4)")
    parser.add_argument("--workers", type=int, help="Bootstrap threads (default: physical cores)")


def _add_seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="Base random seed (default: 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqband",
        description="Frequency band estimation for multivariate nonstationary time series",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log progress (-v) or debugging detail (-vv) to stderr",
    )
    parser.add_argument(
        "--from-config",
        metavar="FILE",
        help="Re-run the command recorded in a previous result document",
    )
    parser.add_argument(
        "--rerun-output",
        metavar="FILE",
        help="With --from-config, write to FILE instead of the recorded output",
    )
    parser.add_argument(
        "-V",
        "--version",
        action="version",
        version=f"freqband {__version__}",
    )
    commands = parser.add_subparsers(dest="command")

    detect = commands.add_parser("detect", help="Estimate frequency band partition points")
    _add_detection(detect)
    _add_seed(detect)
    _add_output(detect)
    detect.add_argument("--curves", help="CSV file for the per-scale discrepancy curves")
    detect.add_argument("--scales", type=int, default=5, help="Number of scales (default: 5)")
    detect.add_argument(
        "--widths", type=int, nargs="+", help="Explicit neighborhood widths W (in bins)"
    )
    detect.add_argument(
        "--attribute", action="store_true", help="Attribute every detected point to components"
    )

    components = commands.add_parser("components", help="Component p-values at given frequencies")
    _add_detection(components)
    _add_seed(components)
    _add_output(components)
    components.add_argument(
        "--omega",
        type=float,
        action="append",
        required=True,
        help="Frequency in cycles/sample (repeatable; snapped to the k/N grid)",
    )
    components.add_argument("--width", type=int, help="Neighborhood width W (default: N/wmin-div)")

    simulate = commands.add_parser("simulate", help="Write a simulated series and its truth")
    group = simulate.add_mutually_exclusive_group(required=True)
    group.add_argument("--scheme", choices=SCHEMES, help="Named simulation scheme")
    group.add_argument("--scheme-file", help="JSON scheme definition")
    simulate.add_argument("--T", type=int, help="Series length")
    simulate.add_argument("--p", type=int, help="Number of channels")
    _add_seed(simulate)
    _add_output(simulate, required=True)

    bench = commands.add_parser("bench", help="Replicate a simulation result table")
    bench.add_argument("--table", type=int, required=True, choices=sorted(TABLES))
    bench.add_argument("--reps", type=int, default=20, help="Replications per cell (default: 20)")
    bench.add_argument(
        "--scheme", choices=SCHEMES, action="append", help="Restrict to schemes (repeatable)"
    )
    bench.add_argument("--T", type=int, help="Restrict to one series length")
    bench.add_argument("--p", type=int, help="Restrict to one channel count")
    bench.add_argument("--zeta-div", type=int, help="Detection radius 1/this (default per table)")
    bench.add_argument("--alpha", type=float, default=0.05, help="Significance level")
    bench.add_argument("--resamples", type=int, default=100, help="Bootstrap resamples R")
    bench.add_argument("--stride", type=int, default=1, help="Time-grid step in samples")
    bench.add_argument("--wmin-div", type=int, default=8, help="W_min = N / this (default: 8)")
    bench.add_argument("--wmax-div", type=int, default=4, help="W_max = N / this (default: 4)")
    bench.add_argument("--scales", type=int, default=5, help="Number of scales (default: 5)")
    bench.add_argument("--workers", type=int, help="Bootstrap threads (default: physical cores)")
    bench.add_argument("--live", action="store_true", help="Show a live dashboard")
    _add_seed(bench)
    _add_output(bench)
    return parser


# argparse dests copied onto RunConfig, with the few that are named differently there
OPTIONS = (
    "input", "output", "curves", "sampling_rate", "alpha", "resamples", "seed", "stride",
    "wmin_div", "wmax_div", "scales", "width", "scheme_file", "T", "p", "table", "reps",
    "zeta_div", "workers",
)
OPTION_FIELDS = {"wmin_div": "w_min_div", "wmax_div": "w_max_div", "scales": "n_scales"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Translate parsed arguments into a RunConfig; options a command lacks keep defaults."""
    given = {key: value for key, value in vars(args).items() if value is not None}
    schemes = given.get("scheme", ())
    if isinstance(schemes, str):
        schemes = (schemes,)
    options = {OPTION_FIELDS.get(arg, arg): value for arg, value in given.items() if arg in OPTIONS}
    return RunConfig(
        command=args.command,
        widths=tuple(given.get("widths", ())),
        omegas=tuple(given.get("omega", ())),
        attribute=bool(given.get("attribute")),
        live=bool(given.get("live")),
        schemes=tuple(schemes),
        **options,
    )


def load_config(path: str) -> RunConfig:
    document = read_document(path)
    if "config" not in document:
        raise UsageError(f"{path} has no embedded configuration")
    return RunConfig.from_dict(document["config"])


def setup_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: list[str] | None = None) -> None:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    try:
        if args.from_config:
            cfg = load_config(args.from_config)
            if args.rerun_output:
                cfg = replace(cfg, output=args.rerun_output)
        elif args.command:
            cfg = config_from_args(args)
        else:
            parser.error("a command is required (detect, components, simulate, bench)")
        run(cfg)
    except FreqbandError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        sys.exit(exc.exit_code)
    except KeyboardInterrupt:
        sys.exit(130)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
