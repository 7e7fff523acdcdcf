"""Command-line front end.

``rdoa <subcommand> --config CONFIG [--out DIR] [--seed N] [--population]
[--format csv|json]``

On failure a one-line JSON error record (``{"error": ..., "message": ...}``)
is written to stderr and the exit code is nonzero: 1 for a failed run, 2
for bad arguments.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .experiments import load_config, run_experiment

SUBCOMMANDS = {
    "spectrum": "spectrum",
    "sleeve": "sleeve",
    "rmse": "rmse_sweep",
    "characteristics": "characteristics_sweep",
    "multipath": "multipath_grid",
}

EXIT_ERROR = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(json.dumps({"error": "UsageError", "message": message,
                          "usage": self.format_usage().strip()}), file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    parser = _Parser(
        prog="rdoa", description="DoA spectra and experiments on HPD covariance fits.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kind in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True,
                       help="JSON config path or the name of a shipped config "
                            "(e.g. single_source_low_snr)")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=_seed, default=None, help="override the config seed")
        p.add_argument("--population", action="store_true",
                       help="use the population covariance instead of a sample estimate")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def run(args):
    kind = SUBCOMMANDS[args.command]
    config = load_config(args.config)
    if config.kind != kind:
        raise ValueError(f"config {args.config!r} is a {config.kind} experiment, "
                         f"not {kind}")
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    name, text = run_experiment(config, population=True if args.population else None,
                                fmt=args.format)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, name)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        path = run(args)
    except Exception as exc:  # report every failure as a machine-readable record
        record = {"error": type(exc).__name__, "message": str(exc),
                  "subcommand": args.command}
        print(json.dumps(record), file=sys.stderr)
        return EXIT_ERROR
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
