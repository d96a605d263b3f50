"""Command line entry point: ``avgcase {run,quadrature,rates,compare}``."""

from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .config import load_config
from .errors import AvgCaseError, ConfigError
from .harness import (
    DEFAULT_RATE_METHODS,
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RUNTIME,
    cmd_compare,
    cmd_quadrature,
    cmd_rates,
    cmd_run,
    format_table,
    heatmap_csv,
    rates_csv,
)


def _fraction(text):
    try:
        return Fraction(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _emit(text, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _do_run(args):
    config = load_config(args.config)
    manifest, code = cmd_run(config, args.output_dir, args.workers)
    out = Path(args.output_dir or config.output_dir) / "manifest.json"
    n_bad = sum(r["status"] != "ok" for r in manifest["runs"])
    print(f"{len(manifest['runs'])} runs, {n_bad} failed; manifest: {out}")
    for row in manifest["summary"]:
        s = row["slopes"]["fgap"]
        th = row["theory"]["fgap"]
        slope = "-" if s is None else f"{s['mean']:.3f} +/- {s['std']:.3f}"
        theory = "-" if th is None else f"{th['exponent']:g}" + (" (log)" if th["log_factor"] else "")
        print(f"  {row['problem']:<10} {row['method']:<28} fgap slope {slope:<18} theory {theory}")
    return code


def _do_quadrature(args):
    ls = tuple(args.l) if args.l else (0, 1, 2)
    _emit(cmd_quadrature(args.dist, args.method, args.T, ls, args.nodes), args.output)
    return EXIT_OK


def _do_rates(args):
    if args.grid:
        _emit(heatmap_csv(args.tau, args.xi, args.l, args.grid, args.lo, args.hi), args.output)
        return EXIT_OK
    rows = cmd_rates(args.tau, args.xi, args.method or DEFAULT_RATE_METHODS, args.l)
    if args.format == "csv":
        _emit(rates_csv(rows), args.output)
    else:
        _emit(format_table(rows, ["method", "rate", "regime", "worst_exponent"]) + "\n", args.output)
    return EXIT_OK


def _do_compare(args):
    try:
        manifest = json.loads(Path(args.manifest).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest {args.manifest}: {exc}") from None
    report, code = cmd_compare(manifest, args.tol, args.log_tol, args.metric)
    if report:
        print(format_table(report, ["problem", "method", "theory", "log_factor", "slope", "delta", "status"]))
    else:
        print("empty manifest: nothing to compare")
    return code


# lets "--xi -1/2" parse as a value rather than an option
_NEGATIVE = re.compile(r"^-\d+$|^-\d*\.\d+$|^-\d+/\d+$")


def build_parser():
    p = argparse.ArgumentParser(prog="avgcase", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a simulation suite from a TOML config")
    r.add_argument("--config", required=True)
    r.add_argument("--output-dir", help="override run.output_dir")
    r.add_argument("--workers", type=int, help="override run.workers")
    r.set_defaults(func=_do_run)

    q = sub.add_parser("quadrature", help="expected metrics per iteration by quadrature")
    q.add_argument("--dist", required=True, help="e.g. beta:tau=1/2,xi=-1/2  mp:r=1  gamma:alpha=0")
    q.add_argument("--method", required=True, help="e.g. gcm:alpha=1/2,beta=3/2  nesterov  gd  laguerre:alpha=2")
    q.add_argument("-T", type=int, required=True)
    q.add_argument("-l", type=int, action="append", choices=(0, 1, 2), help="objective(s); default all")
    q.add_argument("--nodes", type=int, help="quadrature nodes (default max(400, 4T))")
    q.add_argument("-o", "--output")
    q.set_defaults(func=_do_quadrature)

    t = sub.add_parser("rates", help="theoretical exponents at edge exponents (tau, xi)")
    t.add_argument("--tau", type=_fraction, required=True)
    t.add_argument("--xi", type=_fraction, required=True)
    t.add_argument("-l", type=int, default=1, choices=(1, 2), help="1: function gap, 2: gradient norm")
    t.add_argument("--method", action="append", help="method spec or 'optimal'; repeatable")
    t.add_argument("--format", choices=("text", "csv"), default="text")
    t.add_argument("--grid", type=int, metavar="N", help="emit an N x N (alpha, beta) heatmap CSV")
    t.add_argument("--lo", type=_fraction, default=Fraction(-1))
    t.add_argument("--hi", type=_fraction, default=Fraction(4))
    t.add_argument("-o", "--output")
    t.set_defaults(func=_do_rates)

    c = sub.add_parser("compare", help="check fitted slopes in a manifest against theory")
    c.add_argument("--manifest", required=True)
    c.add_argument("--tol", type=float, default=0.25)
    c.add_argument("--log-tol", type=float, help="tolerance for rates with a log factor (default --tol)")
    c.add_argument("--metric", choices=("fgap", "gradsq"), default="fgap")
    c.set_defaults(func=_do_compare)
    for parser in (p, r, q, t, c):
        parser._negative_number_matcher = _NEGATIVE
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AvgCaseError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
