"""Command-line entry point.

Examples
--------
Run one verification suite and print its JSON report::

    hyperbloch --suite geometry --n 3 --seed 0

Run every suite and write CSV::

    hyperbloch --suite all --format csv --out report.csv

Build and save a lattice, then decompose a test function over it::

    hyperbloch lattice --n 2 --r 0.15 --r-max 0.9 --seed 1 --out lat.txt
    hyperbloch decompose --lattice lat.txt --function poisson --out decomposition.json

The exit status is 0 when every check passes, 1 when some check fails and 2
for usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .atomic import MODES, AtomicConfig, AtomicSystem, certified_radius, decomposition_report, default_test_set
from .errors import ConvergenceError, HyperblochError, InputError
from .lattice import Lattice, build_lattice
from .report import Report, emit
from .suites import GRIDS, SUITES, SuiteConfig, run_suite

TEST_FUNCTIONS = {"constant": 0, "harmonic": 3, "kernel": 7, "poisson": 8, "unbounded": 9}


def _tolerances(items: list[str]) -> dict:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--tol expects NAME=VALUE, got {item!r}")
        out[name] = float(value)
    return out


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _run_suites(args: argparse.Namespace) -> int:
    cfg = SuiteConfig(n=args.n, alpha=args.alpha, t=args.t, seed=args.seed, grid=args.grid,
                      samples=args.samples, r=args.r, r_max=args.r_max, tol=_tolerances(args.tol))
    names = SUITES if args.suite == "all" else (args.suite,)
    reports = [run_suite(name, cfg) for name in names]
    if len(reports) == 1:
        text = emit(reports[0], args.format)
    elif args.format == "json":
        text = json.dumps([r.to_dict() for r in reports], indent=2, allow_nan=False) + "\n"
    else:
        text = reports[0].to_csv() + "".join(r.to_csv().split("\n", 1)[1] for r in reports[1:])
    _write(text, args.out)
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.suite}: {status} ({sum(c.passed for c in r.checks)}/{len(r.checks)} checks)", file=sys.stderr)
    return 0 if all(r.passed for r in reports) else 1


def _lattice(args: argparse.Namespace) -> int:
    lat = build_lattice(args.n, args.r, args.r_max, args.seed)
    _write(lat.to_text(), args.out)
    print(f"{len(lat)} centers, audited covering radius {lat.covering_radius:.6g}", file=sys.stderr)
    return 0


def _decompose(args: argparse.Namespace) -> int:
    if args.lattice:
        lat = Lattice.load(args.lattice)
    else:
        lat = build_lattice(args.n, args.r, args.r_max, args.seed)
    r_cert = args.r_cert if args.r_cert is not None else certified_radius(lat.R_max)
    cfg = AtomicConfig(alpha=args.alpha, t=args.t, mode=args.mode, max_iter=args.max_iter, tol=args.tol,
                       r_cert=r_cert)
    system = AtomicSystem(lat, cfg)
    tests = default_test_set(lat.n, args.seed, args.alpha)
    f = tests[TEST_FUNCTIONS[args.function]]
    status = 0
    try:
        result = system.decompose(f, tests)
    except ConvergenceError as err:
        result = err.result
        status = 1
        print(f"warning: {err}", file=sys.stderr)
    doc = decomposition_report(system, result, args.function)
    doc["converged"] = status == 0
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    print(f"{result.iterations} iterations, reconstruction error {result.reconstruction_error:.3g}", file=sys.stderr)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperbloch", description="Verification suites for hyperbolic-harmonic analysis on the unit ball.")
    parser.add_argument("--suite", choices=SUITES + ("all",), default="all")
    parser.add_argument("--n", type=int, default=3, help="dimension (default 3)")
    parser.add_argument("--alpha", type=float, default=0.0)
    parser.add_argument("--t", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--grid", choices=sorted(GRIDS), default="default")
    parser.add_argument("--samples", type=int, default=10_000)
    parser.add_argument("--r", type=float, default=0.2, help="lattice separation")
    parser.add_argument("--r-max", dest="r_max", type=float, default=0.85, help="lattice truncation radius")
    parser.add_argument("--tol", action="append", default=[], metavar="CHECK=VALUE",
                        help="override the threshold of a named check (repeatable)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--out", default=None, help="output path (default: standard output)")
    sub = parser.add_subparsers(dest="command")

    lat = sub.add_parser("lattice", help="build an r-lattice and write it in text form")
    lat.add_argument("--n", type=int, default=3)
    lat.add_argument("--r", type=float, required=True)
    lat.add_argument("--r-max", dest="r_max", type=float, required=True)
    lat.add_argument("--seed", type=int, default=0)
    lat.add_argument("--out", default=None)

    dec = sub.add_parser("decompose", help="atomic decomposition of a built-in test function")
    dec.add_argument("--lattice", default=None, help="lattice file (otherwise built from --n/--r/--r-max/--seed)")
    dec.add_argument("--n", type=int, default=3)
    dec.add_argument("--r", type=float, default=0.2)
    dec.add_argument("--r-max", dest="r_max", type=float, default=0.85)
    dec.add_argument("--seed", type=int, default=0)
    dec.add_argument("--alpha", type=float, default=0.0)
    dec.add_argument("--t", type=float, default=1.0)
    dec.add_argument("--mode", choices=MODES, default="kernel-bloch")
    dec.add_argument("--function", choices=sorted(TEST_FUNCTIONS), default="poisson")
    dec.add_argument("--tol", type=float, default=1e-4)
    dec.add_argument("--max-iter", dest="max_iter", type=int, default=60)
    dec.add_argument("--r-cert", dest="r_cert", type=float, default=None)
    dec.add_argument("--out", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "lattice":
            return _lattice(args)
        if args.command == "decompose":
            return _decompose(args)
        return _run_suites(args)
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except HyperblochError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
