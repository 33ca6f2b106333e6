"""Command-line front end: ``otbary {barycenter,distance,verify}``.

Exit codes: 0 success, 1 failed verification, 2 unreadable or malformed
input (the message names the file), 3 inputs of different resolution.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import wdha
from .dual import solve_w2
from .errors import OTBaryError
from .grid import GridSpec, normalize
from .io import FormatError, mass_to_pgm, read_grid_file, write_csv, write_pgm
from .verify import SUITES, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_IO, EXIT_RESOLUTION = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _json_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=True) + "\n"


def load_measures(paths, floor_eps: float = 0.0):
    """Read every input, check they share one square grid, normalize to mass 1."""
    arrays = []
    for p in paths:
        try:
            raw = read_grid_file(p)
        except FormatError as err:
            raise CliError(str(err), EXIT_IO) from err
        if raw.ndim == 2 and raw.shape[0] != raw.shape[1]:
            raise CliError(f"{p}: grid must be square, got {raw.shape[0]}x{raw.shape[1]}", EXIT_IO)
        if raw.shape[0] < 3:
            raise CliError(f"{p}: need at least 3 points per axis", EXIT_IO)
        arrays.append((p, raw))
    first_path, first = arrays[0]
    for p, a in arrays[1:]:
        if a.shape != first.shape:
            raise CliError(f"{p}: resolution {a.shape} differs from {first_path} {first.shape}",
                           EXIT_RESOLUTION)
    grid = GridSpec(first.ndim, first.shape[0])
    measures = []
    for p, a in arrays:
        try:
            measures.append(normalize(a, floor_eps, grid))
        except OTBaryError as err:
            raise CliError(f"{p}: {err}", EXIT_IO) from err
    return grid, measures


def _write_outputs(paths, mass: np.ndarray) -> None:
    for out in paths:
        suffix = Path(out).suffix.lower()
        if suffix == ".pgm":
            write_pgm(out, mass_to_pgm(mass))
        elif suffix == ".csv":
            write_csv(out, mass)
        else:
            raise CliError(f"{out}: output must end in .pgm or .csv", EXIT_IO)


def cmd_barycenter(args) -> int:
    _, measures = load_measures(args.inputs, args.floor_eps)
    config = wdha.WdhaConfig(
        iters=args.iters, tau_schedule=args.tau_schedule, tau0=args.tau0, eta0=args.eta0,
        eta_decay=args.eta_decay, split_k=args.split_k,
        threads=1 if args.deterministic else args.threads,
    )
    report_file = open(args.report, "w") if args.report else None
    try:
        def emit(report):
            if report_file is not None:
                report_file.write(_json_line(report.to_dict()))
                report_file.flush()

        result = wdha.run(measures, config, callback=emit)
    finally:
        if report_file is not None:
            report_file.close()
    _write_outputs(args.out, result.barycenter.mass)
    last = result.reports[-1]
    print(f"iters={last.t} objective={last.objective!r} stationarity={last.stationarity!r}")
    return EXIT_OK


def cmd_distance(args) -> int:
    _, (nu, mu) = load_measures([args.a, args.b], args.floor_eps)
    res = solve_w2(nu, mu, iters=args.iters, eta0=args.eta0, decay=args.eta_decay, split_k=args.split_k)
    if args.report:
        with open(args.report, "w") as fh:
            for k, v in enumerate(res.trace):
                fh.write(_json_line({"iter": k, "dual_value": v}))
    print(repr(res.w2_squared))
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_suite(args.suite, args.seed)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otbary", description="Wasserstein barycenters on regular grids.")
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(p, eta_default):
        p.add_argument("--iters", type=int, default=300)
        p.add_argument("--eta0", type=float, default=eta_default)
        p.add_argument("--eta-decay", type=float, default=0.99)
        p.add_argument("--split-k", type=int, default=4)
        p.add_argument("--floor-eps", type=float, default=0.0)
        p.add_argument("--report", help="JSON-lines trace destination")

    bary = sub.add_parser("barycenter", help="barycenter of PGM/CSV inputs")
    bary.add_argument("inputs", nargs="+")
    solver_flags(bary, 0.05)
    bary.add_argument("--tau-schedule", choices=wdha.SCHEDULES, default="exp")
    bary.add_argument("--tau0", type=float, default=1.0)
    bary.add_argument("--threads", type=int, default=1)
    bary.add_argument("--deterministic", action="store_true", help="sequential reductions")
    bary.add_argument("--out", action="append", default=[], help=".pgm or .csv path (repeatable)")
    bary.set_defaults(func=cmd_barycenter)

    dist = sub.add_parser("distance", help="W2^2 (half-squared cost) between two inputs")
    dist.add_argument("a")
    dist.add_argument("b")
    solver_flags(dist, 0.05)
    dist.set_defaults(func=cmd_distance)

    ver = sub.add_parser("verify", help="oracle cross-checks")
    ver.add_argument("suite", choices=SUITES + ("all",))
    ver.add_argument("--seed", type=int, default=0)
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as err:
        print(f"otbary: {err}", file=sys.stderr)
        return err.code
    except OSError as err:
        print(f"otbary: {err.filename}: {err.strerror}", file=sys.stderr)
        return EXIT_IO
    except ValueError as err:
        print(f"otbary: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
