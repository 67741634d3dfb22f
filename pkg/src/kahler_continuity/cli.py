"""Command-line interface.

Exit codes: 0 completed (or verification passed), 1 configuration error,
2 breakdown detected near the maximal time, 3 solver or I/O failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import continuation as co
from . import io
from .class_tracker import class_path, degeneration_type
from .config import load_config
from .errors import ConfigError, ContinuityError
from .ma_core import MAProblem, newton_solve

EXIT_OK, EXIT_CONFIG, EXIT_BREAKDOWN, EXIT_FAILURE = 0, 1, 2, 3


def _fmt(x):
    return "inf" if math.isinf(x) else f"{x:.10g}"


def cmd_solve(args):
    cfg = load_config(args.config)
    out = args.out or cfg.out_dir
    if not out:
        raise ConfigError("no output directory (use --out or output.dir)")
    record = co.run(cfg)
    try:
        io.write_outputs(record, out, cfg)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    t_final = record.last_state.t if record.last_state is not None else float("nan")
    if record.termination == co.REACHED_TMAX:
        print(f"reached t_max = {_fmt(t_final)} after {len(record.rows)} steps")
        return EXIT_OK
    if record.termination == co.BREAKDOWN:
        T = record.extrapolated_T
        print(f"breakdown after t = {_fmt(t_final)}; extrapolated_T = {_fmt(T) if T is not None else 'n/a'}")
        return EXIT_BREAKDOWN
    print(f"error: solver failure at t = {_fmt(t_final)}: {record.message}", file=sys.stderr)
    return EXIT_FAILURE


def cmd_verify(args):
    from .verify import run_suite

    results = run_suite(args.suite, args.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
    failed = sum(not ok for _, ok, _ in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAILURE


def cmd_bootstrap(args):
    cfg = load_config(args.config)
    geom = cfg.build_geometry()
    gauge = cfg.build_gauge(geom)
    p = MAProblem(geom, gauge, 0.0)
    try:
        res = co.picard_bootstrap(p, args.t)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    except co.NoContraction as exc:
        print(f"no contraction at t = {args.t:g}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    newton = newton_solve(p.at(args.t), co.initial_solution(p), 1e-12)
    print(f"t = {args.t:.6g}")
    print(f"iterations = {res.iterations}")
    for i, r in enumerate(res.ratios, start=2):
        print(f"ratio[{i}] = {r:.6e}")
    print(f"contraction_ratio = {res.contraction_ratio:.6e}")
    print(f"max |u_picard - u_newton| = {np.max(np.abs(res.u - newton.u)):.3e}")
    return EXIT_OK


def cmd_track(args):
    cfg = load_config(args.config)
    geom = cfg.build_geometry()
    gauge = cfg.build_gauge(geom)
    cp = class_path(geom, gauge)
    coeffs = cp.volume_coeffs
    poly = " ".join(
        (f"{c:+.10g}" if k == 0 else f"{c:+.10g}*t" if k == 1 else f"{c:+.10g}*t^{k}")
        for k, c in enumerate(coeffs)
    )
    print(f"T = {_fmt(cp.T)}")
    print(f"V(t) = {poly}")
    print(f"degeneration = {degeneration_type(geom, gauge)}")
    t_end = cp.T if math.isfinite(cp.T) else cfg.t_max
    print("t,V")
    for t in np.linspace(0.0, t_end, 11):
        print(f"{t:.10g},{cp.volume(t):.10g}")
    if args.json:
        print(json.dumps(cp.as_dict(), sort_keys=True))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="kahler-continuity",
                                     description="Continuity-method solver for omega = omega_0 - t Ric(omega).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the continuation and write outputs")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run built-in property suites")
    p.add_argument("--suite", choices=("geometry", "ma", "monitors", "bootstrap", "all"), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bootstrap", help="small-t Picard iteration study")
    p.add_argument("--config", required=True)
    p.add_argument("--t", type=float, required=True)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("track", help="print T, V(t) and the degeneration type")
    p.add_argument("--config", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_track)
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContinuityError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
