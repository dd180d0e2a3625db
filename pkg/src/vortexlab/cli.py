"""Command line entry points.

    vortexlab vortex solve --zeros Z.json --r 64 [--h H] [--R R] --out field.csv
    vortexlab pipeline run --config run.json --out DIR
    vortexlab measure approx --measure M.json --cell-radius 0.2 [--denominator-cap 1000]
    vortexlab report summarize --dir DIR

Each command prints a JSON object to stdout. The exit status is 0 when every
pass/fail boolean in it is true, 1 when some check fails and 2 on an error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .errors import LabError
from .measure import DiskMeasure, dirac_approximate
from .pipeline import ConfigError, export, parse_config, run_pipeline, summarize
from .vortex import GridSpec, ZeroConfig, default_outer_radius, dump_field, solve_vortex, total_energy


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise LabError("io-error", f"{path}: {exc.strerror}") from None


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise LabError("io-error", f"{path}: {exc.strerror}") from None


def _grid(r, h, R):
    if h is None:
        return GridSpec.for_r(r, R=R)
    R = default_outer_radius(r) if R is None else R
    n = int(math.ceil(2 * R / h - 1e-9))
    n += 1 - n % 2
    return GridSpec(float(R), n)


def cmd_vortex_solve(args):
    zeros = ZeroConfig.from_dict(json.loads(_read(args.zeros)))
    f = solve_vortex(zeros, args.r, _grid(args.r, args.h, args.R), tol=args.tol)
    _write(args.out, dump_field(f))
    E = total_energy(f)
    target = 2 * math.pi * f.N
    ratio = E / target if target else float("nan")
    checks = {"converged": f.residual <= args.tol,
              "energy_quantized": bool(target and abs(ratio - 1) <= 0.01),
              "u_nonpositive": float(np.max(f.u)) <= args.tol}
    return {"r": f.r, "N": f.N, "h": f.grid.h, "R": f.grid.R, "iterations": f.iterations,
            "residual": f.residual, "energy": E, "energy_ratio": ratio, "checks": checks}, checks


def cmd_pipeline_run(args):
    cfg = parse_config(_read(args.config))
    base = os.path.dirname(os.path.abspath(args.config))
    log = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    art = run_pipeline(cfg, base_dir=base, log=log)
    export(art, args.out)
    return art.summary, art.summary["flags"]


def cmd_measure_approx(args):
    m = DiskMeasure.from_json(_read(args.measure))
    a = dirac_approximate(m, args.cell_radius, args.denominator_cap)
    return a.to_dict(), {}


def cmd_report_summarize(args):
    out = summarize(args.dir)
    checks = dict(out["flags"])
    checks["consistent_with_stored"] = bool(out["consistent"])
    return out, checks


def build_parser():
    p = argparse.ArgumentParser(prog="vortexlab", description=__doc__.splitlines()[0])
    groups = p.add_subparsers(dest="group", required=True)

    vortex = groups.add_parser("vortex").add_subparsers(dest="command", required=True)
    q = vortex.add_parser("solve", help="solve the scalar vortex equation")
    q.add_argument("--zeros", required=True, help="JSON zero configuration")
    q.add_argument("--r", required=True, type=float, help="strength r >= 1")
    q.add_argument("--h", type=float, default=None, help="grid spacing (default compliant)")
    q.add_argument("--R", type=float, default=None, help="half-width of the square")
    q.add_argument("--tol", type=float, default=1e-8)
    q.add_argument("--out", required=True, help="field dump path")
    q.set_defaults(func=cmd_vortex_solve)

    pipe = groups.add_parser("pipeline").add_subparsers(dest="command", required=True)
    q = pipe.add_parser("run", help="run a configured construction and export it")
    q.add_argument("--config", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("-v", "--verbose", action="store_true")
    q.set_defaults(func=cmd_pipeline_run)

    meas = groups.add_parser("measure").add_subparsers(dest="command", required=True)
    q = meas.add_parser("approx", help="Dirac approximation of a measure")
    q.add_argument("--measure", required=True)
    q.add_argument("--cell-radius", required=True, type=float)
    q.add_argument("--denominator-cap", type=int, default=1000)
    q.set_defaults(func=cmd_measure_approx)

    rep = groups.add_parser("report").add_subparsers(dest="command", required=True)
    q = rep.add_parser("summarize", help="recompute pass/fail flags of an exported run")
    q.add_argument("--dir", required=True)
    q.set_defaults(func=cmd_report_summarize)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        payload, checks = args.func(args)
    except ConfigError as exc:
        for ptr, msg in exc.errors:
            print(f"{ptr}: {msg}", file=sys.stderr)
        return 2
    except (LabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(payload, sort_keys=True, indent=1, default=float))
    return 0 if all(checks.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
