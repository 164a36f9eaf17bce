"""Command-line front end.

::

    rivet run CONFIG
    rivet preset {ct,lshape} [--rho RHO] [--out DIR]
    rivet toy VARIANT [--rho --dt --z0 --t-end --out DIR]

``RIVET_NUM_THREADS`` caps the BLAS/OpenMP thread pools; it is applied
before numpy is imported.  Exit codes: 0 success, 2 configuration or input
error, 3 solver failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

THREAD_ENV = "RIVET_NUM_THREADS"
_POOL_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
              "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

TOY_VARIANTS = {"am": "toy-am", "em": "toy-em", "global": "toy-global",
                "viscous": "toy-viscous", "snap-em": "snap", "snap-local": "snap",
                "snap-global": "snap"}


def apply_thread_limit(environ=os.environ):
    """Copy ``RIVET_NUM_THREADS`` into the usual thread-pool variables.

    Returns the value, or None when it is unset.  Has no effect on pools
    that were already created, so call it before importing numpy.
    """
    n = environ.get(THREAD_ENV)
    if not n:
        return None
    if not n.isdigit() or int(n) < 1:
        raise ValueError(f"{THREAD_ENV} must be a positive integer, got {n!r}")
    for var in _POOL_VARS:
        environ[var] = n
    return int(n)


def build_parser():
    p = argparse.ArgumentParser(prog="rivet", description=(
        "Rate-independent evolution with a time-adaptive arc-length scheme: "
        "model problems and phase-field fracture."))
    p.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment described by a config file")
    r.add_argument("config")

    pr = sub.add_parser("preset", help="run a built-in fracture benchmark")
    pr.add_argument("name", choices=["ct", "lshape"])
    pr.add_argument("--rho", type=float, help="arc-length parameter (T = 100 rho)")
    pr.add_argument("--out", default=None, help="output directory (default: <name>-output)")

    t = sub.add_parser("toy", help="run a model problem")
    t.add_argument("variant", choices=list(TOY_VARIANTS))
    t.add_argument("--rho", type=float)
    t.add_argument("--dt", type=float)
    t.add_argument("--z0", type=float)
    t.add_argument("--t-end", type=float, dest="t_end")
    t.add_argument("--out", default=".", help="output directory (default: .)")
    return p


def _config_from_args(args):
    from .config import build_config, parse_config, preset_config
    if args.command == "run":
        return parse_config(args.config)
    if args.command == "preset":
        return preset_config(args.name, args.rho, args.out or f"{args.name}-output")
    kind = TOY_VARIANTS[args.variant]
    raw = {"experiment": {"kind": kind}, "output": {"dir": args.out}}
    opts = {k: repr(v) for k, v in (("rho", args.rho), ("dt", args.dt), ("t_end", args.t_end))
            if v is not None}
    if kind == "snap":
        opts["variant"] = args.variant.split("-", 1)[1]
        if args.z0 is not None:
            opts["u0"] = repr(args.z0)
        raw["snap"] = opts
    else:
        if args.z0 is not None:
            opts["z0"] = repr(args.z0)
        raw["toy"] = opts
    return build_config(raw)


def main(argv=None):
    try:
        apply_thread_limit()
    except ValueError as exc:
        print(f"rivet: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr)

    from .errors import ConfigError, InputError, NonConvergenceError, SolverError
    from .experiments import declared_outputs, run

    try:
        cfg = _config_from_args(args)
        run(cfg)
    except ConfigError as exc:
        print("rivet: configuration error:", file=sys.stderr)
        for prob in exc.problems:
            print(f"  - {prob}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"rivet: input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"rivet: solver error: {exc}", file=sys.stderr)
        step = getattr(exc, "step", None)
        stage = getattr(exc, "stage", None)
        if step is not None or stage is not None:
            print(f"  step: {step}  stage: {stage}", file=sys.stderr)
        if isinstance(exc, NonConvergenceError) and exc.history:
            print(f"  last residual: {exc.last_residual:.3e}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"rivet: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for f in declared_outputs(cfg):
        logging.getLogger("rivet").info("wrote %s", f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
