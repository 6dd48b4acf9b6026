"""Command-line front end.

Exit codes: 0 success, 1 property violation, 2 input error, 3 degenerate instance.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import catalog, efficiency, suites
from .errors import CournotError, DegenerateInstanceError, DomainError, InstanceError
from .model import instance_from_json

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2, 3


def _emit(text: str, out: str) -> None:
    if out in ("-", ""):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _fail(code: int, msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


# --- analyze --------------------------------------------------------------

def cmd_analyze(args) -> int:
    try:
        with open(args.instance) as fh:
            inst = instance_from_json(fh.read())
    except OSError as exc:
        return _fail(EXIT_INPUT, f"cannot read {args.instance}: {exc}")
    except (InstanceError, DomainError) as exc:
        return _fail(EXIT_INPUT, str(exc))
    try:
        result = efficiency.analyze(inst)
    except DegenerateInstanceError as exc:
        return _fail(EXIT_DEGENERATE, str(exc))
    except CournotError as exc:
        return _fail(EXIT_INPUT, f"{type(exc).__name__}: {exc}")
    data = result.to_dict()
    _emit(json.dumps(data, indent=2) + "\n", args.out)
    return EXIT_VIOLATION if data["violations"] else EXIT_OK


# --- sweep ----------------------------------------------------------------

def sweep_points(start: float, stop: float, step: float) -> np.ndarray:
    if not step > 0:
        raise DomainError("step must be positive")
    if stop < start:
        raise DomainError("empty range: --to is below --from")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


def sweep_rows(curve: str, start: float, stop: float, step: float) -> list[tuple[float, ...]]:
    pts = sweep_points(start, stop, step)
    if curve == "g":
        if start < 0.5 or stop > 1.0:
            raise DomainError("g is swept over beta in [1/2, 1]")
        return [(b, efficiency.bound_g(b)) for b in pts]
    if curve in ("f", "mono"):
        if start < 1.0:
            raise DomainError(f"{curve} is swept over cbar >= 1")
        if curve == "f":
            return [(c, efficiency.bound_f(c)) for c in pts]
        return [(c, efficiency.bound_mono(c), efficiency.bound_f(c)) for c in pts]
    raise DomainError(f"unknown curve {curve!r}")


def format_csv(rows: Sequence[tuple[float, ...]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    width = len(rows[0]) if rows else 2
    w.writerow(["param", "value", "value2"][:width])
    for r in rows:
        w.writerow([f"{v:.17g}" for v in r])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    try:
        rows = sweep_rows(args.curve, args.start, args.stop, args.step)
    except DomainError as exc:
        return _fail(EXIT_INPUT, str(exc))
    _emit(format_csv(rows), args.out)
    return EXIT_OK


# --- catalog --------------------------------------------------------------

def _params(args) -> dict:
    params = {}
    if args.n is not None:
        params["N"] = args.n
    if args.m is not None:
        params["M"] = args.m
    for item in args.param or []:
        key, _, val = item.partition("=")
        if not _:
            raise InstanceError(f"--param expects key=value, got {item!r}")
        params[key] = float(val)
    return params


def cmd_catalog(args) -> int:
    if args.action == "list":
        _emit("\n".join(catalog.NAMES) + "\n", "-")
        return EXIT_OK
    if not args.name:
        return _fail(EXIT_INPUT, "catalog export needs --name")
    try:
        entry = catalog.example(args.name, **_params(args))
    except (InstanceError, DomainError) as exc:
        return _fail(EXIT_INPUT, str(exc))
    payload = entry.to_dict() if args.full else entry.instance.to_dict()
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


# --- verify ---------------------------------------------------------------

def cmd_verify(args) -> int:
    if args.suite == "paper-examples":
        result = suites.run_worked_examples()
    else:
        families = tuple(args.families.split(",")) if args.families else catalog.CONVEX_FAMILIES
        bad = [f for f in families if f not in catalog.ALL_FAMILIES]
        if bad:
            return _fail(EXIT_INPUT, f"unknown families {bad}; choose from {catalog.ALL_FAMILIES}")
        if args.count < 1:
            return _fail(EXIT_INPUT, "--count must be positive")
        result = suites.run_random(args.seed, args.count, families)
    print(result.summary())
    if args.json:
        _emit(json.dumps(result.to_dict(), indent=2) + "\n", args.json)
    if not result.ok:
        for v in result.violations:
            print(json.dumps({"check": v.check, "instance": v.instance}), file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cournot", description=__doc__.splitlines()[0])
    p.add_argument("--tol", type=float, help="residual tolerance (overrides COURNOT_TOL)")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="solve an instance and report efficiency and bounds")
    a.add_argument("--instance", required=True)
    a.add_argument("--out", default="-")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sweep", help="write a bound curve as CSV")
    s.add_argument("--curve", choices=("g", "f", "mono"), required=True)
    s.add_argument("--from", dest="start", type=float, required=True)
    s.add_argument("--to", dest="stop", type=float, required=True)
    s.add_argument("--step", type=float, required=True)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("catalog", help="list or export worked examples")
    c.add_argument("action", choices=("export", "list"))
    c.add_argument("--name")
    c.add_argument("--n", type=int)
    c.add_argument("--m", type=float)
    c.add_argument("--param", action="append", help="extra numeric parameter, key=value")
    c.add_argument("--full", action="store_true", help="include known allocations and efficiencies")
    c.add_argument("--out", default="-")
    c.set_defaults(func=cmd_catalog)

    v = sub.add_parser("verify", help="run the regression or random property suite")
    v.add_argument("--suite", choices=("paper-examples", "random"), required=True)
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--count", type=int, default=500)
    v.add_argument("--families", help=f"comma list from {','.join(catalog.ALL_FAMILIES)}")
    v.add_argument("--json", help="write the full suite result here")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.tol is not None:
        if not args.tol > 0:
            return _fail(EXIT_INPUT, "--tol must be positive")
        os.environ["COURNOT_TOL"] = repr(args.tol)
    try:
        return args.func(args)
    except DegenerateInstanceError as exc:
        return _fail(EXIT_DEGENERATE, str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
