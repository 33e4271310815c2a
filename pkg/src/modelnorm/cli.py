"""Command-line front end.

    modelnorm norm SPEC --alpha RE,IM
    modelnorm verify --seed 42 --count 5
    modelnorm transfer SPEC --target {recenter,upper,right} [--alpha RE,IM]

Exit codes: 0 pass, 1 invalid input, 2 tolerance failure.  Reports are JSON
on stdout (and in ``--json-out`` when given); complex numbers are ``[re, im]``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from modelnorm import __version__
from modelnorm.basicop import verify_norm
from modelnorm.debranges import build_space, verify_debranges
from modelnorm.debranges import from_json as debranges_from_json
from modelnorm.domains import DomainKind, boundary_grid
from modelnorm.errors import ConvergenceError, ModelNormError
from modelnorm.inner import from_json as inner_from_json
from modelnorm.instances import random_bp, random_point
from modelnorm.modelspace import build_basis
from modelnorm.transfer import transfer_map, transfer_report

log = logging.getLogger("modelnorm")

EXIT_OK, EXIT_INVALID, EXIT_TOLERANCE = 0, 1, 2
NORM_TOL = 1e-8
TRANSFER_TOL = 1e-9
IDENTITY_TOL = 1e-10
MS = tuple(range(1, 4))
NS = tuple(range(1, 7))


class InvalidInput(Exception):
    """Bad command-line input (exit code 1)."""


def parse_complex(text: str) -> complex:
    """``"RE,IM"`` or ``"RE"``."""
    parts = [p.strip() for p in str(text).split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise InvalidInput(f"cannot parse complex number {text!r}; expected RE,IM")


def _pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def load_spec(path: str) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InvalidInput(f"cannot read spec file {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"spec file {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise InvalidInput("spec must be a JSON object")
    return obj


def _alpha_from(args, spec: dict, default: complex | None = None) -> complex:
    if args.alpha is not None:
        return parse_complex(args.alpha)
    if "alpha" in spec:
        a = spec["alpha"]
        return complex(float(a[0]), float(a[1])) if isinstance(a, list) else parse_complex(a)
    if default is not None:
        return default
    raise InvalidInput("no alpha given (use --alpha RE,IM or an \"alpha\" entry in the spec)")


def _grid(kind: DomainKind, grid_n: int | None):
    return None if grid_n is None else boundary_grid(kind, grid_n)


def emit(report: dict, json_out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if json_out:
        Path(json_out).write_text(text + "\n")


def cmd_norm(args) -> int:
    spec = load_spec(args.spec)
    t0 = time.perf_counter()
    if "e_plus" in spec:
        matrix = debranges_from_json(spec)
        alpha = _alpha_from(args, spec)
        space = build_space(matrix, _grid(matrix.kind, args.grid_n))
        rep = verify_debranges(matrix, alpha, space).as_dict()
        rep["kind"] = "debranges"
        instance = matrix.to_json()
    else:
        theta = inner_from_json(spec)
        alpha = _alpha_from(args, spec)
        rep = verify_norm(theta, alpha, grid=_grid(theta.kind, args.grid_n), tol_sv=args.tol_sv, tol_rank=args.tol_rank).as_dict()
        rep["kind"] = "inner"
        instance = theta.to_json()
    rep.update(
        instance=instance,
        alpha=_pair(alpha),
        tol=args.tol,
        wall_time=time.perf_counter() - t0,
        version=__version__,
    )
    rep["pass"] = bool(rep["abs_diff"] < args.tol)
    emit(rep, args.json_out)
    return EXIT_OK if rep["pass"] else EXIT_TOLERANCE


def _verify_instance(task: tuple) -> dict:
    kind_value, m, n, seed, key, grid_n = task
    kind = DomainKind(kind_value)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))
    theta = random_bp(rng, kind, m, n)
    alpha = random_point(rng, kind)
    grid = None if grid_n is None else boundary_grid(kind, grid_n)
    r = verify_norm(theta, alpha, grid=grid)
    return {"abs_diff": r.abs_diff, "identity_residual": r.identity_residual}


def verify_tasks(seed: int, count: int, grid_n: int | None = None) -> list[tuple]:
    """One task per instance; instance ``j`` of cell ``c`` uses ``SeedSequence(seed, spawn_key=(c, j))``."""
    cells = [(k, m, n) for k in DomainKind for m in MS for n in NS]
    return [
        (kind.value, m, n, seed, (c, j), grid_n)
        for c, (kind, m, n) in enumerate(cells)
        for j in range(count)
    ]


def run_verify(seed: int, count: int, jobs: int = 1, grid_n: int | None = None, tol: float = NORM_TOL) -> dict:
    tasks = verify_tasks(seed, count, grid_n)
    if jobs > 1 and tasks:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_verify_instance, tasks, chunksize=4))
    else:
        results = [_verify_instance(t) for t in tasks]
    cells = {}
    for (kind, m, n, *_), res in zip(tasks, results):
        cell = cells.setdefault((kind, m, n), {"domain": kind, "m": m, "n": n, "instances": 0, "max_abs_diff": 0.0, "max_identity_residual": 0.0})
        cell["instances"] += 1
        cell["max_abs_diff"] = max(cell["max_abs_diff"], res["abs_diff"])
        cell["max_identity_residual"] = max(cell["max_identity_residual"], res["identity_residual"])
    cell_list = list(cells.values())
    max_diff = max((c["max_abs_diff"] for c in cell_list), default=0.0)
    max_ident = max((c["max_identity_residual"] for c in cell_list), default=0.0)
    return {
        "seed": seed,
        "count": count,
        "tol": tol,
        "identity_tol": IDENTITY_TOL,
        "instances": len(tasks),
        "cells": cell_list,
        "max_abs_diff": max_diff,
        "max_identity_residual": max_ident,
        "pass": bool(max_diff < tol and max_ident < IDENTITY_TOL),
        "version": __version__,
    }


def cmd_verify(args) -> int:
    if args.count < 0:
        raise InvalidInput("--count must be non-negative")
    if args.seed < 0 or args.seed >= 2**64:
        raise InvalidInput("--seed must be a 64-bit unsigned integer")
    summary = run_verify(args.seed, args.count, args.jobs, args.grid_n, args.tol)
    emit(summary, args.json_out)
    return EXIT_OK if summary["pass"] else EXIT_TOLERANCE


def cmd_transfer(args) -> int:
    spec = load_spec(args.spec)
    theta = inner_from_json(spec)
    t0 = time.perf_counter()
    default = 0j if args.target != "recenter" else None
    alpha = _alpha_from(args, spec, default)
    tmap = transfer_map(theta.kind, args.target, alpha)
    basis = build_basis(theta, _grid(theta.kind, args.grid_n))
    rep = transfer_report(tmap, theta, basis).as_dict()
    tol = args.tol
    rep.update(
        target=args.target,
        instance=theta.to_json(),
        tol=tol,
        wall_time=time.perf_counter() - t0,
        version=__version__,
    )
    worst = max(rep["difference"], rep["intertwining_residual"], rep["unitarity_residual"], rep["coordinate_unitarity"], rep["image_residual"])
    rep["pass"] = bool(worst < tol)
    emit(rep, args.json_out)
    return EXIT_OK if rep["pass"] else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modelnorm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tol):
        p.add_argument("--grid-n", type=int, default=None, help="fixed quadrature size (power of two); default: adaptive")
        p.add_argument("--tol", type=float, default=tol, help=f"pass threshold (default {tol:g})")
        p.add_argument("--json-out", metavar="PATH", default=None, help="also write the report here")

    p = sub.add_parser("norm", help="numerical vs closed-form norm of A_alpha (or B_alpha)")
    p.add_argument("spec", help="inner-function or de Branges JSON spec")
    p.add_argument("--alpha", metavar="RE,IM", help="point in Omega_+ (use --alpha=-RE,IM for negative values)")
    p.add_argument("--tol-sv", type=float, default=1e-9, help="singular values >= 1 - tol_sv count as one")
    p.add_argument("--tol-rank", type=float, default=1e-9, help="relative rank tolerance for K_alpha(alpha)")
    common(p, NORM_TOL)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("verify", help="seeded random sweep over domain x m x n")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--count", type=int, default=5, help="instances per (domain, m, n) cell")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    common(p, NORM_TOL)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("transfer", help="recentering / Cayley transfer checks")
    p.add_argument("spec", help="inner-function JSON spec")
    p.add_argument("--target", choices=["recenter", "upper", "right"], required=True)
    p.add_argument("--alpha", metavar="RE,IM", help="source point (default 0 for Cayley targets)")
    common(p, TRANSFER_TOL)
    p.set_defaults(func=cmd_transfer)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except (InvalidInput, ModelNormError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
