"""Command-line front end.

Exit codes: 0 ok, 1 I/O error, 2 validation failure, 3 non-simple sweep,
4 residual or invariant-check failure.  Messages go to standard error; data
goes to files only.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from .brep import SolidBrep, validate_solid
from .config import Config
from .errors import AssumptionViolation, MalformedBrep, NotSimpleSweep, SweepKernelError, UnmatchedCoedge
from .motion import load_trajectory

log = logging.getLogger("sweepkernel")

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_NOT_SIMPLE, EXIT_CHECK = 0, 1, 2, 3, 4


class _IOFailure(Exception):
    pass


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc


def _load_solid(path) -> SolidBrep:
    return SolidBrep.from_dict(_read_json(path))


def _load_traj(path):
    try:
        return load_trajectory(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc


def _load_config(args) -> Config:
    cfg = Config.from_dict(_read_json(args.config)) if getattr(args, "config", None) else Config()
    if getattr(args, "verify_simple", False):
        cfg = replace(cfg, verify_simple=True)
    if getattr(args, "dump_funnels", None):
        cfg = replace(cfg, dump_funnels=args.dump_funnels)
    return cfg


def _write_json(path, data):
    try:
        with open(path, "w") as fh:
            json.dump(data, fh, indent=1)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from exc


# ------------------------------------------------------------------ commands


def cmd_validate(args) -> int:
    solid = _load_solid(args.solid)
    rep = validate_solid(solid)
    log.info(rep.summary())
    if args.report:
        _write_json(args.report, {"accepted": rep.accepted, "n_sharp_edges": rep.n_sharp_edges,
                                  "n_sharp_vertices": rep.n_sharp_vertices,
                                  "violations": [vars(v) for v in rep.violations]})
    return EXIT_OK if rep.accepted else EXIT_VALIDATION


def cmd_sweep(args) -> int:
    from .swept import sweep, verify_simple
    solid, traj, cfg = _load_solid(args.solid), _load_traj(args.traj), _load_config(args)
    try:
        swept = sweep(solid, traj, cfg)
    except NotSimpleSweep as exc:
        log.error("not simple: %s", exc)
        return EXIT_NOT_SIMPLE
    except UnmatchedCoedge as exc:
        rep = verify_simple(solid, traj, config=cfg)
        if not rep.simple:
            log.error("shell does not close and the sweep is not simple: %s", rep.evidence[0])
            return EXIT_NOT_SIMPLE
        log.error("shell does not close: %s", exc)
        return EXIT_CHECK
    try:
        swept.dump(args.out)
    except OSError as exc:
        raise _IOFailure(f"cannot write {args.out}: {exc}") from exc
    r = swept.report
    log.info("swept brep: V=%d E=%d F=%d L=%d euler=%d closed=%s", r["V"], r["E"], r["F"], r["L"],
             r["euler_characteristic"], r["closed"])
    if args.report:
        _write_json(args.report, r)
    if r["funnel_residual_max"] > 1e3 * cfg.tol.f * r.get("scale", 1.0) or not r["closed"]:
        log.error("residual or closure failure")
        return EXIT_CHECK
    return EXIT_OK


def cmd_mesh(args) -> int:
    from .mesh import write_obj
    from .swept import SweptBrep
    try:
        swept = SweptBrep.load(args.brep)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise _IOFailure(f"cannot read {args.brep}: {exc}") from exc
    try:
        info = write_obj(swept, args.obj, args.density)
    except OSError as exc:
        raise _IOFailure(f"cannot write {args.obj}: {exc}") from exc
    log.info("wrote %d vertices, %d triangles; winding agreement %.5f",
             info["vertices"], info["triangles"], info["winding_agreement"])
    return EXIT_OK if info["winding_agreement"] >= 0.999 else EXIT_CHECK


def _read_points(path):
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        raise _IOFailure(f"cannot read {path}: {exc}") from exc
    try:
        float(rows[0][0])
    except (ValueError, IndexError):
        rows = rows[1:]
    try:
        return np.array([[float(x) for x in r[:3]] for r in rows]).reshape(-1, 3)
    except ValueError as exc:
        raise _IOFailure(f"malformed points file {path}: {exc}") from exc


def cmd_classify(args) -> int:
    from .oracle import pmc_many
    solid, traj = _load_solid(args.solid), _load_traj(args.traj)
    P = _read_points(args.points)
    res = pmc_many(P, solid, traj, nt=args.nt)
    try:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "z", "verdict", "margin", "t_witness"])
            for r in res:
                w.writerow([*map(repr, map(float, r.point)), r.verdict, repr(r.margin), repr(r.t_witness)])
    except OSError as exc:
        raise _IOFailure(f"cannot write {args.out}: {exc}") from exc
    counts = {v: sum(r.verdict == v for r in res) for v in ("interior", "boundary", "exterior")}
    log.info("classified %d points: %s", len(res), counts)
    return EXIT_OK


def cmd_check(args) -> int:
    from .invariants import run_suite
    from .swept import SweptBrep
    try:
        swept = SweptBrep.load(args.swept)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise _IOFailure(f"cannot read {args.swept}: {exc}") from exc
    solid, traj = _load_solid(args.solid), _load_traj(args.traj)
    swept._inputs = (solid, traj)
    results = run_suite(swept, solid, traj, n_oracle=args.samples)
    for r in results:
        log.info(r.line())
    if args.report:
        _write_json(args.report, [vars(r) for r in results])
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sweepkernel", description="Swept volumes of solids under rigid motion.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a solid against the supported class")
    s.add_argument("--solid", required=True)
    s.add_argument("--report", help="write the validation report as JSON")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("sweep", help="compute the swept brep")
    s.add_argument("--solid", required=True)
    s.add_argument("--traj", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--config", help="JSON configuration (tolerances, grids, flags)")
    s.add_argument("--report", help="write the run report as JSON")
    s.add_argument("--verify-simple", action="store_true", help="search for occluded contact points first")
    s.add_argument("--dump-funnels", metavar="DIR", help="write funnel meshes as CSV")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("mesh", help="export an OBJ tessellation")
    s.add_argument("--brep", required=True)
    s.add_argument("--obj", required=True)
    s.add_argument("--density", type=float, default=1.0, help="scale factor of the funnel grids")
    s.set_defaults(func=cmd_mesh)

    s = sub.add_parser("classify", help="point membership against the swept volume")
    s.add_argument("--solid", required=True)
    s.add_argument("--traj", required=True)
    s.add_argument("--points", required=True, help="CSV with x,y,z columns")
    s.add_argument("--out", required=True)
    s.add_argument("--nt", type=int, default=256)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("check", help="run the invariant suites on a swept brep")
    s.add_argument("--swept", required=True)
    s.add_argument("--solid", required=True)
    s.add_argument("--traj", required=True)
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--report", help="write check results as JSON")
    s.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except _IOFailure as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (MalformedBrep, AssumptionViolation) as exc:
        log.error("validation: %s", exc)
        return EXIT_VALIDATION
    except NotSimpleSweep as exc:
        log.error("not simple: %s", exc)
        return EXIT_NOT_SIMPLE
    except SweepKernelError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
