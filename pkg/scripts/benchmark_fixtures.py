"""Time ``sweep`` on every fixture and report entity counts and outcomes.

Writes a CSV with one row per fixture: sharp edges plus faces of the input,
wall time, V/E/F/L of the output (or the error that stopped assembly) and
the simplicity verdict.
"""
import argparse
import csv
import time

from sweepkernel import fixtures as fx
from sweepkernel.config import Config, Grids
from sweepkernel.errors import SweepKernelError
from sweepkernel.mesh import scaled_grids
from sweepkernel.swept import sweep, verify_simple

CASES = dict(fx.SIMPLE_SWEEPS, non_simple_cube=fx.non_simple_cube, lsi_sphere=fx.lsi_sphere,
             singular_edge=fx.singular_edge, vertex_crossing=fx.vertex_crossing,
             two_component_edge=fx.two_component_edge)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="benchmark.csv")
    ap.add_argument("--density", type=float, default=1.0, help="scale factor of the default grids")
    ap.add_argument("--verify", action="store_true", help="also run the simplicity heuristic")
    args = ap.parse_args()
    cfg = Config(grids=scaled_grids(Grids(), args.density))
    rows = []
    for name, make in CASES.items():
        solid, traj = make()
        size = sum(e.sharp for e in solid.edges.values()) + len(solid.faces)
        start = time.perf_counter()
        try:
            c = sweep(solid, traj, cfg).counts()
            outcome = "closed"
        except SweepKernelError as exc:
            c, outcome = {}, type(exc).__name__
        elapsed = time.perf_counter() - start
        simple = verify_simple(solid, traj, config=cfg).simple if args.verify else ""
        rows.append({"fixture": name, "sharp_edges_plus_faces": size, "seconds": round(elapsed, 3),
                     "V": c.get("V", ""), "E": c.get("E", ""), "F": c.get("F", ""), "L": c.get("L", ""),
                     "outcome": outcome, "simple": simple})
        print(f"{name:20s} {size:3d} {elapsed:7.2f} s  {outcome:16s} {c}")
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    main()
