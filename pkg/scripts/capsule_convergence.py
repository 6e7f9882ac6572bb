"""Capsule accuracy against the analytic surface as the funnel grids are refined.

For each density the exact face maps and the tessellation are compared with
the capsule of radius 1 around the segment [0, 2] on the x axis.
"""
import argparse
import time

import numpy as np

from sweepkernel import fixtures as fx
from sweepkernel.config import Config, Grids
from sweepkernel.mesh import scaled_grids
from sweepkernel.swept import sweep


def capsule_distance(X):
    c = np.clip(X[:, 0], 0.0, 2.0)
    return np.abs(np.linalg.norm(X - np.stack([c, 0 * c, 0 * c], 1), axis=1) - 1.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--densities", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--samples", type=int, default=2000)
    args = ap.parse_args()
    solid, traj = fx.capsule()
    rng = np.random.default_rng(7)
    print(f"{'density':>8s} {'seconds':>8s} {'triangles':>9s} {'vertex err':>11s} {'sample err':>11s} "
          f"{'chord err':>10s}")
    for d in args.densities:
        start = time.perf_counter()
        sw = sweep(solid, traj, Config(grids=scaled_grids(Grids(), d)))
        elapsed = time.perf_counter() - start
        V = np.concatenate([f.points for f in sw.faces.values()])
        P, _, _ = sw.sample(args.samples, rng)
        tris = sum(len(f.triangles) for f in sw.faces.values())
        # chord error: distance of triangle centroids, a measure of the tessellation alone
        C = np.concatenate([f.points[f.triangles].mean(axis=1) for f in sw.faces.values()])
        print(f"{d:8.2f} {elapsed:8.2f} {tris:9d} {capsule_distance(V).max():11.2e} "
              f"{capsule_distance(P).max():11.2e} {capsule_distance(C).max():10.2e}")


if __name__ == "__main__":
    main()
