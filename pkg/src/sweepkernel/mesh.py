"""Tessellation export of a swept brep."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .config import Config, Grids
from .swept import SweptBrep


def scaled_grids(grids: Grids, density: float) -> Grids:
    """Grids multiplied by ``density`` (never below the minimum of 8)."""
    f = lambda n: max(8, int(round(n * density)))  # noqa: E731
    return Grids(nu=f(grids.nu), nv=f(grids.nv), nt=f(grids.nt), ns=f(grids.ns),
                 nt_edge=f(grids.nt_edge), n_vertex=grids.n_vertex)


def retessellate(swept: SweptBrep, density: float) -> SweptBrep:
    """Rebuild the brep on funnel grids scaled by ``density``.

    The faces are parametrized on the funnel grids, so a finer tessellation
    is obtained by re-running the sweep from the embedded inputs.
    """
    if density == 1.0:
        return swept
    from .swept import sweep
    solid, traj = swept.inputs()
    cfg = Config.from_dict(swept.source.get("config", {}))
    cfg = replace(cfg, grids=scaled_grids(cfg.grids, density), dump_funnels=None, verify_simple=False)
    return sweep(solid, traj, cfg)


def triangle_soup(swept: SweptBrep):
    """Vertices, triangles, per-triangle stored outward normals and face ids."""
    V, T, N, F = [], [], [], []
    off = 0
    for fid, f in swept.faces.items():
        if len(f.triangles) == 0:
            continue
        V.append(f.points)
        T.append(f.triangles + off)
        N.append(f.normals[f.triangles].mean(axis=1))
        F += [fid] * len(f.triangles)
        off += len(f.points)
    return np.concatenate(V), np.concatenate(T), np.concatenate(N), F


def winding_agreement(swept: SweptBrep, rel_area: float = 1e-12) -> float:
    """Fraction of non-degenerate triangles wound counterclockwise about the outward normal."""
    V, T, N, _ = triangle_soup(swept)
    P = V[T]
    g = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
    area = np.linalg.norm(g, axis=1)
    keep = area > rel_area * max(area.max(), 1e-300)
    return float(np.mean(np.sum(g[keep] * N[keep], axis=1) > 0))


def write_obj(swept: SweptBrep, path: str, density: float = 1.0) -> dict:
    """Write ``v``/``f`` records; triangles are counterclockwise seen from outside."""
    sw = retessellate(swept, density)
    V, T, _, _ = triangle_soup(sw)
    with open(path, "w") as fh:
        fh.write(f"# swept volume: {len(sw.faces)} faces\n")
        np.savetxt(fh, V, fmt="v %.12g %.12g %.12g")
        np.savetxt(fh, T + 1, fmt="f %d %d %d")
    return {"vertices": len(V), "triangles": len(T), "winding_agreement": winding_agreement(sw)}


def read_obj(path: str):
    V, T = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                V.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                T.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return np.asarray(V), np.asarray(T, dtype=int)
