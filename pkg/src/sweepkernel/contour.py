"""Implicit-set contouring on uniform grids with bracketed root refinement.

Regions ``{F <= 0}`` in 2-D are triangulated cell by cell (marching squares
with the cell-centre rule on saddles); zero sets in 3-D use marching cubes.
Every point placed on a grid edge is refined by safeguarded regula falsi
(Illinois variant, bisection after 30 steps) so the bracket is never lost.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage.measure import marching_cubes

from .errors import SolverDivergence


def refine_roots(fun, p0, p1, f0, f1, tol, iters=80):
    """Roots of ``fun`` on segments ``p0 -> p1`` whose end values bracket zero.

    Parameters
    ----------
    fun : callable
        Maps an ``(N, d)`` array of points to ``(N,)`` values.
    p0, p1 : ndarray, shape (N, d)
    f0, f1 : ndarray, shape (N,)
        End values with ``f0 * f1 <= 0``.
    tol : float
        Residual target ``|fun| <= tol``.

    Returns
    -------
    lam : ndarray
        Segment fractions of the roots.
    resid : ndarray
        ``|fun|`` at the returned points.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    n = len(p0)
    a = np.zeros(n)
    b = np.ones(n)
    fa = np.asarray(f0, dtype=float).copy()
    fb = np.asarray(f1, dtype=float).copy()
    if np.any(fa * fb > 0):
        raise SolverDivergence("refine_roots called without a bracket")
    lam = np.where(np.abs(fa) <= np.abs(fb), 0.0, 1.0)
    resid = np.minimum(np.abs(fa), np.abs(fb))
    active = resid > tol
    last = np.zeros(n, dtype=int)
    for it in range(iters):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        ai, bi, fai, fbi = a[idx], b[idx], fa[idx], fb[idx]
        denom = fbi - fai
        c = np.where(denom != 0, (ai * fbi - bi * fai) / np.where(denom != 0, denom, 1.0), 0.5 * (ai + bi))
        if it >= 30:
            c = 0.5 * (ai + bi)
        c = np.clip(c, np.minimum(ai, bi), np.maximum(ai, bi))
        pts = p0[idx] + c[:, None] * (p1[idx] - p0[idx])
        fc = np.asarray(fun(pts), dtype=float)
        lam[idx] = c
        resid[idx] = np.abs(fc)
        same_a = np.sign(fc) == np.sign(fai)
        # Illinois: halve the stale end value when the same side moves twice
        fb_new = np.where(same_a & (last[idx] == -1), 0.5 * fbi, fbi)
        fa_new = np.where(~same_a & (last[idx] == 1), 0.5 * fai, fai)
        a[idx] = np.where(same_a, c, ai)
        fa[idx] = np.where(same_a, fc, fa_new)
        b[idx] = np.where(same_a, bi, c)
        fb[idx] = np.where(same_a, fb_new, fc)
        last[idx] = np.where(same_a, -1, 1)
        width = np.abs(b[idx] - a[idx]) * np.linalg.norm(p1[idx] - p0[idx], axis=1)
        active[idx] = (np.abs(fc) > tol) & (width > 1e-15 * (1 + np.linalg.norm(pts, axis=1)))
    return lam, resid


def orient_consistently(triangles: np.ndarray) -> np.ndarray:
    """Flip triangles so every shared edge is used in opposite directions."""
    tris = np.array(triangles, dtype=int, copy=True)
    if len(tris) == 0:
        return tris
    edge_map: dict = {}
    for k, (i, j, l) in enumerate(tris):
        for a, b in ((i, j), (j, l), (l, i)):
            edge_map.setdefault((min(a, b), max(a, b)), []).append(k)
    seen = np.zeros(len(tris), dtype=bool)
    for seed in range(len(tris)):
        if seen[seed]:
            continue
        seen[seed] = True
        stack = [seed]
        while stack:
            k = stack.pop()
            i, j, l = tris[k]
            for a, b in ((i, j), (j, l), (l, i)):
                for m in edge_map[(min(a, b), max(a, b))]:
                    if seen[m]:
                        continue
                    p, q, r = tris[m]
                    directed = {(p, q), (q, r), (r, p)}
                    if (a, b) in directed:
                        tris[m] = (p, r, q)
                    seen[m] = True
                    stack.append(m)
    return tris


def triangle_components(triangles: np.ndarray, n_points: int, glue=None) -> list:
    """Connected components of a triangle set (shared vertices connect).

    ``glue`` is an optional list of vertex index pairs that are identified.
    """
    parent = np.arange(n_points)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    for i, j, k in triangles:
        union(i, j)
        union(j, k)
    for i, j in glue or ():
        union(i, j)
    roots = np.array([find(t[0]) for t in triangles], dtype=int)
    comps = []
    for r in np.unique(roots):
        comps.append(np.nonzero(roots == r)[0])
    return comps


def boundary_loops(triangles: np.ndarray) -> list:
    """Closed loops of boundary edges, oriented with the mesh on the left."""
    directed = {}
    for i, j, k in triangles:
        for a, b in ((i, j), (j, k), (k, i)):
            directed[(a, b)] = directed.get((a, b), 0) + 1
    bnd = [(a, b) for (a, b) in directed if (b, a) not in directed]
    out_edges: dict = {}
    for a, b in bnd:
        out_edges.setdefault(a, []).append(b)
    loops = []
    used = set()
    for a0, b0 in bnd:
        if (a0, b0) in used:
            continue
        loop = [a0]
        a, b = a0, b0
        used.add((a, b))
        while b != a0:
            loop.append(b)
            nxt = [c for c in out_edges.get(b, []) if (b, c) not in used]
            if not nxt:
                break
            a, b = b, nxt[0]
            used.add((a, b))
        loops.append(np.array(loop, dtype=int))
    return loops


@dataclass
class Mesh2:
    """Triangulated parameter-space region."""

    points: np.ndarray
    triangles: np.ndarray

    def components(self):
        return triangle_components(self.triangles, len(self.points))

    def submesh(self, tri_idx):
        tris = self.triangles[tri_idx]
        used = np.unique(tris)
        remap = -np.ones(len(self.points), dtype=int)
        remap[used] = np.arange(len(used))
        return type(self)(self.points[used], remap[tris])

    def loops(self):
        return boundary_loops(self.triangles)


def _grid_crossings(fun, P0, P1, F0, F1, inside0, inside1, tol):
    """Refined crossing points on grid edges where membership changes."""
    if len(P0) == 0:
        return np.zeros((0, P0.shape[1] if P0.ndim == 2 else 2))
    lam, _ = refine_roots(fun, P0, P1, F0, F1, tol)
    return P0 + lam[:, None] * (P1 - P0)


def contour_region(fun, xs, ys, tol=1e-12, values=None) -> Mesh2:
    """Triangulate ``{fun <= 0}`` over the grid ``xs x ys``.

    ``fun`` maps ``(N, 2)`` points to values.  Triangles are counter-clockwise
    in the (x, y) plane and conform across cells.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    nx, ny = len(xs), len(ys)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    F = np.asarray(fun(nodes) if values is None else values, dtype=float).reshape(nx, ny)
    inside = F <= 0

    def nid(i, j):
        return i * ny + j

    points = [nodes]
    crossing = {}
    count = len(nodes)
    # edges along x (i -> i+1) and along y (j -> j+1)
    for axis in (0, 1):
        if axis == 0:
            I, J = np.nonzero(inside[:-1, :] != inside[1:, :])
            I2, J2 = I + 1, J
        else:
            I, J = np.nonzero(inside[:, :-1] != inside[:, 1:])
            I2, J2 = I, J + 1
        if len(I) == 0:
            continue
        P0 = nodes[nid(I, J)]
        P1 = nodes[nid(I2, J2)]
        pts = _grid_crossings(fun, P0, P1, F[I, J], F[I2, J2], None, None, tol)
        for k in range(len(I)):
            crossing[(axis, int(I[k]), int(J[k]))] = count + k
        points.append(pts)
        count += len(I)
    points = np.concatenate(points)

    tris = []
    full = inside[:-1, :-1] & inside[1:, :-1] & inside[1:, 1:] & inside[:-1, 1:]
    I, J = np.nonzero(full)
    c0, c1, c2, c3 = nid(I, J), nid(I + 1, J), nid(I + 1, J + 1), nid(I, J + 1)
    tris.append(np.stack([c0, c1, c2], 1))
    tris.append(np.stack([c0, c2, c3], 1))

    some = (inside[:-1, :-1] | inside[1:, :-1] | inside[1:, 1:] | inside[:-1, 1:]) & ~full
    extra = []
    for i, j in zip(*np.nonzero(some)):
        corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
        cedges = [(0, i, j), (1, i + 1, j), (0, i, j + 1), (1, i, j)]
        ins = [inside[c] for c in corners]
        saddle = ins[0] == ins[2] and ins[1] == ins[3] and ins[0] != ins[1]
        if saddle:
            centre = np.array([[0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])]])
            joined = float(np.asarray(fun(centre)).ravel()[0]) <= 0
            if not joined:
                for k in range(4):
                    if ins[k]:
                        poly = [nid(*corners[k]), crossing[cedges[k]], crossing[cedges[k - 1]]]
                        extra.append(poly)
                continue
        poly = []
        for k in range(4):
            if ins[k]:
                poly.append(nid(*corners[k]))
            if ins[k] != ins[(k + 1) % 4]:
                poly.append(crossing[cedges[k]])
        for k in range(1, len(poly) - 1):
            extra.append([poly[0], poly[k], poly[k + 1]])
    if extra:
        tris.append(np.array(extra, dtype=int))
    tris = np.concatenate(tris) if tris else np.zeros((0, 3), dtype=int)
    tris = tris[(tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])]
    used = np.unique(tris)
    remap = -np.ones(len(points), dtype=int)
    remap[used] = np.arange(len(used))
    return Mesh2(points[used], remap[tris].reshape(-1, 3))


@dataclass
class Mesh3:
    """Triangulated zero set in a 3-D parameter box."""

    points: np.ndarray
    triangles: np.ndarray
    resid: np.ndarray

    def submesh(self, tri_idx):
        tris = self.triangles[tri_idx]
        used = np.unique(tris)
        remap = -np.ones(len(self.points), dtype=int)
        remap[used] = np.arange(len(used))
        return Mesh3(self.points[used], remap[tris], self.resid[used])

    def loops(self):
        return boundary_loops(self.triangles)


def contour_surface(fun, axes, tol=1e-12, values=None) -> Mesh3:
    """Marching-cubes zero set of ``fun`` over the grid ``axes = (xs, ys, zs)``.

    Vertices are refined along their grid edges to ``|fun| <= tol``.
    Triangles are consistently oriented.
    """
    axes = [np.asarray(a, dtype=float) for a in axes]
    shape = tuple(len(a) for a in axes)
    G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    F = np.asarray(fun(G) if values is None else values, dtype=float).reshape(shape)
    if not (F.min() < 0 < F.max()) and not np.any(F == 0):
        return Mesh3(np.zeros((0, 3)), np.zeros((0, 3), dtype=int), np.zeros(0))
    tiny = 1e-300
    vol = np.where(F == 0, tiny, F)
    if not (vol.min() < 0 < vol.max()):
        return Mesh3(np.zeros((0, 3)), np.zeros((0, 3), dtype=int), np.zeros(0))
    verts, faces, _, _ = marching_cubes(vol, level=0.0, method="lewiner")
    verts = verts.astype(float)
    rnd = np.round(verts)
    integral = np.abs(verts - rnd) < 1e-7
    params = np.empty(verts.shape)
    for k in range(3):
        idx = np.clip(np.floor(verts[:, k]).astype(int), 0, shape[k] - 2)
        frac = verts[:, k] - idx
        params[:, k] = axes[k][idx] + frac * (axes[k][idx + 1] - axes[k][idx])
        exact = integral[:, k]
        params[exact, k] = axes[k][rnd[exact, k].astype(int)]
    free = ~integral
    axis = np.argmax(free, axis=1)
    movable = free.sum(axis=1) == 1
    resid = np.abs(np.asarray(fun(params), dtype=float))
    sel = np.nonzero(movable)[0]
    if sel.size:
        ax = axis[sel]
        lo_idx = np.clip(np.floor(verts[sel, ax]).astype(int), 0, np.array(shape)[ax] - 2)
        node = rnd[sel].astype(int)
        node[np.arange(sel.size), ax] = lo_idx
        node_hi = node.copy()
        node_hi[np.arange(sel.size), ax] = lo_idx + 1
        P0 = np.stack([axes[k][node[:, k]] for k in range(3)], 1)
        P1 = np.stack([axes[k][node_hi[:, k]] for k in range(3)], 1)
        f0 = F[tuple(node.T)]
        f1 = F[tuple(node_hi.T)]
        ok = f0 * f1 <= 0
        if np.any(ok):
            lam, res = refine_roots(fun, P0[ok], P1[ok], f0[ok], f1[ok], tol)
            tgt = sel[ok]
            params[tgt] = P0[ok] + lam[:, None] * (P1[ok] - P0[ok])
            resid[tgt] = res
    faces = faces[(faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])]
    faces = orient_consistently(faces)
    return Mesh3(params, faces, resid)
