"""Funnels: parameter-domain zero sets that parametrize envelope faces.

All contact functions are evaluated in the body frame, where
``<A n, v_x> = <n, W x + w>`` with ``W = A^T A'`` and ``w = A^T b'``.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .brep import SolidBrep
from .config import Grids, Tolerances
from .contour import (Mesh2, Mesh3, contour_region, contour_surface, refine_roots,
                      triangle_components)
from .errors import (AssumptionViolation, DegenerateFunnel, DegenerateStrip,
                     RootClusterTooDense)
from .motion import Trajectory


def _body(traj: Trajectory, t):
    W, w = traj.body_velocity(np.asarray(t, dtype=float))
    return W, w


def _apply(W, x):
    return np.sum(W * np.asarray(x)[..., None, :], axis=-1)


def face_contact_fn(solid: SolidBrep, fid: str, traj: Trajectory):
    """f^F(u, v, t) as a function of ``(N, 3)`` parameter points."""
    face = solid.faces[fid]

    def f(P):
        P = np.atleast_2d(P)
        S = face.surface.eval(P[:, 0], P[:, 1])
        N = face.outward * face.surface.natural_normal(P[:, 0], P[:, 1])
        W, w = _body(traj, P[:, 2])
        return np.sum(N * (_apply(W, S) + w), axis=-1)

    return f


def edge_contact_fns(solid: SolidBrep, eid: str, traj: Trajectory):
    """(g1, g2) on ``(N, 2)`` points ``(s, t)``: left and right face generators."""

    def both(P):
        P = np.atleast_2d(P)
        x, _, n1, n2 = solid.edge_frame(eid, P[:, 0])
        W, w = _body(traj, P[:, 1])
        vb = _apply(W, x) + w
        return np.sum(n1 * vb, axis=-1), np.sum(n2 * vb, axis=-1)

    return both


def _scale(traj: Trajectory, solid: SolidBrep):
    lo, hi = solid.bounding_box()
    ts = traj.times(9)
    pts = np.array([lo, hi, 0.5 * (lo + hi)])
    speed = max(float(np.max(np.linalg.norm(traj.velocity(p, ts), axis=-1))) for p in pts)
    return 1.0 + speed


# ----------------------------------------------------------------- face funnels


@dataclass
class FaceFunnel:
    face: str
    axes: tuple
    mesh: Mesh3
    components: list
    fn: object = field(repr=False, default=None)

    def residual_max(self) -> float:
        return float(self.mesh.resid.max()) if len(self.mesh.resid) else 0.0


def _seam_glue(points, face, axes):
    """Vertex pairs identified across seam sides."""
    glue = []
    for k, (lo_side, hi_side) in enumerate((("u0", "u1"), ("v0", "v1"))):
        if face.sides.get(lo_side) != "seam":
            continue
        lo, hi = axes[k][0], axes[k][-1]
        other = [j for j in range(3) if j != k]
        keys = {}
        for i in np.nonzero(points[:, k] == lo)[0]:
            keys[tuple(np.round(points[i, other], 9))] = i
        for i in np.nonzero(points[:, k] == hi)[0]:
            j = keys.get(tuple(np.round(points[i, other], 9)))
            if j is not None:
                glue.append((j, i))
    return glue


def face_funnel(solid: SolidBrep, fid: str, traj: Trajectory, grids: Grids = Grids(),
                tol: Tolerances = Tolerances()) -> FaceFunnel:
    """Zero set of f^F in the prism D x I, split into connected components.

    Raises
    ------
    DegenerateFunnel
        If f^F vanishes on the whole sampling grid (the face moves in its own
        surface, e.g. a plane sliding or spinning in itself).
    """
    face = solid.faces[fid]
    (u0, u1), (v0, v1) = face.surface.domain
    axes = (np.linspace(u0, u1, grids.nu), np.linspace(v0, v1, grids.nv), traj.times(grids.nt))
    fn = face_contact_fn(solid, fid, traj)
    G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    vals = fn(G)
    if np.max(np.abs(vals)) <= tol.f * _scale(traj, solid):
        raise DegenerateFunnel(f"f vanishes identically on face {fid}")
    mesh = contour_surface(fn, axes, tol.f, values=vals)
    if len(mesh.triangles) == 0:
        return FaceFunnel(fid, axes, mesh, [], fn)
    glue = _seam_glue(mesh.points, face, axes)
    comps = [mesh.submesh(c) for c in triangle_components(mesh.triangles, len(mesh.points), glue)]
    return FaceFunnel(fid, axes, mesh, comps, fn)


# ----------------------------------------------------------------- edge funnels


@dataclass
class EdgeFunnel:
    edge: str
    axes: tuple
    mesh: Mesh2
    components: list
    fns: object = field(repr=False, default=None)

    def contains(self, s, t) -> np.ndarray:
        P = np.stack(np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float)), -1).reshape(-1, 2)
        g1, g2 = self.fns(P)
        return (g1 * g2 <= 0).reshape(np.shape(s))

    def alpha(self, s, t) -> np.ndarray:
        """alpha* = g2 / (g2 - g1), clipped to [0, 1]."""
        P = np.stack(np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float)), -1).reshape(-1, 2)
        g1, g2 = self.fns(P)
        d = g2 - g1
        a = np.where(d != 0, g2 / np.where(d != 0, d, 1.0), 0.5)
        return np.clip(a, 0.0, 1.0).reshape(np.shape(s))

    def boundary_labels(self, comp: Mesh2, loop: np.ndarray, tol_g: float):
        """Label each boundary segment of ``loop`` (indices into ``comp.points``)."""
        (s0, s1), (t0, t1) = (self.axes[0][0], self.axes[0][-1]), (self.axes[1][0], self.axes[1][-1])
        P = comp.points
        g1, g2 = self.fns(P)
        labels = []
        for k in range(len(loop)):
            a, b = loop[k], loop[(k + 1) % len(loop)]
            pa, pb = P[a], P[b]
            if pa[0] == s0 and pb[0] == s0:
                labels.append("s0")
            elif pa[0] == s1 and pb[0] == s1:
                labels.append("s1")
            elif pa[1] == t0 and pb[1] == t0:
                labels.append("t0")
            elif pa[1] == t1 and pb[1] == t1:
                labels.append("t1")
            else:
                labels.append("a1" if abs(g1[a]) + abs(g1[b]) <= abs(g2[a]) + abs(g2[b]) else "a2")
        return labels


def edge_funnel(solid: SolidBrep, eid: str, traj: Trajectory, grids: Grids = Grids(),
                tol: Tolerances = Tolerances()) -> EdgeFunnel:
    """Region ``{g1 * g2 <= 0}`` in d x I with its connected components.

    Raises
    ------
    DegenerateStrip
        If g1 or g2 vanishes on the whole grid (the edge slides inside a
        supporting face's surface).
    """
    curve = solid.edges[eid].curve
    axes = (np.linspace(*curve.domain, grids.ns), traj.times(grids.nt_edge))
    fns = edge_contact_fns(solid, eid, traj)
    G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)
    g1, g2 = fns(G)
    eps = tol.g * _scale(traj, solid)
    if np.max(np.abs(g1)) <= eps or np.max(np.abs(g2)) <= eps:
        raise DegenerateStrip(f"a trim function vanishes identically on edge {eid}")

    def prod(P):
        a, b = fns(P)
        return a * b

    # zero-set points are refined on the product; its scale is |g|^2
    mesh = contour_region(prod, axes[0], axes[1], tol=tol.f * eps, values=g1 * g2)
    comps = [mesh.submesh(c) for c in mesh.components()] if len(mesh.triangles) else []
    return EdgeFunnel(eid, axes, mesh, comps, fns)


def pcurve_of_contact(funnel, t: float, n: int = 256) -> list:
    """Iso-t slice of a funnel as a list of parameter polylines."""
    if isinstance(funnel, EdgeFunnel):
        s = np.linspace(funnel.axes[0][0], funnel.axes[0][-1], n)
        P = np.stack([s, np.full_like(s, t)], 1)
        g1, g2 = funnel.fns(P)
        inside = g1 * g2 <= 0
        out = []
        k = 0
        while k < n:
            if not inside[k]:
                k += 1
                continue
            j = k
            while j + 1 < n and inside[j + 1]:
                j += 1
            a, b = s[k], s[j]

            def prod(Q):
                x, y = funnel.fns(Q)
                return x * y
            if k > 0:
                lam, _ = refine_roots(prod, P[k - 1:k], P[k:k + 1], (g1 * g2)[k - 1:k], (g1 * g2)[k:k + 1], 1e-14)
                a = s[k - 1] + lam[0] * (s[k] - s[k - 1])
            if j < n - 1:
                lam, _ = refine_roots(prod, P[j:j + 1], P[j + 1:j + 2], (g1 * g2)[j:j + 1], (g1 * g2)[j + 1:j + 2], 1e-14)
                b = s[j] + lam[0] * (s[j + 1] - s[j])
            ss = np.concatenate([[a], s[k:j + 1][(s[k:j + 1] > a) & (s[k:j + 1] < b)], [b]])
            out.append(np.stack([ss, np.full_like(ss, t)], 1))
            k = j + 1
        return out
    if isinstance(funnel, FaceFunnel):
        from skimage.measure import find_contours
        xs, ys = funnel.axes[0], funnel.axes[1]
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        P = np.stack([X.ravel(), Y.ravel(), np.full(X.size, t)], 1)
        vals = funnel.fn(P).reshape(X.shape)
        out = []
        for c in find_contours(vals, 0.0):
            u = np.interp(c[:, 0], np.arange(len(xs)), xs)
            v = np.interp(c[:, 1], np.arange(len(ys)), ys)
            out.append(np.stack([u, v], 1))
        return out
    raise TypeError("expected an EdgeFunnel or FaceFunnel")


# ----------------------------------------------------------------- singularities


@dataclass
class SingularPoint:
    edge: str
    s: float
    t: float
    residual: float
    kind: str = "edge_tangency"


def detect_singularities(solid: SolidBrep, eid: str, traj: Trajectory, funnel: EdgeFunnel | None = None,
                         grids: Grids = Grids(), tol: Tolerances = Tolerances(), max_candidates=24) -> list:
    """Isolated zeros of ``|A e'(s) x v_{e(s)}(t)|`` inside the edge funnel.

    Raises
    ------
    AssumptionViolation
        If the edge velocity is tangent to the edge on a non-isolated set.
    """
    curve = solid.edges[eid].curve
    (s0, s1), (t0, t1) = curve.domain, traj.interval

    def resid(P):
        P = np.atleast_2d(P)
        x, d = curve.derivs(P[:, 0])
        W, w = _body(traj, P[:, 1])
        return np.cross(d, _apply(W, x) + w)

    ss, ts = np.linspace(s0, s1, grids.ns), traj.times(grids.nt_edge)
    S, T = np.meshgrid(ss, ts, indexing="ij")
    h = np.linalg.norm(resid(np.stack([S.ravel(), T.ravel()], 1)), axis=1).reshape(S.shape)
    if np.mean(h <= tol.sing) > 0.05:
        raise AssumptionViolation(f"edge {eid}: velocity tangent to the edge on a non-isolated set")
    pad = np.pad(h, 1, constant_values=np.inf)
    neigh = np.min(np.stack([pad[1 + di:pad.shape[0] - 1 + di, 1 + dj:pad.shape[1] - 1 + dj]
                             for di in (-1, 0, 1) for dj in (-1, 0, 1) if di or dj]), axis=0)
    cand = np.argwhere(h <= neigh)
    cand = cand[np.argsort(h[tuple(cand.T)])][:max_candidates]
    found = []
    scale = max(s1 - s0, t1 - t0)
    for i, j in cand:
        sol = least_squares(lambda p: resid(p)[0], x0=[S[i, j], T[i, j]],
                            bounds=([s0, t0], [s1, t1]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        r = float(np.linalg.norm(resid(sol.x)[0]))
        if r > tol.sing:
            continue
        s, t = map(float, sol.x)
        if funnel is not None and not bool(funnel.contains(s, t)):
            g1, g2 = funnel.fns(np.array([[s, t]]))
            if float(g1[0] * g2[0]) > tol.g:
                continue
        if any(abs(p.s - s) + abs(p.t - t) < 1e-6 * scale for p in found):
            continue
        found.append(SingularPoint(eid, s, t, r))
    return found


# ----------------------------------------------------------------- vertex intervals


@dataclass
class ContactInterval:
    a: float
    b: float
    cause_a: str
    cause_b: str
    pattern: tuple


@dataclass
class VertexContactIntervals:
    vertex: str
    intervals: list
    roots: list
    null_functions: list


def vertex_s_fn(solid: SolidBrep, vid: str, traj: Trajectory):
    Z = solid.vertices[vid].point
    normals = []
    for n in solid.vertex_face_normals(vid).values():
        if all(abs(float(np.dot(n, m)) - 1.0) >= 1e-9 for m in normals):
            normals.append(n)
    Nm = np.array(normals)

    def s_fn(t):
        W, w = _body(traj, np.atleast_1d(t))
        vb = _apply(W, Z) + w
        return vb @ Nm.T

    return s_fn, Nm


def vertex_intervals(solid: SolidBrep, vid: str, traj: Trajectory, n: int = 256,
                     tol: Tolerances = Tolerances()) -> VertexContactIntervals:
    """Sub-intervals of I on which the vertex lies on the curve of contact.

    Every root of every ``s_i`` splits the interval; functions vanishing
    identically are reported in ``null_functions`` and excluded from root
    finding.
    """
    s_fn, Nm = vertex_s_fn(solid, vid, traj)
    t0, t1 = traj.interval
    ts = traj.times(n)
    vals = s_fn(ts)
    speed = float(np.max(np.linalg.norm(traj.velocity(solid.vertices[vid].point, ts), axis=-1)))
    eps = tol.g_rel(speed)
    null = [i for i in range(vals.shape[1]) if np.max(np.abs(vals[:, i])) <= eps]
    roots = []
    for i in range(vals.shape[1]):
        if i in null:
            continue
        col = vals[:, i]
        ri = []
        for k in range(n - 1):
            if col[k] == 0.0:
                if 0 < k:
                    ri.append(float(ts[k]))
                continue
            if col[k] * col[k + 1] < 0:
                lam, _ = refine_roots(lambda P, i=i: s_fn(P[:, 0])[:, i], ts[k:k + 1, None], ts[k + 1:k + 2, None],
                                      col[k:k + 1], col[k + 1:k + 2], eps * 1e-3)
                ri.append(float(ts[k] + lam[0] * (ts[k + 1] - ts[k])))
        for a, b in zip(ri, ri[1:]):
            if b - a < 1e-6 * (t1 - t0):
                raise RootClusterTooDense(f"vertex {vid}: roots of s_{i + 1} at {a} and {b}")
        roots += [(r, i) for r in ri]
    roots.sort()
    breaks = [(t0, "t0")]
    for r, i in roots:
        if r - breaks[-1][0] > 1e-12 * (1 + abs(r)) and t1 - r > 1e-12 * (1 + abs(r)):
            breaks.append((r, f"s{i + 1}"))
    breaks.append((t1, "t1"))
    intervals = []
    for (a, ca), (b, cb) in zip(breaks, breaks[1:]):
        mid = s_fn(np.array([0.5 * (a + b)]))[0]
        pattern = tuple(0 if i in null or abs(m) <= eps else int(np.sign(m)) for i, m in enumerate(mid))
        if min(pattern) <= 0 <= max(pattern):
            intervals.append(ContactInterval(a, b, ca, cb, pattern))
    return VertexContactIntervals(vid, intervals, roots, null)


# ----------------------------------------------------------------- debug dump


def dump_funnel_csv(funnel, directory: str):
    """Write the parameter points and triangles of a funnel to CSV files."""
    os.makedirs(directory, exist_ok=True)
    name = f"face_{funnel.face}" if isinstance(funnel, FaceFunnel) else f"edge_{funnel.edge}"
    mesh = funnel.mesh
    with open(os.path.join(directory, name + "_points.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v", "t"] if mesh.points.shape[1] == 3 else ["s", "t"])
        w.writerows(mesh.points.tolist())
    with open(os.path.join(directory, name + "_triangles.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "k"])
        w.writerows(mesh.triangles.tolist())
