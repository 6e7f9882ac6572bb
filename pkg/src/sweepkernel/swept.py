"""Output brep of the swept volume and the per-face parametrizations.

Every output face is a *patch*: a triangulated region of a parameter domain
together with the map sigma that sends it into space and the outward normal
field.  Patches come in four kinds:

* ``edge_funnel_component``: (s, t) -> A(t) e(s) + b(t) over a component of
  an edge funnel;
* ``face_funnel_component``: (u, v, t) -> A(t) S(u, v) + b(t) over a
  component of a face funnel (a surface inside the 3-D prism);
* ``cap``: (u, v) -> A(t_c) S(u, v) + b(t_c) over the cap region of a face;
* ``planar_sweep``: region swept by a face moving inside its own plane.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .brep import SolidBrep, validate_solid
from .cones import in_cone
from .config import Config, Grids, Tolerances
from .contour import boundary_loops, contour_region, triangle_components
from .errors import (AssumptionViolation, DegenerateFunnel, DegenerateStrip, DegenerateTangent,
                     NotSimpleSweep, SingularSample, UnmatchedCoedge)
from .funnel import (EdgeFunnel, FaceFunnel, detect_singularities, dump_funnel_csv, edge_contact_fns,
                     edge_funnel, face_contact_fn, face_funnel, vertex_intervals)
from .motion import Trajectory

DIM_ORDER = {"vertex": 0, "edge": 1, "face": 2}


@dataclass(frozen=True)
class Tag:
    """Generator of an output entity under the correspondence pi."""

    generator: str
    generator_dim: str
    component_index: int = 0

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(d["generator"], d["generator_dim"], int(d.get("component_index", 0)))


def _side_tag(solid: SolidBrep, fid: str, side: str) -> Tag:
    kind = solid.faces[fid].sides.get(side, "edge")
    if kind == "edge":
        return Tag(solid.side_edge(fid, side), "edge")
    return Tag(fid, "face")


def _domain_tag(solid: SolidBrep, fid: str, u: float, v: float) -> Tag:
    """Entity of the solid's boundary that contains S(u, v)."""
    (u0, u1), (v0, v1) = solid.faces[fid].surface.domain
    on = [s for s, hit in (("u0", u == u0), ("u1", u == u1), ("v0", v == v0), ("v1", v == v1)) if hit]
    tags = [_side_tag(solid, fid, s) for s in on]
    edge_tags = [t for t in tags if t.generator_dim == "edge"]
    if len(edge_tags) >= 2:
        e1, e2 = (solid.edges[t.generator] for t in edge_tags[:2])
        common = {e1.start_vertex, e1.end_vertex} & {e2.start_vertex, e2.end_vertex}
        if common:
            return Tag(common.pop(), "vertex")
    if edge_tags:
        return edge_tags[0]
    return Tag(fid, "face")


class Patch:
    """An output face under construction (or after loading, for sampling)."""

    def __init__(self, pid, kind, tag: Tag, source: dict, params, triangles, sigma, normal_fn,
                 bounds=None, constraint=None):
        self.id = pid
        self.kind = kind
        self.tag = tag
        self.source = source
        self.params = np.asarray(params, dtype=float)
        self.triangles = np.asarray(triangles, dtype=int).reshape(-1, 3)
        self.sigma = sigma
        self.normal_fn = normal_fn
        self.bounds = bounds
        # scalar function of the parameters that must vanish on the patch
        self.constraint = constraint
        self.points = sigma(self.params) if len(self.params) else np.zeros((0, 3))
        self.normals = normal_fn(self.params) if len(self.params) else np.zeros((0, 3))
        self.loops: list = []

    # ------------------------------------------------------------------
    def orient(self):
        """Flip all triangles if most of them face against the outward field."""
        if len(self.triangles) == 0:
            return
        P = self.points[self.triangles]
        tn = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
        centre = self.params[self.triangles].mean(axis=1)
        if self.constraint is not None:
            centre = self.snap(centre)
        on = self.normal_fn(centre)
        vote = np.sum(np.sign(np.sum(tn * on, axis=1)))
        if vote < 0:
            self.triangles = self.triangles[:, ::-1].copy()

    def snap(self, P, iters=8):
        """Move parameter points onto the constraint zero set (t held fixed)."""
        P = np.array(P, dtype=float, copy=True)
        if self.constraint is None:
            return P
        h = 1e-7
        for _ in range(iters):
            f = self.constraint(P)
            grad = np.zeros((len(P), 2))
            for k in range(2):
                Q = P.copy()
                Q[:, k] += h
                grad[:, k] = (self.constraint(Q) - f) / h
            g2 = np.sum(grad * grad, axis=1)
            g2 = np.where(g2 > 0, g2, 1.0)
            P[:, :2] -= (f / g2)[:, None] * grad
            if self.bounds is not None:
                lo, hi = self.bounds
                P = np.clip(P, lo, hi)
        return P

    def sample(self, n: int, rng: np.random.Generator):
        """Points on the exact face: area-weighted parameter samples mapped by sigma."""
        if len(self.triangles) == 0:
            return np.zeros((0, 3)), np.zeros((0, 3))
        P = self.points[self.triangles]
        area = 0.5 * np.linalg.norm(np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]), axis=1)
        k = rng.choice(len(area), size=n, p=area / area.sum())
        r1, r2 = rng.random(n), rng.random(n)
        flip = r1 + r2 > 1
        r1, r2 = np.where(flip, 1 - r1, r1), np.where(flip, 1 - r2, r2)
        Q = self.params[self.triangles[k]]
        par = Q[:, 0] + r1[:, None] * (Q[:, 1] - Q[:, 0]) + r2[:, None] * (Q[:, 2] - Q[:, 0])
        par = self.snap(par)
        return self.sigma(par), self.normal_fn(par)

    def project(self, X):
        """Closest points of the exact face to ``X``, seeded from the tessellation."""
        X = np.atleast_2d(X)
        out = np.empty_like(X)
        for i, x in enumerate(X):
            k = int(np.argmin(np.linalg.norm(self.points - x, axis=1)))
            seed = self.params[k]
            if self.kind == "planar_sweep":
                out[i] = self.points[k]
                continue
            lo, hi = self.bounds

            def res(p):
                r = self.sigma(p[None])[0] - x
                if self.constraint is not None:
                    r = np.append(r, 1e3 * self.constraint(p[None])[0])
                return r
            sol = least_squares(res, seed, bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15)
            p = self.snap(sol.x[None])
            out[i] = self.sigma(p)[0]
        return out


# ------------------------------------------------------------------ patch builders


def _world(traj: Trajectory, x, t):
    return traj.point(x, t)


def edge_patch_maps(solid: SolidBrep, eid: str, traj: Trajectory, funnel: EdgeFunnel | None = None):
    curve = solid.edges[eid].curve

    def sigma(P):
        P = np.atleast_2d(P)
        return _world(traj, curve.eval(P[:, 0]), P[:, 1])

    def normal(P):
        P = np.atleast_2d(P)
        _, _, n1, n2 = solid.edge_frame(eid, P[:, 0])
        W, w = traj.body_velocity(P[:, 1])
        x = curve.eval(P[:, 0])
        vb = np.sum(W * x[:, None, :], axis=-1) + w
        g1, g2 = np.sum(n1 * vb, axis=1), np.sum(n2 * vb, axis=1)
        d = g2 - g1
        a = np.clip(np.where(d != 0, g2 / np.where(d != 0, d, 1.0), 0.5), 0.0, 1.0)
        m = a[:, None] * n1 + (1 - a[:, None]) * n2
        m /= np.linalg.norm(m, axis=1, keepdims=True)
        A, _, _, _ = traj.derivs(P[:, 1])
        return np.einsum("nij,nj->ni", A, m)

    bounds = (np.array([curve.domain[0], traj.interval[0]]), np.array([curve.domain[1], traj.interval[1]]))
    return sigma, normal, bounds


def face_patch_maps(solid: SolidBrep, fid: str, traj: Trajectory, t_fixed=None):
    face = solid.faces[fid]
    surf = face.surface

    def sigma(P):
        P = np.atleast_2d(P)
        t = P[:, 2] if t_fixed is None else np.full(len(P), t_fixed)
        return _world(traj, surf.eval(P[:, 0], P[:, 1]), t)

    def normal(P):
        P = np.atleast_2d(P)
        t = P[:, 2] if t_fixed is None else np.full(len(P), t_fixed)
        N = face.outward * surf.natural_normal(P[:, 0], P[:, 1])
        A, _, _, _ = traj.derivs(t)
        return np.einsum("nij,nj->ni", A, N)

    (u0, u1), (v0, v1) = surf.domain
    t0, t1 = traj.interval
    if t_fixed is None:
        bounds = (np.array([u0, v0, t0]), np.array([u1, v1, t1 if t1 > t0 else t0 + 1e-300]))
    else:
        bounds = (np.array([u0, v0]), np.array([u1, v1]))
    return sigma, normal, bounds


class EdgePatch(Patch):
    def __init__(self, pid, solid, eid, traj, params, triangles, comp_index, funnel=None):
        sigma, normal, bounds = edge_patch_maps(solid, eid, traj, funnel)
        super().__init__(pid, "edge_funnel_component", Tag(eid, "edge", comp_index), {"edge": eid},
                         params, triangles, sigma, normal, bounds)
        self.solid, self.eid, self.traj = solid, eid, traj
        e = solid.edges[eid]
        self.sdom, self.tdom = e.curve.domain, traj.interval

    def segment_label(self, pa, pb):
        (s0, s1), (t0, t1) = self.sdom, self.tdom
        if pa[0] == s0 and pb[0] == s0:
            return "s0"
        if pa[0] == s1 and pb[0] == s1:
            return "s1"
        if pa[1] == t0 and pb[1] == t0:
            return "t0"
        if pa[1] == t1 and pb[1] == t1:
            return "t1"
        x = np.array([pa, pb])
        _, _, n1, n2 = self.solid.edge_frame(self.eid, x[:, 0])
        W, w = self.traj.body_velocity(x[:, 1])
        vb = np.sum(W * self.solid.edges[self.eid].curve.eval(x[:, 0])[:, None, :], axis=-1) + w
        g1, g2 = np.abs(np.sum(n1 * vb, 1)).sum(), np.abs(np.sum(n2 * vb, 1)).sum()
        return "a1" if g1 <= g2 else "a2"

    def label_tag(self, label):
        e = self.solid.edges[self.eid]
        if label == "s0":
            return Tag(e.start_vertex, "vertex")
        if label == "s1":
            return Tag(e.end_vertex, "vertex")
        return Tag(self.eid, "edge")

    def fixed(self, label):
        return {"s0": {0: self.sdom[0]}, "s1": {0: self.sdom[1]},
                "t0": {1: self.tdom[0]}, "t1": {1: self.tdom[1]}}.get(label, {})

    def pi_tag(self, p):
        e = self.solid.edges[self.eid]
        if p[0] == self.sdom[0]:
            return Tag(e.start_vertex, "vertex")
        if p[0] == self.sdom[1]:
            return Tag(e.end_vertex, "vertex")
        return Tag(self.eid, "edge")


class _FaceDomainMixin:
    def _side_of(self, pa, pb):
        (u0, u1), (v0, v1) = self.solid.faces[self.fid].surface.domain
        for side, k, val in (("u0", 0, u0), ("u1", 0, u1), ("v0", 1, v0), ("v1", 1, v1)):
            if pa[k] == val and pb[k] == val:
                return side
        return None

    def _side_label(self, side):
        kind = self.solid.faces[self.fid].sides.get(side, "edge")
        return side if kind == "edge" else f"{kind}:{side}"

    def _side_fixed(self, label):
        side = label.split(":")[-1]
        (u0, u1), (v0, v1) = self.solid.faces[self.fid].surface.domain
        return {"u0": {0: u0}, "u1": {0: u1}, "v0": {1: v0}, "v1": {1: v1}}.get(side, {})

    def label_tag(self, label):
        side = label.split(":")[-1]
        if side in ("u0", "u1", "v0", "v1"):
            return _side_tag(self.solid, self.fid, side)
        return Tag(self.fid, "face")

    def pi_tag(self, p):
        return _domain_tag(self.solid, self.fid, p[0], p[1])


class FacePatch(_FaceDomainMixin, Patch):
    def __init__(self, pid, solid, fid, traj, params, triangles, comp_index):
        sigma, normal, bounds = face_patch_maps(solid, fid, traj)
        super().__init__(pid, "face_funnel_component", Tag(fid, "face", comp_index), {"face": fid},
                         params, triangles, sigma, normal, bounds, constraint=face_contact_fn(solid, fid, traj))
        self.solid, self.fid, self.traj = solid, fid, traj

    def segment_label(self, pa, pb):
        t0, t1 = self.traj.interval
        if pa[2] == t0 and pb[2] == t0:
            return "t0"
        if pa[2] == t1 and pb[2] == t1:
            return "t1"
        side = self._side_of(pa, pb)
        return self._side_label(side) if side else "interior"

    def fixed(self, label):
        t0, t1 = self.traj.interval
        if label == "t0":
            return {2: t0}
        if label == "t1":
            return {2: t1}
        return self._side_fixed(label)


class CapPatch(_FaceDomainMixin, Patch):
    def __init__(self, pid, solid, fid, traj, which, params, triangles, comp_index):
        tc = traj.interval[0] if which == "t0" else traj.interval[1]
        sigma, normal, bounds = face_patch_maps(solid, fid, traj, t_fixed=tc)
        super().__init__(pid, "cap", Tag(fid, "face", comp_index), {"face": fid, "time": which},
                         params, triangles, sigma, normal, bounds)
        self.solid, self.fid, self.traj, self.which = solid, fid, traj, which

    def segment_label(self, pa, pb):
        side = self._side_of(pa, pb)
        return self._side_label(side) if side else "contact"

    def fixed(self, label):
        return self._side_fixed(label)


class PlanarPatch(Patch):
    """Region of a plane swept by a face moving inside its own plane."""

    def __init__(self, pid, fid, origin, e1, e2, normal, params, triangles, comp_index):
        origin, e1, e2, normal = (np.asarray(a, dtype=float) for a in (origin, e1, e2, normal))

        def sigma(P):
            P = np.atleast_2d(P)
            return origin + P[:, :1] * e1 + P[:, 1:2] * e2

        def nfn(P):
            return np.tile(normal, (len(np.atleast_2d(P)), 1))

        super().__init__(pid, "planar_sweep", Tag(fid, "face", comp_index),
                         {"face": fid, "origin": origin.tolist(), "e1": e1.tolist(), "e2": e2.tolist(),
                          "normal": normal.tolist()}, params, triangles, sigma, nfn)
        self.fid = fid

    def coords(self, X):
        o, e1, e2 = (np.asarray(self.source[k]) for k in ("origin", "e1", "e2"))
        D = np.atleast_2d(X) - o
        return np.stack([D @ e1, D @ e2], 1)


# ------------------------------------------------------------------ coedge pieces


@dataclass
class _Piece:
    """A boundary segment of a patch between two label changes."""

    id: int
    patch: object
    label: str
    params: np.ndarray
    points: np.ndarray
    closed: bool = False
    start: int = -1
    end: int = -1
    partner: int = -1
    tag: Tag | None = None
    loop: int = -1

    @property
    def length(self):
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


def _loop_pieces(patch: Patch, loop, loop_id, next_id):
    P, X = patch.params, patch.points
    n = len(loop)
    labels = [patch.segment_label(P[loop[k]], P[loop[(k + 1) % n]]) for k in range(n)]
    cuts = [k for k in range(n) if labels[k] != labels[k - 1]]
    closed = not cuts
    if closed:
        key = np.round(X[loop], 9)
        cuts = [int(np.lexsort(key.T[::-1])[0])]
    pieces = []
    for a, i in enumerate(cuts):
        j = cuts[(a + 1) % len(cuts)]
        idx = np.asarray(loop[i:j + 1]) if j > i else np.concatenate([loop[i:], loop[:j + 1]])
        pieces.append(_Piece(next_id + a, patch, labels[i], P[idx].copy(), X[idx].copy(), closed,
                             tag=patch.label_tag(labels[i]), loop=loop_id))
    return pieces


def _piece_constraint(piece: _Piece):
    """Scalar function of the patch parameters that vanishes along the piece."""
    patch = piece.patch
    if isinstance(patch, EdgePatch) and piece.label in ("a1", "a2"):
        k = 0 if piece.label == "a1" else 1
        fns = edge_contact_fns(patch.solid, patch.eid, patch.traj)
        return lambda Q: fns(Q)[k]
    if isinstance(patch, FacePatch):
        return patch.constraint
    if isinstance(patch, CapPatch) and piece.label == "contact":
        fn = face_contact_fn(patch.solid, patch.fid, patch.traj)
        tc = patch.traj.interval[0] if patch.which == "t0" else patch.traj.interval[1]
        return lambda Q: fn(np.column_stack([np.atleast_2d(Q)[:, :2], np.full(len(np.atleast_2d(Q)), tc)]))
    return None


def _project_on_piece(piece: _Piece, X, seed):
    """Parameters on the piece's curve whose image is closest to ``X``."""
    patch = piece.patch
    if isinstance(patch, PlanarPatch):
        return patch.coords(X)[0], 0.0
    fixed = patch.fixed(piece.label)
    free = [k for k in range(len(seed)) if k not in fixed]
    cons = _piece_constraint(piece)
    lo, hi = patch.bounds

    def full(q):
        p = np.array(seed, dtype=float)
        p[free] = q
        for k, val in fixed.items():
            p[k] = val
        return p

    def res(q):
        p = full(q)[None]
        r = patch.sigma(p)[0] - X
        if cons is not None:
            r = np.append(r, cons(p)[0])
        return r
    q0 = np.clip(np.asarray(seed, dtype=float)[free], lo[free], hi[free])
    sol = least_squares(res, q0, bounds=(lo[free], hi[free] + 1e-300), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return full(sol.x), float(np.linalg.norm(res(sol.x)))


def _seg_dist(X, A, B):
    """Distances from points X (k, 3) to segments A->B (m, 3); returns (k, m) dists and params."""
    D = B - A
    L2 = np.maximum(np.sum(D * D, axis=1), 1e-300)
    lam = np.clip(np.einsum("kmi,mi->km", X[:, None, :] - A[None], D) / L2, 0.0, 1.0)
    C = A[None] + lam[..., None] * D[None]
    return np.linalg.norm(X[:, None, :] - C, axis=-1), lam


def _polyline_hausdorff(P, Q):
    if len(P) < 2 or len(Q) < 2:
        return float(np.max(np.linalg.norm(P[:, None] - Q[None], axis=-1)))
    d1, _ = _seg_dist(P, Q[:-1], Q[1:])
    d2, _ = _seg_dist(Q, P[:-1], P[1:])
    return max(float(d1.min(axis=1).max()), float(d2.min(axis=1).max()))


class _Clusters:
    """Union-find clustering of corner points at a fixed radius."""

    def __init__(self, radius):
        self.radius = radius
        self.points: list = []

    def add(self, x):
        for i, p in enumerate(self.points):
            if np.linalg.norm(p - x) <= self.radius:
                return i
        self.points.append(np.asarray(x, dtype=float))
        return len(self.points) - 1

    def find(self, x):
        if not self.points:
            return -1
        d = np.linalg.norm(np.asarray(self.points) - x, axis=1)
        k = int(np.argmin(d))
        return k if d[k] <= self.radius else -1


def _split_t_junctions(pieces, clusters: _Clusters, tol_abs, next_id):
    """Split pieces at cluster vertices lying on their interior."""
    out = []
    V = np.asarray(clusters.points)
    for pc in pieces:
        if pc.closed or len(pc.points) < 2 or pc.length <= tol_abs or isinstance(pc.patch, PlanarPatch):
            out.append(pc)
            continue
        A, B = pc.points[:-1], pc.points[1:]
        d, lam = _seg_dist(V, A, B)
        seg = np.linalg.norm(B - A, axis=1)
        j = np.argmin(d, axis=1)
        dmin = d[np.arange(len(V)), j]
        cand = [k for k in range(len(V)) if k not in (pc.start, pc.end)
                and dmin[k] <= 0.25 * seg[j[k]] + tol_abs]
        cuts = []
        for k in cand:
            jk, lk = int(j[k]), float(lam[k, j[k]])
            seed = pc.params[jk] + lk * (pc.params[jk + 1] - pc.params[jk])
            p, r = _project_on_piece(pc, V[k], seed)
            if r > tol_abs:
                continue
            if np.linalg.norm(V[k] - pc.points[0]) <= tol_abs or np.linalg.norm(V[k] - pc.points[-1]) <= tol_abs:
                continue
            cuts.append((jk + lk, k, p))
        if not cuts:
            out.append(pc)
            continue
        cuts.sort(key=lambda c: c[0])
        prev_idx, prev_v = 0, pc.start
        prev_par, prev_pt = [], []
        for pos, k, p in cuts:
            lo = int(np.ceil(pos))
            par = np.vstack(prev_par + [pc.params[prev_idx:lo], p[None]])
            pts = np.vstack(prev_pt + [pc.points[prev_idx:lo], V[k][None]])
            out.append(_Piece(next_id, pc.patch, pc.label, par, pts, False, prev_v, k, tag=pc.tag, loop=pc.loop))
            next_id += 1
            prev_par, prev_pt = [p[None]], [V[k][None]]
            prev_idx = int(np.floor(pos)) + 1
            prev_v = k
        par = np.vstack(prev_par + [pc.params[prev_idx:]])
        pts = np.vstack(prev_pt + [pc.points[prev_idx:]])
        out.append(_Piece(next_id, pc.patch, pc.label, par, pts, False, prev_v, pc.end, tag=pc.tag, loop=pc.loop))
        next_id += 1
    return out, next_id


def _pairable(a: _Piece, b: _Piece, solid: SolidBrep):
    if a.patch is b.patch:
        if a.label.startswith("seam") and b.label.startswith("seam"):
            return a.label != b.label
        return a.label.startswith("pole") and b.label == a.label
    return solid.adjacent(a.patch.tag.generator, b.patch.tag.generator)


def _max_seg(X):
    return float(np.max(np.linalg.norm(np.diff(X, axis=0), axis=1))) if len(X) > 1 else 0.0


def _pair_pieces(pieces, solid: SolidBrep, tol_abs):
    """Greedy matching of reversed pieces by polyline Hausdorff distance."""
    cands = []
    for i, a in enumerate(pieces):
        for j in range(i + 1, len(pieces)):
            b = pieces[j]
            if a.closed != b.closed:
                continue
            if not a.closed and not (a.start == b.end and a.end == b.start):
                continue
            if not _pairable(a, b, solid):
                continue
            h = _polyline_hausdorff(a.points, b.points)
            seg = max(_max_seg(a.points), _max_seg(b.points))
            if h <= 0.25 * seg + tol_abs:
                cands.append((h, i, j))
    cands.sort()
    for h, i, j in cands:
        if pieces[i].partner < 0 and pieces[j].partner < 0:
            pieces[i].partner, pieces[j].partner = pieces[j].id, pieces[i].id
    return pieces


# ------------------------------------------------------------------ orientation


def orient_edge_face(solid: SolidBrep, eid: str, traj: Trajectory, s: float, t: float,
                     tol: Tolerances = Tolerances()) -> np.ndarray:
    """Outward unit normal of an edge-generated face at ``(s, t)``.

    ``n = (A e'(s)) x v`` is flipped when it does not lie in the world cone
    spanned by the supporting faces' normals.

    Raises
    ------
    SingularSample
        If ``A e'`` and the velocity are parallel at the sample.
    """
    curve = solid.edges[eid].curve
    x, d = curve.derivs(np.array([s]))
    A, _, _, _ = traj.derivs(np.array([t]))
    wbar = (A[0] @ d[0])
    v = traj.velocity(x[0], np.array([t]))[0]
    n = np.cross(wbar, v)
    norm = float(np.linalg.norm(n))
    if norm <= tol.sing * max(1.0, float(np.linalg.norm(v)) * float(np.linalg.norm(wbar))):
        raise SingularSample(f"edge {eid}: tangent and velocity parallel at s={s}, t={t}")
    n /= norm
    _, _, n1, n2 = solid.edge_frame(eid, np.array([s]))
    gens = np.stack([A[0] @ n1[0], A[0] @ n2[0]])
    return n if in_cone(n, gens, 1e-9) else -n


def orient_vertex_coedge(solid: SolidBrep, vid: str, eid: str, traj: Trajectory, t: float,
                         tol: Tolerances = Tolerances()) -> int:
    """Direction flag of the vertex-path co-edge bounding the face of ``eid``.

    Returns +1 when the co-edge runs along the vertex velocity ``w`` and -1
    otherwise.  The test is the sign of ``<e', n x w>`` where ``e'`` points from
    the vertex into the edge; it is reversed when the vertex is the edge's end.

    Raises
    ------
    DegenerateTangent
        If the vertex is momentarily at rest.
    """
    e = solid.edges[eid]
    if vid not in (e.start_vertex, e.end_vertex):
        raise ValueError(f"vertex {vid} does not bound edge {eid}")
    at_start = vid == e.start_vertex
    s = e.curve.domain[0] if at_start else e.curve.domain[1]
    Z = solid.vertices[vid].point
    w = traj.velocity(Z, np.array([t]))[0]
    if np.linalg.norm(w) <= tol.g:
        raise DegenerateTangent(f"vertex {vid} has zero velocity at t={t}")
    n = orient_edge_face(solid, eid, traj, s, t, tol)
    _, d = e.curve.derivs(np.array([s]))
    A, _, _, _ = traj.derivs(np.array([t]))
    ep = A[0] @ d[0]
    sign = 1 if float(np.dot(ep, np.cross(n, w))) > 0 else -1
    return sign if at_start else -sign


# ------------------------------------------------------------------ patches from funnels


@dataclass
class LoopUnderConstruction:
    """Labelled boundary loop of a patch, face on the left w.r.t. the outward normal."""

    patch: str
    labels: list
    pieces: list = field(repr=False, default_factory=list)


def assemble_loops(patch: Patch) -> list:
    """Boundary loops of an oriented patch split into labelled co-edges."""
    out = []
    for k, loop in enumerate(boundary_loops(patch.triangles)):
        pieces = _loop_pieces(patch, loop, k, 0)
        out.append(LoopUnderConstruction(patch.id, [p.label for p in pieces], pieces))
    return out


def build_edge_faces(solid: SolidBrep, eid: str, funnel: EdgeFunnel, traj: Trajectory) -> list:
    """One oriented edge-generated patch per funnel component."""
    out = []
    for ci, comp in enumerate(funnel.components):
        p = EdgePatch(f"CE_{eid}_{ci}", solid, eid, traj, comp.points, comp.triangles, ci, funnel)
        p.orient()
        out.append(p)
    return out


def build_face_faces(solid: SolidBrep, fid: str, funnel: FaceFunnel, traj: Trajectory) -> list:
    out = []
    for ci, comp in enumerate(funnel.components):
        p = FacePatch(f"CF_{fid}_{ci}", solid, fid, traj, comp.points, comp.triangles, ci)
        p.orient()
        out.append(p)
    return out


def _uv_seam_glue(points, face):
    glue = []
    (u0, u1), (v0, v1) = face.surface.domain
    for k, (side, lo, hi) in enumerate((("u0", u0, u1), ("v0", v0, v1))):
        if face.sides.get(side) != "seam":
            continue
        keys = {round(float(points[i, 1 - k]), 9): i for i in np.nonzero(points[:, k] == lo)[0]}
        for i in np.nonzero(points[:, k] == hi)[0]:
            j = keys.get(round(float(points[i, 1 - k]), 9))
            if j is not None:
                glue.append((j, i))
    return glue


def compute_caps(solid: SolidBrep, traj: Trajectory, grids: Grids = Grids(), tol: Tolerances = Tolerances(),
                 skip=()) -> list:
    """Cap patches: ``{f(., t0) <= 0}`` at the start and ``{f(., t1) >= 0}`` at the end.

    Faces listed in ``skip`` (faces moving inside their own surface) are left
    to the planar-sweep construction.
    """
    out = []
    t0, t1 = traj.interval
    for fid, face in solid.faces.items():
        if fid in skip:
            continue
        (u0, u1), (v0, v1) = face.surface.domain
        us, vs = np.linspace(u0, u1, grids.nu), np.linspace(v0, v1, grids.nv)
        fn = face_contact_fn(solid, fid, traj)
        for which, tc, sgn in (("t0", t0, 1.0), ("t1", t1, -1.0)):
            def fun(P, tc=tc, sgn=sgn):
                P = np.atleast_2d(P)
                return sgn * fn(np.column_stack([P[:, :2], np.full(len(P), tc)]))
            mesh = contour_region(fun, us, vs, tol.f)
            if len(mesh.triangles) == 0:
                continue
            glue = _uv_seam_glue(mesh.points, face)
            comps = triangle_components(mesh.triangles, len(mesh.points), glue)
            for ci, tri_idx in enumerate(comps):
                sub = mesh.submesh(tri_idx)
                p = CapPatch(f"CAP{which[1]}_{fid}_{ci}", solid, fid, traj, which, sub.points, sub.triangles, ci)
                p.orient()
                out.append(p)
    return out


# ------------------------------------------------------------------ in-plane faces


def _plane_frame(n):
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, a)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


def _slide_segment(solid: SolidBrep, eid: str, traj: Trajectory, n=257):
    """Extent of the line swept by an edge sliding along itself."""
    e = solid.edges[eid]
    ts = traj.times(n)
    ends = {vid: traj.point(solid.vertices[vid].point, ts) for vid in (e.start_vertex, e.end_vertex)}
    P0 = ends[e.start_vertex][0]
    d = ends[e.end_vertex][0] - P0
    d /= np.linalg.norm(d)
    best = {}
    for vid, X in ends.items():
        proj = (X - P0) @ d
        for k in (int(np.argmin(proj)), int(np.argmax(proj))):
            best.setdefault("lo", (np.inf, None, None))
            best.setdefault("hi", (-np.inf, None, None))
            if proj[k] < best["lo"][0]:
                best["lo"] = (proj[k], X[k], vid)
            if proj[k] > best["hi"][0]:
                best["hi"] = (proj[k], X[k], vid)
    return best["lo"][1:], best["hi"][1:]


def _signed_area(Q):
    x, y = Q[:, 0], Q[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _triangulate(outer, holes):
    import shapely
    from shapely.geometry import Polygon
    poly = Polygon(outer, holes)
    verts = np.vstack([outer] + list(holes))
    keys = {tuple(np.round(v, 10)): i for i, v in enumerate(verts)}
    tris = []
    for tri in shapely.constrained_delaunay_triangles(poly).geoms:
        c = np.asarray(tri.exterior.coords)[:3]
        idx = []
        for v in c:
            k = tuple(np.round(v, 10))
            if k not in keys:
                keys[k] = len(verts)
                verts = np.vstack([verts, v])
            idx.append(keys[k])
        tris.append(idx)
    return verts, np.asarray(tris, dtype=int).reshape(-1, 3)


def _inplane_patches(solid, traj, inplane, pieces, clusters, tol_abs, next_id, counters, slides):
    """Planar patches for faces moving inside their own plane.

    Their boundary is made of the still unpaired co-edges lying in the plane,
    taken reversed, plus slide segments of edges shared by two such faces.
    """
    from .geometry import Plane
    patches = []
    for fid in inplane:
        face = solid.faces[fid]
        if not isinstance(face.surface, Plane):
            raise AssumptionViolation(f"face {fid} moves inside its own non-planar surface")
        (u0, u1), (v0, v1) = face.surface.domain
        uc, vc = np.array([0.5 * (u0 + u1)]), np.array([0.5 * (v0 + v1)])
        t0 = traj.interval[0]
        A, _, _, _ = traj.derivs(np.array([t0]))
        nrm = A[0] @ (face.outward * face.surface.natural_normal(uc, vc)[0])
        nrm /= np.linalg.norm(nrm)
        origin = traj.point(face.surface.eval(uc, vc), np.array([t0]))[0]
        e1, e2 = _plane_frame(nrm)
        members = [pc for pc in pieces if pc.partner < 0 and solid.adjacent(pc.patch.tag.generator, fid)
                   and not isinstance(pc.patch, PlanarPatch)
                   and np.max(np.abs((pc.points - origin) @ nrm)) <= tol_abs]
        directed = [(pc.end, pc.start, pc.points[::-1], pc) for pc in members]
        undirected = [s for s in slides if fid in s["faces"]]
        used_d, used_s, loops = set(), set(), []
        while len(used_d) < len(directed):
            k0 = next(i for i in range(len(directed)) if i not in used_d)
            used_d.add(k0)
            loop = [("d", k0)]
            start, cur = directed[k0][0], directed[k0][1]
            while cur != start:
                nxt = next((("d", i) for i, d in enumerate(directed) if i not in used_d and d[0] == cur), None)
                if nxt is None:
                    nxt = next((("s", i) for i, s in enumerate(undirected)
                                if i not in used_s and cur in s["ends"]), None)
                if nxt is None:
                    raise UnmatchedCoedge(f"planar face {fid}: open boundary chain at vertex {cur}")
                if nxt[0] == "d":
                    used_d.add(nxt[1])
                    cur = directed[nxt[1]][1]
                else:
                    used_s.add(nxt[1])
                    s = undirected[nxt[1]]
                    cur = s["ends"][1] if s["ends"][0] == cur else s["ends"][0]
                    nxt = ("s", nxt[1], cur)
                loop.append(nxt)
            loops.append(loop)
        # geometry of each loop in plane coordinates
        loop_pts = []
        for loop in loops:
            pts, prev_end = [], directed[loop[0][1]][0]
            for item in loop:
                if item[0] == "d":
                    seg = directed[item[1]][2]
                    prev_end = directed[item[1]][1]
                else:
                    s = undirected[item[1]]
                    a, b = (s["ends"][0], s["ends"][1]) if item[2] == s["ends"][1] else (s["ends"][1], s["ends"][0])
                    seg = np.array([clusters.points[a], clusters.points[b]])
                pts.append(seg[:-1])
            Q = np.vstack(pts)
            loop_pts.append(np.stack([(Q - origin) @ e1, (Q - origin) @ e2], 1))
        areas = [_signed_area(Q) for Q in loop_pts]
        outers = [i for i, a in enumerate(areas) if a > 0]
        from shapely.geometry import Point, Polygon
        for oi in outers:
            holes = [i for i, a in enumerate(areas) if a <= 0
                     and Polygon(loop_pts[oi]).contains(Point(loop_pts[i][0]))]
            verts, tris = _triangulate(loop_pts[oi], [loop_pts[i] for i in holes])
            ci = counters.get(fid, 0)
            counters[fid] = ci + 1
            patch = PlanarPatch(f"PS_{fid}_{ci}", fid, origin, e1, e2, nrm, verts, tris, ci)
            patch.orient()
            patches.append(patch)
            for li in [oi] + holes:
                lid = next_id
                next_id += 1
                for item in loops[li]:
                    if item[0] == "d":
                        a, b, X, src = directed[item[1]]
                        pc = _Piece(next_id, patch, "planar", patch.coords(X), X.copy(), False, a, b,
                                    partner=src.id, tag=src.tag, loop=lid)
                        src.partner = pc.id
                    else:
                        s = undirected[item[1]]
                        b = item[2]
                        a = s["ends"][0] if s["ends"][1] == b else s["ends"][1]
                        X = np.array([clusters.points[a], clusters.points[b]])
                        pc = _Piece(next_id, patch, "slide", patch.coords(X), X, False, a, b,
                                    tag=Tag(s["edge"], "edge"), loop=lid)
                        s["pieces"].append(pc)
                    next_id += 1
                    pieces.append(pc)
    for s in slides:
        if len(s["pieces"]) == 2:
            p, q = s["pieces"]
            p.partner, q.partner = q.id, p.id
    return patches, next_id


# ------------------------------------------------------------------ output model


@dataclass
class SweptVertex:
    id: str
    point: np.ndarray
    tag: Tag


@dataclass
class SweptEdge:
    id: str
    tag: Tag
    start: str
    end: str
    points: np.ndarray
    coedges: list


@dataclass
class SweptCoedge:
    id: str
    edge: str
    face: str
    loop: str
    sense: int
    label: str
    params: np.ndarray
    points: np.ndarray


@dataclass
class SweptLoop:
    id: str
    face: str
    coedges: list


@dataclass
class SweptFace:
    id: str
    tag: Tag
    provenance: str
    source: dict
    loops: list
    params: np.ndarray
    triangles: np.ndarray
    points: np.ndarray
    normals: np.ndarray

    @property
    def area(self) -> float:
        P = self.points[self.triangles]
        return 0.5 * float(np.sum(np.linalg.norm(np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]), axis=1)))


def _arr(a):
    return np.asarray(a, dtype=float).tolist()


class SweptBrep:
    """Boundary representation of the swept volume.

    Entities carry a :class:`Tag` naming their generator in the input solid.
    The input solid, trajectory and configuration are embedded so that the
    exact face maps can be rebuilt after loading from JSON.
    """

    def __init__(self, vertices, edges, coedges, loops, faces, report=None, source=None, patches=None):
        self.vertices: dict = vertices
        self.edges: dict = edges
        self.coedges: dict = coedges
        self.loops: dict = loops
        self.faces: dict = faces
        self.report: dict = report or {}
        self.source: dict = source or {}
        self._patches: dict = dict(patches or {})
        self._inputs = None

    # -- counts and topology ------------------------------------------------
    def counts(self) -> dict:
        return {"V": len(self.vertices), "E": len(self.edges), "F": len(self.faces), "L": len(self.loops)}

    def euler_characteristic(self) -> int:
        c = self.counts()
        return c["V"] - c["E"] + c["F"] - (c["L"] - c["F"])

    def is_closed(self) -> bool:
        for e in self.edges.values():
            if len(e.coedges) != 2:
                return False
            a, b = (self.coedges[c] for c in e.coedges)
            if a.sense != -b.sense:
                return False
        return True

    def face_neighbours(self) -> dict:
        out = {f: set() for f in self.faces}
        for e in self.edges.values():
            fa, fb = (self.coedges[c].face for c in e.coedges)
            if fa != fb:
                out[fa].add(fb)
                out[fb].add(fa)
        return out

    def faces_by_generator(self, generator: str) -> list:
        return [f for f in self.faces.values() if f.tag.generator == generator]

    # -- exact geometry -------------------------------------------------------
    def inputs(self):
        if self._inputs is None:
            from .motion import trajectory_from_dict
            self._inputs = (SolidBrep.from_dict(self.source["solid"]),
                            trajectory_from_dict(self.source["trajectory"]))
        return self._inputs

    def patch(self, fid: str) -> Patch:
        """Live face map of ``fid`` (rebuilt from the embedded inputs if needed)."""
        if fid in self._patches:
            return self._patches[fid]
        f = self.faces[fid]
        if f.provenance == "planar_sweep":
            s = f.source
            p = PlanarPatch(fid, s["face"], s["origin"], s["e1"], s["e2"], s["normal"], f.params, f.triangles,
                            f.tag.component_index)
        else:
            solid, traj = self.inputs()
            ci = f.tag.component_index
            if f.provenance == "edge_funnel_component":
                p = EdgePatch(fid, solid, f.source["edge"], traj, f.params, f.triangles, ci)
            elif f.provenance == "face_funnel_component":
                p = FacePatch(fid, solid, f.source["face"], traj, f.params, f.triangles, ci)
            else:
                p = CapPatch(fid, solid, f.source["face"], traj, f.source["time"], f.params, f.triangles, ci)
        p.triangles = np.asarray(f.triangles, dtype=int).reshape(-1, 3)
        p.tag = f.tag
        self._patches[fid] = p
        return p

    def sample(self, n: int, rng: np.random.Generator | None = None):
        """Area-weighted exact samples over all faces: (points, outward normals, face ids)."""
        rng = rng or np.random.default_rng(0)
        fids = list(self.faces)
        areas = np.array([self.faces[f].area for f in fids])
        counts = rng.multinomial(n, areas / areas.sum())
        P, N, F = [], [], []
        for fid, k in zip(fids, counts):
            if k == 0:
                continue
            x, nrm = self.patch(fid).sample(int(k), rng)
            P.append(x)
            N.append(nrm / np.linalg.norm(nrm, axis=1, keepdims=True))
            F += [fid] * len(x)
        return np.concatenate(P), np.concatenate(N), F

    def closest_points(self, X):
        """Closest points on the exact faces (face maps, not the tessellation)."""
        X = np.atleast_2d(X)
        best = np.full(len(X), np.inf)
        out = np.zeros_like(X)
        for fid, f in self.faces.items():
            if len(f.points) == 0:
                continue
            # a face point lies within one triangle edge of some tessellation vertex
            T = f.points[f.triangles]
            h = float(np.max(np.linalg.norm(T - np.roll(T, 1, axis=1), axis=-1))) if len(T) else 0.0
            d0 = np.min(np.linalg.norm(X[:, None, :] - f.points[None], axis=-1), axis=1)
            idx = np.nonzero(d0 - h <= best)[0]
            if len(idx) == 0:
                continue
            Y = self.patch(fid).project(X[idx])
            d = np.linalg.norm(Y - X[idx], axis=1)
            upd = d < best[idx]
            best[idx[upd]] = d[upd]
            out[idx[upd]] = Y[upd]
        return out, best

    # -- serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "vertices": [{"id": v.id, "point": _arr(v.point), "tag": v.tag.to_dict()} for v in self.vertices.values()],
            "edges": [{"id": e.id, "tag": e.tag.to_dict(), "start": e.start, "end": e.end,
                       "points": _arr(e.points), "coedges": list(e.coedges)} for e in self.edges.values()],
            "coedges": [{"id": c.id, "edge": c.edge, "face": c.face, "loop": c.loop, "sense": c.sense,
                         "label": c.label, "params": _arr(c.params), "points": _arr(c.points)}
                        for c in self.coedges.values()],
            "loops": [{"id": lp.id, "face": lp.face, "coedges": list(lp.coedges)} for lp in self.loops.values()],
            "faces": [{"id": f.id, "tag": f.tag.to_dict(), "provenance": f.provenance, "source": f.source,
                       "loops": list(f.loops), "params": _arr(f.params), "triangles": np.asarray(f.triangles).tolist(),
                       "points": _arr(f.points), "normals": _arr(f.normals)} for f in self.faces.values()],
            "report": self.report,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweptBrep":
        A = lambda a: np.asarray(a, dtype=float)  # noqa: E731
        V = {v["id"]: SweptVertex(v["id"], A(v["point"]), Tag.from_dict(v["tag"])) for v in d["vertices"]}
        E = {e["id"]: SweptEdge(e["id"], Tag.from_dict(e["tag"]), e["start"], e["end"], A(e["points"]),
                                list(e["coedges"])) for e in d["edges"]}
        C = {c["id"]: SweptCoedge(c["id"], c["edge"], c["face"], c["loop"], int(c["sense"]), c["label"],
                                  A(c["params"]), A(c["points"])) for c in d["coedges"]}
        L = {lp["id"]: SweptLoop(lp["id"], lp["face"], list(lp["coedges"])) for lp in d["loops"]}
        F = {f["id"]: SweptFace(f["id"], Tag.from_dict(f["tag"]), f["provenance"], f["source"], list(f["loops"]),
                                A(f["params"]), np.asarray(f["triangles"], dtype=int).reshape(-1, 3),
                                A(f["points"]).reshape(-1, 3), A(f["normals"]).reshape(-1, 3)) for f in d["faces"]}
        return cls(V, E, C, L, F, d.get("report", {}), d.get("source", {}))

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "SweptBrep":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# ------------------------------------------------------------------ driver


def _model_scale(solid: SolidBrep, traj: Trajectory) -> float:
    from .oracle import swept_bounds
    lo, hi = swept_bounds(solid, traj, n=16, pad=0.0)
    return max(1.0, float(np.linalg.norm(hi - lo)))


def build_patches(solid: SolidBrep, traj: Trajectory, config: Config = Config()):
    """All envelope and cap patches plus diagnostic information."""
    tol, grids = config.tol, config.grids
    info = {"absorbed_edges": [], "empty_edges": [], "inplane_faces": [], "singular_points": [],
            "vertex_intervals": {}, "funnel_residual_max": 0.0}
    patches = []
    for eid, e in solid.edges.items():
        if not e.sharp:
            continue
        try:
            fun = edge_funnel(solid, eid, traj, grids, tol)
        except DegenerateStrip:
            info["absorbed_edges"].append(eid)
            continue
        if config.dump_funnels:
            dump_funnel_csv(fun, config.dump_funnels)
        if not fun.components:
            info["empty_edges"].append(eid)
            continue
        for sp in detect_singularities(solid, eid, traj, fun, grids, tol):
            info["singular_points"].append({"edge": eid, "s": sp.s, "t": sp.t, "residual": sp.residual})
        patches += build_edge_faces(solid, eid, fun, traj)
    for fid in solid.faces:
        try:
            fun = face_funnel(solid, fid, traj, grids, tol)
        except DegenerateFunnel:
            info["inplane_faces"].append(fid)
            continue
        if config.dump_funnels:
            dump_funnel_csv(fun, config.dump_funnels)
        info["funnel_residual_max"] = max(info["funnel_residual_max"], fun.residual_max())
        patches += build_face_faces(solid, fid, fun, traj)
    for vid, v in solid.vertices.items():
        if v.sharp:
            vi = vertex_intervals(solid, vid, traj, grids.n_vertex, tol)
            info["vertex_intervals"][vid] = [{"a": iv.a, "b": iv.b, "cause_a": iv.cause_a, "cause_b": iv.cause_b,
                                              "pattern": list(iv.pattern)} for iv in vi.intervals]
    patches += compute_caps(solid, traj, grids, tol, skip=set(info["inplane_faces"]))
    return patches, info


def _renumber(patches):
    """Component indices counted per generator across all patch kinds."""
    counters = {}
    for p in patches:
        g = p.tag.generator
        p.tag = Tag(g, p.tag.generator_dim, counters.get(g, 0))
        counters[g] = counters.get(g, 0) + 1
    return counters


def assemble(solid: SolidBrep, traj: Trajectory, patches: list, info: dict, config: Config = Config()) -> SweptBrep:
    """Split, cluster, pair and emit the output brep.

    Raises
    ------
    UnmatchedCoedge
        If some co-edge finds no partner (the shell would not close).
    """
    scale = _model_scale(solid, traj)
    tol_abs = config.tol.loop * scale
    counters = _renumber(patches)
    pieces, nid, lid = [], 0, 0
    for patch in patches:
        for loop in boundary_loops(patch.triangles):
            pcs = _loop_pieces(patch, loop, lid, nid)
            lid += 1
            nid += len(pcs)
            pieces += pcs
    nid = max(nid, lid)
    clusters = _Clusters(tol_abs)
    for pc in pieces:
        if not pc.closed:
            pc.start = clusters.add(pc.points[0])
            pc.end = clusters.add(pc.points[-1])
    pieces, nid = _split_t_junctions(pieces, clusters, tol_abs, nid)
    pieces = [pc for pc in pieces if len(pc.points) > 1
              and not ((pc.closed or pc.start == pc.end) and pc.length <= tol_abs)]
    _pair_pieces(pieces, solid, tol_abs)

    inplane = info.get("inplane_faces", [])
    slides, slide_tags = [], {}
    for eid in solid.edges:
        fl, fr = solid.edge_faces(eid)
        if fl in inplane and fr in inplane:
            (xa, va), (xb, vb) = _slide_segment(solid, eid, traj)
            a, b = clusters.add(xa), clusters.add(xb)
            slide_tags.setdefault(a, []).append(Tag(va, "vertex"))
            slide_tags.setdefault(b, []).append(Tag(vb, "vertex"))
            slides.append({"edge": eid, "faces": (fl, fr), "ends": (a, b), "pieces": []})
    planar, nid = _inplane_patches(solid, traj, inplane, pieces, clusters, tol_abs, max(nid, lid + 1) + 10_000,
                                   counters, slides)
    patches = patches + planar

    # closed loops without corners get one vertex shared with the partner
    by_id = {pc.id: pc for pc in pieces}
    for pc in pieces:
        if pc.closed and pc.start < 0 and pc.partner >= 0:
            q = by_id[pc.partner]
            k = clusters.add(pc.points[0])
            j = int(np.argmin(np.linalg.norm(q.points[:-1] - pc.points[0], axis=1)))
            q.points = np.vstack([q.points[j:-1], q.points[:j + 1]])
            q.params = np.vstack([q.params[j:-1], q.params[:j + 1]])
            q.points[0] = q.points[-1] = pc.points[0]
            pc.start = pc.end = q.start = q.end = k

    unmatched = [pc for pc in pieces if pc.partner < 0]
    if unmatched:
        desc = ", ".join(f"{pc.patch.id}:{pc.label}" for pc in unmatched[:8])
        raise UnmatchedCoedge(f"{len(unmatched)} co-edges without partner ({desc})")

    # vertices
    cand = {}
    for pc in pieces:
        if isinstance(pc.patch, PlanarPatch):
            continue
        for k, par in ((pc.start, pc.params[0]), (pc.end, pc.params[-1])):
            cand.setdefault(k, []).append(pc.patch.pi_tag(par))
    for k, tags in slide_tags.items():
        cand.setdefault(k, []).extend(tags)
    used = sorted({pc.start for pc in pieces} | {pc.end for pc in pieces})
    vname = {k: f"V{i}" for i, k in enumerate(used)}
    vertices = {}
    for k in used:
        tags = cand.get(k) or [Tag("?", "face")]
        tag = min(tags, key=lambda t: (DIM_ORDER[t.generator_dim], t.generator))
        vertices[vname[k]] = SweptVertex(vname[k], clusters.points[k].copy(), tag)

    # edges and co-edges
    edges, coedges = {}, {}
    pid = {pc.id: pc for pc in pieces}
    cname = {pc.id: f"C{i}" for i, pc in enumerate(pieces)}
    for pc in pieces:
        if pc.id > pc.partner:
            continue
        q = pid[pc.partner]
        eid = f"E{len(edges)}"
        tag = min((pc.tag, q.tag), key=lambda t: DIM_ORDER[t.generator_dim])
        edges[eid] = SweptEdge(eid, tag, vname[pc.start], vname[pc.end], pc.points.copy(), [cname[pc.id], cname[q.id]])
        for r, sense in ((pc, 1), (q, -1)):
            coedges[cname[r.id]] = SweptCoedge(cname[r.id], eid, r.patch.id, f"L{r.loop}", sense, r.label,
                                               r.params.copy(), r.points.copy())

    # loops and faces
    loops = {}
    for pc in pieces:
        lname = f"L{pc.loop}"
        loops.setdefault(lname, SweptLoop(lname, pc.patch.id, []))
        loops[lname].coedges.append(cname[pc.id])
    faces = {}
    for p in patches:
        fl = [ln for ln, lp in loops.items() if lp.face == p.id]
        faces[p.id] = SweptFace(p.id, p.tag, p.kind, p.source, fl, p.params, p.triangles, p.points, p.normals)

    report = dict(info)
    source = {"solid": solid.to_dict(), "trajectory": traj.to_dict(), "config": config.to_dict()}
    swept = SweptBrep(vertices, edges, coedges, loops, faces, report, source, {p.id: p for p in patches})
    swept._inputs = (solid, traj)
    adj = compute_adjacencies(swept, solid)
    report.update(swept.counts())
    report["euler_characteristic"] = swept.euler_characteristic()
    report["closed"] = swept.is_closed()
    report["adjacency_violations"] = adj["violations"]
    report["scale"] = scale
    return swept


def compute_adjacencies(swept: SweptBrep, solid: SolidBrep) -> dict:
    """Face adjacency of the output and its consistency with adjacency in the input.

    Every pair of output faces sharing an edge must have generators that are
    adjacent (equal, incident, or sharing a boundary entity) in the solid.
    """
    nb = swept.face_neighbours()
    violations = []
    for fa, others in nb.items():
        for fb in others:
            if fa < fb:
                ga, gb = swept.faces[fa].tag.generator, swept.faces[fb].tag.generator
                if not solid.adjacent(ga, gb):
                    violations.append([fa, fb])
    return {"faces": {f: sorted(s) for f, s in nb.items()}, "violations": violations}


# ------------------------------------------------------------------ simplicity


@dataclass
class SimplicityReport:
    simple: bool
    evidence: list
    n_samples: int


def verify_simple(solid: SolidBrep, traj: Trajectory, samples: int = 400, config: Config = Config(),
                  patches=None, nt: int = 64) -> SimplicityReport:
    """Search for contact points that lie in the interior of another position of the solid.

    Samples are taken from the edge- and face-generated patches.  A sample
    ``y = h(t) x`` is evidence of a non-simple sweep when the inverse
    trajectory ``h(t'')^{-1} y`` dips below ``-1e-3 * scale`` into the solid.
    """
    from .oracle import SolidDistance
    if patches is None:
        patches, _ = build_patches(solid, traj, Config(config.tol, config.grids))
    P, T = [], []
    for p in patches:
        if p.kind == "edge_funnel_component":
            P.append(p.points)
            T.append(p.params[:, 1])
        elif p.kind == "face_funnel_component":
            P.append(p.points)
            T.append(p.params[:, 2])
    if not P:
        return SimplicityReport(True, [], 0)
    P, T = np.concatenate(P), np.concatenate(T)
    if len(P) > samples:
        idx = np.random.default_rng(0).choice(len(P), samples, replace=False)
        P, T = P[idx], T[idx]
    dist = SolidDistance(solid)
    ts = traj.times(nt)
    Q = traj.inverse(np.broadcast_to(P[:, None, :], (len(P), nt, 3)).reshape(-1, 3), np.tile(ts, len(P)))
    sd = dist(Q).reshape(len(P), nt)
    margin = 1e-3 * _model_scale(solid, traj)
    evidence = []
    for i in np.nonzero(sd.min(axis=1) < -margin)[0]:
        k = int(np.argmin(sd[i]))
        evidence.append({"point": P[i].tolist(), "t_contact": float(T[i]), "t_occluding": float(ts[k]),
                         "depth": float(sd[i, k])})
    evidence.sort(key=lambda e: e["depth"])
    return SimplicityReport(not evidence, evidence, len(P))


def sweep(solid: SolidBrep, traj: Trajectory, config: Config = Config()) -> SweptBrep:
    """Boundary representation of the volume swept by ``solid`` along ``traj``.

    Raises
    ------
    AssumptionViolation
        If the solid fails validation or a sub-step detects a degenerate case.
    NotSimpleSweep
        If ``config.verify_simple`` is set and occluded contact points are found.
    UnmatchedCoedge
        If the output shell cannot be closed.
    """
    validate_solid(solid, config.tol).raise_if_rejected()
    patches, info = build_patches(solid, traj, config)
    if config.verify_simple:
        rep = verify_simple(solid, traj, config=config, patches=patches)
        if not rep.simple:
            raise NotSimpleSweep(f"occluded contact point: {rep.evidence[0]}")
        info["simplicity_samples"] = rep.n_samples
    return assemble(solid, traj, patches, info, config)
