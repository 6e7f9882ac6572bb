"""Independent verification by inverse trajectories.

A point x lies in M(t) iff its inverse trajectory A(t)^T (x - b(t)) lies in M,
so membership in the swept volume reduces to minimizing the signed distance
to the fixed solid M over t.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .brep import SolidBrep
from .config import Tolerances
from .cones import edge_contact_test
from .motion import Trajectory


class SolidDistance:
    """Signed distance to a validated solid (negative inside).

    The nearest face comes from per-face projection.  A nearest point strictly
    inside a face takes the sign of the outward normal; a nearest point on a
    sharp convex edge or vertex is outside.  Ray parity on a tessellation
    settles the rare cases where the projection is inconclusive.
    """

    def __init__(self, solid: SolidBrep, n_tess: int = 24):
        self.solid = solid
        self.faces = list(solid.faces.values())
        lo, hi = solid.bounding_box()
        self.center = 0.5 * (lo + hi)
        tris = []
        radius = 0.0
        for f in self.faces:
            (u0, u1), (v0, v1) = f.surface.domain
            uu, vv = np.meshgrid(np.linspace(u0, u1, n_tess), np.linspace(v0, v1, n_tess), indexing="ij")
            P = f.surface.eval(uu, vv)
            radius = max(radius, float(np.max(np.linalg.norm(P - self.center, axis=-1))))
            a, b, c, d = P[:-1, :-1], P[1:, :-1], P[1:, 1:], P[:-1, 1:]
            tris.append(np.stack([a, b, c], -2).reshape(-1, 3, 3))
            tris.append(np.stack([a, c, d], -2).reshape(-1, 3, 3))
        self.tris = np.concatenate(tris)
        self.radius = radius
        self.scale = 2.0 * radius + 1e-300
        self._rng = np.random.default_rng(12345)

    def _face_query(self, f, Q):
        u, v = f.surface.project(Q)
        S = f.surface.eval(u, v)
        d = np.linalg.norm(Q - S, axis=-1)
        N = f.outward * f.surface.natural_normal(u, v)
        dot = np.sum((Q - S) * N, axis=-1)
        (u0, u1), (v0, v1) = f.surface.domain
        eps_u, eps_v = 1e-12 * (u1 - u0), 1e-12 * (v1 - v0)
        clamped = np.zeros(len(Q), dtype=bool)
        for side, on in (("u0", u <= u0 + eps_u), ("u1", u >= u1 - eps_u),
                         ("v0", v <= v0 + eps_v), ("v1", v >= v1 - eps_v)):
            if f.sides.get(side, "edge") == "edge":
                clamped |= on
        return d, dot, clamped

    def __call__(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        n = len(Q)
        best = np.full(n, np.inf)
        dot = np.zeros(n)
        clamped = np.zeros(n, dtype=bool)
        for f in self.faces:
            d, dt, cl = self._face_query(f, Q)
            # prefer an unclamped nearest point on ties
            better = (d < best - 1e-12 * self.scale) | ((np.abs(d - best) <= 1e-12 * self.scale) & ~cl & clamped)
            best = np.where(better, d, best)
            dot = np.where(better, dt, dot)
            clamped = np.where(better, cl, clamped)
        sign = np.where(clamped, 1.0, np.sign(dot))
        tiny = 1e-12 * self.scale
        unsure = (~clamped) & (np.abs(dot) < 0.5 * best) & (best > tiny)
        if np.any(unsure):
            idx = np.nonzero(unsure)[0]
            sign[idx] = np.where(self.inside_parity(Q[idx]), -1.0, 1.0)
        sign = np.where(best <= tiny, 0.0, sign)
        return sign * best

    def inside_parity(self, Q) -> np.ndarray:
        """Ray-parity containment on the tessellation, with jittered rays."""
        Q = np.atleast_2d(Q)
        v0, v1, v2 = self.tris[:, 0], self.tris[:, 1], self.tris[:, 2]
        e1, e2 = v1 - v0, v2 - v0
        out = np.zeros(len(Q), dtype=bool)
        for k, q in enumerate(Q):
            votes = []
            for _ in range(3):
                d = self._rng.normal(size=3)
                d /= np.linalg.norm(d)
                p = np.cross(d, e2)
                det = np.sum(e1 * p, axis=1)
                ok = np.abs(det) > 1e-14
                inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
                s = q - v0
                uu = np.sum(s * p, axis=1) * inv
                qv = np.cross(s, e1)
                vv = (qv @ d) * inv
                tt = np.sum(e2 * qv, axis=1) * inv
                hit = ok & (uu >= 0) & (vv >= 0) & (uu + vv <= 1) & (tt > 0)
                votes.append(int(hit.sum()) % 2 == 1)
            out[k] = sum(votes) >= 2
        return out


@dataclass
class Classification:
    point: np.ndarray
    verdict: str  # interior | exterior | boundary
    margin: float
    t_witness: float


def pmc(point, solid: SolidBrep, traj: Trajectory, nt: int = 256, tol: Tolerances = Tolerances(),
        dist: SolidDistance | None = None) -> Classification:
    """Classify ``point`` against the swept volume by min over t of sd(inverse trajectory)."""
    return pmc_many(np.asarray(point, dtype=float)[None], solid, traj, nt, tol, dist)[0]


def _verdict(margin, tol: Tolerances):
    if margin < -tol.pmc:
        return "interior"
    if margin <= tol.pmc:
        return "boundary"
    return "exterior"


_GOLD = 0.5 * (np.sqrt(5.0) - 1.0)


def _golden(dist, traj, P, lo, hi, iters=48):
    """Vectorized golden-section minimization of sd(inverse(P_i, t)) over [lo_i, hi_i]."""
    f = lambda t: dist(traj.inverse(P, t))  # noqa: E731
    a, b = lo.copy(), hi.copy()
    c, d = b - _GOLD * (b - a), a + _GOLD * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_new = np.where(left, b - _GOLD * (b - a), d)
        d_new = np.where(left, c, a + _GOLD * (b - a))
        fc_new = np.where(left, np.nan, fd)
        fd_new = np.where(left, fc, np.nan)
        # one new evaluation per point
        t_eval = np.where(left, c_new, d_new)
        fe = f(t_eval)
        fc = np.where(left, fe, fc_new)
        fd = np.where(left, fd_new, fe)
        c, d = c_new, d_new
    ends = np.stack([lo, hi, c, d], 1)
    vals = np.stack([f(lo), f(hi), fc, fd], 1)
    k = np.argmin(vals, axis=1)
    rows = np.arange(len(P))
    return ends[rows, k], vals[rows, k]


def _refine(dist, traj, P, ts, sd, jumps, tol: Tolerances):
    """Minimum over t: grid minimum, then local refinement where the verdict is not settled.

    sd is 1-Lipschitz in the query point, so between grid samples it can dip
    by at most half the largest step of the inverse trajectory; points whose
    grid minimum clears the tolerance band by that much are settled.  The
    others are refined in a bracket of one grid step around the grid
    minimum, halving the bracket until the verdict is stable twice.
    """
    k = np.argmin(sd, axis=1)
    rows = np.arange(len(P))
    t_best, m_best = ts[k].astype(float), sd[rows, k].astype(float)
    settled = (m_best - 0.6 * jumps > tol.pmc) | (m_best < -10 * tol.pmc - 0.6 * jumps)
    idx = np.nonzero(~settled)[0]
    if len(ts) > 1 and idx.size:
        step = ts[1] - ts[0]
        last = None
        for _ in range(6):
            lo = np.maximum(ts[0], t_best[idx] - step)
            hi = np.minimum(ts[-1], t_best[idx] + step)
            tb, mb = _golden(dist, traj, P[idx], lo, hi)
            better = mb < m_best[idx]
            t_best[idx[better]], m_best[idx[better]] = tb[better], mb[better]
            verdict = [_verdict(m, tol) for m in m_best[idx]]
            if verdict == last:
                break
            last = verdict
            step *= 0.5
    return [Classification(P[i], _verdict(m_best[i], tol), float(m_best[i]), float(t_best[i]))
            for i in range(len(P))]


def pmc_many(points, solid: SolidBrep, traj: Trajectory, nt: int = 256, tol: Tolerances = Tolerances(),
             dist: SolidDistance | None = None) -> list:
    """Classify many points: vectorized grid stage, then batched refinement."""
    dist = dist or SolidDistance(solid)
    P = np.atleast_2d(np.asarray(points, dtype=float))
    t0, t1 = traj.interval
    ts = traj.times(nt) if t1 > t0 else np.array([t0])
    A, b, _, _ = traj.derivs(ts)
    out = []
    chunk = max(1, 200000 // len(ts))
    for c0 in range(0, len(P), chunk):
        Pc = P[c0:c0 + chunk]
        Q = np.einsum("tji,ptj->pti", A, Pc[:, None, :] - b[None, :, :])
        sd = dist(Q.reshape(-1, 3)).reshape(len(Pc), len(ts))
        jumps = np.max(np.linalg.norm(np.diff(Q, axis=1), axis=-1), axis=1) if len(ts) > 1 else np.zeros(len(Pc))
        out += _refine(dist, traj, Pc, ts, sd, jumps, tol)
    return out


# ------------------------------------------------------------------ LSI


@dataclass
class LsiResult:
    status: str  # free | occluded
    t_witness: float | None
    depth: float


def lsi_check_point(x, solid: SolidBrep, traj: Trajectory, t_prime: float, dt: float = 1e-2, nt: int = 64,
                    tol: Tolerances = Tolerances(), dist: SolidDistance | None = None) -> LsiResult:
    """Occlusion of the swept point gamma_x(t') by M(t'') for t'' near t'.

    The point is occluded when its inverse trajectory enters the interior of
    M by more than ``tol.pmc`` at a sampled t'' != t'.
    """
    dist = dist or SolidDistance(solid)
    y = traj.point(np.asarray(x, dtype=float), t_prime)
    t0, t1 = traj.interval
    ts = np.linspace(t_prime - dt, t_prime + dt, 2 * nt + 1)
    ts = ts[(ts >= t0) & (ts <= t1) & (np.abs(ts - t_prime) > 1e-15)]
    if len(ts) == 0:
        return LsiResult("free", None, 0.0)
    sd = dist(traj.inverse(np.broadcast_to(y, (len(ts), 3)), ts))
    k = int(np.argmin(sd))
    if sd[k] < -tol.pmc:
        return LsiResult("occluded", float(ts[k]), float(sd[k]))
    return LsiResult("free", None, float(sd[k]))


def lsi_check(solid: SolidBrep, eid: str, s: float, traj: Trajectory, t_prime: float, dt: float = 1e-2,
              nt: int = 64, tol: Tolerances = Tolerances(), dist: SolidDistance | None = None) -> LsiResult:
    """LSI check at an interior point of an edge-generated face.

    Raises
    ------
    ValueError
        If ``e(s)`` is not in unique contact at ``t'`` with alpha* in (0, 1).
    """
    c = edge_contact_test(solid, eid, s, traj, t_prime, tol)
    if c.status != "contact_unique" or not (0.0 < c.alpha < 1.0):
        raise ValueError(f"edge site ({eid}, {s}) at t={t_prime} is not an interior contact point")
    return lsi_check_point(c.x, solid, traj, t_prime, dt, nt, tol, dist)


# ------------------------------------------------------------------ voxels


@dataclass
class VoxelEnvelope:
    axes: tuple
    inside: np.ndarray
    boundary_points: np.ndarray

    @property
    def spacing(self):
        return np.array([a[1] - a[0] for a in self.axes])


def swept_bounds(solid: SolidBrep, traj: Trajectory, n: int = 64, pad: float = 0.05):
    lo, hi = solid.bounding_box()
    corners = np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    c = 0.5 * (lo + hi)
    r = 0.5 * np.linalg.norm(hi - lo)
    ts = traj.times(n)
    centers = traj.point(np.broadcast_to(c, (len(ts), 3)), ts)
    pts = np.concatenate([centers - r, centers + r,
                          traj.point(np.broadcast_to(corners[:, None], (8, len(ts), 3)), ts).reshape(-1, 3)])
    lo2, hi2 = pts.min(axis=0), pts.max(axis=0)
    span = hi2 - lo2
    return lo2 - pad * span, hi2 + pad * span


def brute_force_envelope(solid: SolidBrep, traj: Trajectory, n: int = 32, nt: int = 64,
                         dist: SolidDistance | None = None) -> VoxelEnvelope:
    """Voxel classification of the swept volume by inverse-trajectory sampling."""
    dist = dist or SolidDistance(solid)
    lo, hi = swept_bounds(solid, traj)
    axes = tuple(np.linspace(lo[k], hi[k], n) for k in range(3))
    G = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
    t0, t1 = traj.interval
    ts = traj.times(nt) if t1 > t0 else np.array([t0])
    A, b, _, _ = traj.derivs(ts)
    best = np.full(len(G), np.inf)
    for k in range(len(ts)):
        Q = (G - b[k]) @ A[k]
        best = np.minimum(best, dist(Q))
    inside = (best < 0).reshape(n, n, n)
    pad = np.pad(inside, 1, constant_values=False)
    all_in = np.ones_like(inside)
    for ax in range(3):
        for sh in (-1, 1):
            all_in &= np.roll(pad, sh, axis=ax)[1:-1, 1:-1, 1:-1]
    bnd = inside & ~all_in
    return VoxelEnvelope(axes, inside, G[bnd.ravel()])
