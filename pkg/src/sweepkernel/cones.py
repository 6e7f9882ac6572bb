"""Contact predicates on cones of unit normals.

The central quantity is ``g(x, n, t) = <A(t) n, v_x(t)>``: the speed of the
moving point ``x`` along the moved normal ``n``.  It is linear in ``n``, which
turns every cone test into sign tests on the cone generators.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Tolerances
from .motion import Trajectory


@dataclass(frozen=True)
class NormalCone:
    """Cone spanned by the outward normals at a sharp site."""

    site: tuple
    generators: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.generators, dtype=float)
        if np.linalg.matrix_rank(g, tol=1e-9) < len(g):
            raise ValueError("cone generators are linearly dependent")

    def param(self, alpha):
        """Normalized ``alpha*N1 + (1-alpha)*N2`` (edge cones)."""
        n1, n2 = self.generators[0], self.generators[1]
        a = np.asarray(alpha, dtype=float)[..., None]
        m = a * n1 + (1.0 - a) * n2
        return m / np.linalg.norm(m, axis=-1, keepdims=True)

    def contains(self, n, tol=1e-9):
        return in_cone(n, self.generators, tol)


@dataclass
class ContactSample:
    x: np.ndarray
    t: float
    status: str  # no_contact | contact_unique | contact_degenerate
    side: str | None = None
    alpha: float | None = None
    n: np.ndarray | None = None
    g: tuple = field(default_factory=tuple)


@dataclass
class VertexContact:
    contact: bool
    s: np.ndarray
    active_pairs: list


def g_eval(n, x, traj: Trajectory, t):
    """g(x, n, t) = <A(t) n, v_x(t)>; broadcasts over leading axes."""
    A, _, dA, db = traj.derivs(t)
    v = np.einsum("...ij,...j->...i", dA, np.asarray(x, dtype=float)) + db
    An = np.einsum("...ij,...j->...i", A, np.asarray(n, dtype=float))
    return np.sum(An * v, axis=-1)


def g_body(n, x, traj: Trajectory, t):
    """Same as :func:`g_eval` computed in the body frame as <n, A^T v_x>."""
    W, u = traj.body_velocity(t)
    vb = np.einsum("...ij,...j->...i", W, np.asarray(x, dtype=float)) + u
    return np.sum(np.asarray(n, dtype=float) * vb, axis=-1)


def in_cone(n, generators, tol=1e-9) -> bool:
    """Whether ``n`` is a non-negative combination of the generators."""
    G = np.asarray(generators, dtype=float).T
    c, *_ = np.linalg.lstsq(G, np.asarray(n, dtype=float), rcond=None)
    resid = np.linalg.norm(G @ c - n)
    return bool(resid <= 1e-7 * (1 + np.linalg.norm(n)) and np.all(c >= -tol))


def classify_pair(g1, g2, tol):
    """Edge-cone dichotomy from the generator values; returns (status, side, alpha)."""
    if abs(g1) <= tol and abs(g2) <= tol:
        return "contact_degenerate", None, None
    if g1 > tol and g2 > tol:
        return "no_contact", "plus", None
    if g1 < -tol and g2 < -tol:
        return "no_contact", "minus", None
    return "contact_unique", None, float(np.clip(g2 / (g2 - g1), 0.0, 1.0))


def edge_contact(x, w, n1, n2, traj: Trajectory, t, tol: Tolerances = Tolerances()) -> ContactSample:
    """Edge contact test at a point ``x`` with normals ``n1`` (left), ``n2`` (right)."""
    v = traj.velocity(x, t)
    eps = tol.g_rel(float(np.linalg.norm(v)))
    g1 = float(g_eval(n1, x, traj, t))
    g2 = float(g_eval(n2, x, traj, t))
    status, side, alpha = classify_pair(g1, g2, eps)
    n = None
    if status == "contact_unique":
        m = alpha * np.asarray(n1) + (1 - alpha) * np.asarray(n2)
        n = m / np.linalg.norm(m)
    return ContactSample(np.asarray(x, dtype=float), float(t), status, side, alpha, n, (g1, g2))


def edge_contact_test(solid, eid: str, s: float, traj: Trajectory, t,
                      tol: Tolerances = Tolerances()) -> ContactSample:
    x, w, n1, n2 = solid.edge_frame(eid, s)
    return edge_contact(x, w, n1, n2, traj, t, tol)


def vertex_contact(x, normals, traj: Trajectory, t, tol: Tolerances = Tolerances()) -> VertexContact:
    """Vertex contact from s_i = g(N_i).

    Active pairs are the strictly sign-opposite index pairs; when there are
    none, zero entries pair with the non-zero ones (weak inequalities count as
    contact).
    """
    v = traj.velocity(x, t)
    eps = tol.g_rel(float(np.linalg.norm(v)))
    s = np.array([float(g_eval(n, x, traj, t)) for n in normals])
    contact = bool(s.min() <= eps and s.max() >= -eps)
    neg = [i for i, x_ in enumerate(s) if x_ < -eps]
    pos = [i for i, x_ in enumerate(s) if x_ > eps]
    zero = [i for i, x_ in enumerate(s) if abs(x_) <= eps]
    pairs = sorted(tuple(sorted((i, j))) for i in neg for j in pos)
    if contact and not pairs:
        pairs = sorted(tuple(sorted((i, j))) for i in zero for j in neg + pos)
    return VertexContact(contact, s, pairs)


def vertex_contact_test(solid, vid: str, traj: Trajectory, t, tol: Tolerances = Tolerances()):
    normals = list(solid.vertex_face_normals(vid).values())
    return vertex_contact(solid.vertices[vid].point, normals, traj, t, tol)


def cone_side(x, generators, traj: Trajectory, t, tol: Tolerances = Tolerances()) -> str:
    """'plus' if the velocity lies in N_x+, 'minus' if in N_x-, else 'boundary'."""
    v = traj.velocity(x, t)
    eps = tol.g_rel(float(np.linalg.norm(v)))
    vals = [float(g_eval(n, x, traj, t)) for n in generators]
    if min(vals) > eps:
        return "plus"
    if max(vals) < -eps:
        return "minus"
    return "boundary"
