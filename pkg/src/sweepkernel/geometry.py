"""Analytic and Bezier surface/curve evaluators.

Every evaluator accepts broadcastable numpy arrays of parameters and returns
arrays with a trailing axis of length 3.
"""
from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np

from .errors import MalformedBrep

TWO_PI = 2.0 * np.pi


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise MalformedBrep("zero direction vector")
    return v / n


def _frame(axis, ref=None):
    """Right-handed orthonormal frame (e1, e2, e3) with e3 along ``axis``."""
    e3 = _unit(axis)
    if ref is None:
        ref = np.array([1.0, 0, 0]) if abs(e3[0]) < 0.9 else np.array([0, 1.0, 0])
    ref = np.asarray(ref, dtype=float)
    e1 = ref - np.dot(ref, e3) * e3
    e1 = _unit(e1)
    e2 = np.cross(e3, e1)
    return e1, e2, e3


def _outer(a, vec):
    """a[..., None] * vec, broadcasting a scalar field against a 3-vector."""
    return np.asarray(a, dtype=float)[..., None] * np.asarray(vec, dtype=float)


@lru_cache(maxsize=None)
def _binomials(n):
    i = np.arange(n + 1)
    return i, np.array([comb(n, k) for k in i], dtype=float)


def bernstein(n, x, deriv=0):
    """Bernstein basis of degree ``n`` (or its derivative) at ``x``; shape x.shape + (n+1,)."""
    x = np.asarray(x, dtype=float)[..., None]
    if deriv == 0:
        i, c = _binomials(n)
        return c * x**i * (1.0 - x) ** (n - i)
    if n == 0:
        return np.zeros(x.shape[:-1] + (1,))
    lower = bernstein(n - 1, x[..., 0], deriv - 1)
    pad = np.zeros(lower.shape[:-1] + (1,))
    return n * (np.concatenate([pad, lower], axis=-1) - np.concatenate([lower, pad], axis=-1))


# --------------------------------------------------------------------- surfaces


class Surface:
    kind = "abstract"
    #: u-range spans a full period (closed in u)
    periodic_u = False

    def __init__(self, domain):
        (u0, u1), (v0, v1) = domain
        if not (u1 > u0 and v1 > v0):
            raise MalformedBrep(f"empty surface domain {domain}")
        self.domain = ((float(u0), float(u1)), (float(v0), float(v1)))

    def eval(self, u, v):
        return self.derivs(u, v)[0]

    def derivs(self, u, v):
        raise NotImplementedError

    def natural_normal(self, u, v):
        """Unit S_u x S_v, continuous across parametrization poles where the kind allows."""
        _, su, sv = self.derivs(u, v)
        n = np.cross(su, sv)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def to_dict(self):
        raise NotImplementedError

    # projection -------------------------------------------------------
    def _seed(self, p):
        (u0, u1), (v0, v1) = self.domain
        us = np.linspace(u0, u1, 9)
        vs = np.linspace(v0, v1, 9)
        uu, vv = np.meshgrid(us, vs, indexing="ij")
        q = self.eval(uu.ravel(), vv.ravel())
        d = ((p[:, None, :] - q[None, :, :]) ** 2).sum(-1)
        k = np.argmin(d, axis=1)
        return uu.ravel()[k], vv.ravel()[k]

    def project(self, points, seed=None, iters=30):
        """Closest domain parameters to ``points`` by box-projected Gauss-Newton."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        u, v = self._seed(p) if seed is None else seed
        u, v = np.array(u, dtype=float), np.array(v, dtype=float)
        (u0, u1), (v0, v1) = self.domain
        act = np.arange(len(p))
        for _ in range(iters):
            ua, va = u[act], v[act]
            s, su, sv = self.derivs(ua, va)
            r = p[act] - s
            a = (su * su).sum(-1)
            b = (su * sv).sum(-1)
            c = (sv * sv).sum(-1)
            ru = (su * r).sum(-1)
            rv = (sv * r).sum(-1)
            det = a * c - b * b
            det = np.where(np.abs(det) < 1e-300, 1e-300, det)
            du = (c * ru - b * rv) / det
            dv = (a * rv - b * ru) / det
            # pinned coordinates on the box boundary fall back to 1-D steps
            un = np.clip(ua + du, u0, u1)
            vn = np.clip(va + dv, v0, v1)
            pin_u = (un != ua + du)
            pin_v = (vn != va + dv)
            vn = np.where(pin_u & ~pin_v, np.clip(va + rv / np.maximum(c, 1e-300), v0, v1), vn)
            un = np.where(pin_v & ~pin_u, np.clip(ua + ru / np.maximum(a, 1e-300), u0, u1), un)
            step = np.abs(un - ua) + np.abs(vn - va)
            u[act], v[act] = un, vn
            act = act[step >= 1e-14]
            if act.size == 0:
                break
        return u, v


class Plane(Surface):
    kind = "plane"

    def __init__(self, origin, u_dir, v_dir, domain):
        super().__init__(domain)
        self.origin = np.asarray(origin, dtype=float)
        self.e1 = _unit(u_dir)
        v_dir = np.asarray(v_dir, dtype=float)
        v_dir = v_dir - np.dot(v_dir, self.e1) * self.e1
        self.e2 = _unit(v_dir)

    def derivs(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        s = self.origin + _outer(u, self.e1) + _outer(v, self.e2)
        su = np.broadcast_to(self.e1, s.shape).copy()
        sv = np.broadcast_to(self.e2, s.shape).copy()
        return s, su, sv

    def natural_normal(self, u, v):
        u = np.asarray(u, float)
        n = np.cross(self.e1, self.e2)
        return np.broadcast_to(n, np.broadcast(u, np.asarray(v, float)).shape + (3,)).copy()

    def project(self, points, seed=None, iters=0):
        p = np.atleast_2d(np.asarray(points, dtype=float)) - self.origin
        (u0, u1), (v0, v1) = self.domain
        return np.clip(p @ self.e1, u0, u1), np.clip(p @ self.e2, v0, v1)

    def to_dict(self):
        return {"kind": self.kind, "origin": self.origin.tolist(), "u_dir": self.e1.tolist(),
                "v_dir": self.e2.tolist(), "domain": [list(r) for r in self.domain]}


class Sphere(Surface):
    """Latitude/longitude sphere; ``pole`` is the latitude axis."""

    kind = "sphere"

    def __init__(self, center, radius, domain=((-np.pi, np.pi), (-np.pi / 2, np.pi / 2)),
                 pole=(0, 0, 1), ref=None):
        super().__init__(domain)
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.e1, self.e2, self.e3 = _frame(pole, ref)
        self.periodic_u = abs(self.domain[0][1] - self.domain[0][0] - TWO_PI) < 1e-12

    def _radial(self, u, v):
        cu, su_, cv, sv_ = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        return _outer(cv * cu, self.e1) + _outer(cv * su_, self.e2) + _outer(sv_, self.e3)

    def derivs(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        R = self.radius
        s = self.center + R * self._radial(u, v)
        su = R * (_outer(-np.cos(v) * np.sin(u), self.e1) + _outer(np.cos(v) * np.cos(u), self.e2))
        sv = R * (_outer(-np.sin(v) * np.cos(u), self.e1) + _outer(-np.sin(v) * np.sin(u), self.e2)
                  + _outer(np.cos(v), self.e3))
        return s, su, sv

    def natural_normal(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return self._radial(u, v)

    def project(self, points, seed=None, iters=30):
        p = np.atleast_2d(np.asarray(points, dtype=float)) - self.center
        x, y, z = p @ self.e1, p @ self.e2, p @ self.e3
        u = np.arctan2(y, x)
        v = np.arctan2(z, np.hypot(x, y))
        (u0, u1), (v0, v1) = self.domain
        u = u0 + np.mod(u - u0, TWO_PI)
        inside = (u <= u1) & (v >= v0) & (v <= v1)
        if self.periodic_u and np.all((v >= v0) & (v <= v1)):
            return u, v
        if np.all(inside):
            return u, v
        uc, vc = np.clip(u, u0, u1), np.clip(v, v0, v1)
        return super().project(points, seed=(uc, vc), iters=iters)

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "radius": self.radius,
                "pole": self.e3.tolist(), "ref": self.e1.tolist(),
                "domain": [list(r) for r in self.domain]}


class Cylinder(Surface):
    kind = "cylinder"

    def __init__(self, center, axis, radius, domain, ref=None):
        super().__init__(domain)
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.e1, self.e2, self.e3 = _frame(axis, ref)
        self.periodic_u = abs(self.domain[0][1] - self.domain[0][0] - TWO_PI) < 1e-12

    def derivs(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        R = self.radius
        radial = _outer(np.cos(u), self.e1) + _outer(np.sin(u), self.e2)
        s = self.center + R * radial + _outer(v, self.e3)
        su = R * (_outer(-np.sin(u), self.e1) + _outer(np.cos(u), self.e2))
        sv = np.broadcast_to(self.e3, s.shape).copy()
        return s, su, sv

    def project(self, points, seed=None, iters=30):
        p = np.atleast_2d(np.asarray(points, dtype=float)) - self.center
        u = np.arctan2(p @ self.e2, p @ self.e1)
        (u0, u1), (v0, v1) = self.domain
        u = u0 + np.mod(u - u0, TWO_PI)
        v = np.clip(p @ self.e3, v0, v1)
        if self.periodic_u or np.all(u <= u1):
            return u, v
        return super().project(points, seed=(np.clip(u, u0, u1), v), iters=iters)

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "axis": self.e3.tolist(),
                "ref": self.e1.tolist(), "radius": self.radius,
                "domain": [list(r) for r in self.domain]}


class Cone(Surface):
    """Circular cone: radius grows as ``radius + v*tan(half_angle)`` along the axis."""

    kind = "cone"

    def __init__(self, center, axis, radius, half_angle, domain, ref=None):
        super().__init__(domain)
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.half_angle = float(half_angle)
        self.e1, self.e2, self.e3 = _frame(axis, ref)

    def derivs(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        k = np.tan(self.half_angle)
        r = self.radius + k * v
        radial = _outer(np.cos(u), self.e1) + _outer(np.sin(u), self.e2)
        s = self.center + r[..., None] * radial + _outer(v, self.e3)
        su = r[..., None] * (_outer(-np.sin(u), self.e1) + _outer(np.cos(u), self.e2))
        sv = k * radial + self.e3
        return s, su, sv

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "axis": self.e3.tolist(),
                "ref": self.e1.tolist(), "radius": self.radius, "half_angle": self.half_angle,
                "domain": [list(r) for r in self.domain]}


class Torus(Surface):
    kind = "torus"

    def __init__(self, center, axis, major_radius, minor_radius, domain, ref=None):
        super().__init__(domain)
        self.center = np.asarray(center, dtype=float)
        self.major = float(major_radius)
        self.minor = float(minor_radius)
        self.e1, self.e2, self.e3 = _frame(axis, ref)

    def derivs(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        radial = _outer(np.cos(u), self.e1) + _outer(np.sin(u), self.e2)
        dradial = _outer(-np.sin(u), self.e1) + _outer(np.cos(u), self.e2)
        rr = self.major + self.minor * np.cos(v)
        s = self.center + rr[..., None] * radial + _outer(self.minor * np.sin(v), self.e3)
        su = rr[..., None] * dradial
        sv = _outer(-self.minor * np.sin(v), 1.0) * radial + _outer(self.minor * np.cos(v), self.e3)
        return s, su, sv

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "axis": self.e3.tolist(),
                "ref": self.e1.tolist(), "major_radius": self.major, "minor_radius": self.minor,
                "domain": [list(r) for r in self.domain]}


class BezierPatch(Surface):
    """Tensor-product Bezier patch over ``domain`` (affinely mapped to [0,1]^2)."""

    kind = "bezier_patch"

    def __init__(self, control_net, domain=((0.0, 1.0), (0.0, 1.0))):
        super().__init__(domain)
        net = np.asarray(control_net, dtype=float)
        if net.ndim != 3 or net.shape[2] != 3 or min(net.shape[:2]) < 2:
            raise MalformedBrep("bezier control net must have shape (m+1, n+1, 3)")
        self.net = net
        self.m, self.n = net.shape[0] - 1, net.shape[1] - 1

    def _local(self, u, v):
        (u0, u1), (v0, v1) = self.domain
        return (u - u0) / (u1 - u0), (v - v0) / (v1 - v0), 1.0 / (u1 - u0), 1.0 / (v1 - v0)

    def derivs(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        x, y, ku, kv = self._local(u, v)
        bu, bv = bernstein(self.m, x), bernstein(self.n, y)
        dbu, dbv = bernstein(self.m, x, 1) * ku, bernstein(self.n, y, 1) * kv
        rows = np.tensordot(bu, self.net, axes=(-1, 0))
        drows = np.tensordot(dbu, self.net, axes=(-1, 0))
        s = np.sum(bv[..., None] * rows, axis=-2)
        su = np.sum(bv[..., None] * drows, axis=-2)
        sv = np.sum(dbv[..., None] * rows, axis=-2)
        return s, su, sv

    def to_dict(self):
        return {"kind": self.kind, "control_net": self.net.tolist(),
                "domain": [list(r) for r in self.domain]}


def surface_from_dict(d: dict) -> Surface:
    kind = d.get("kind")
    dom = d.get("domain")
    try:
        if kind == "plane":
            return Plane(d["origin"], d["u_dir"], d["v_dir"], dom)
        if kind == "sphere":
            return Sphere(d["center"], d["radius"], dom or ((-np.pi, np.pi), (-np.pi / 2, np.pi / 2)),
                          pole=d.get("pole", (0, 0, 1)), ref=d.get("ref"))
        if kind == "cylinder":
            return Cylinder(d["center"], d["axis"], d["radius"], dom, ref=d.get("ref"))
        if kind == "cone":
            return Cone(d["center"], d["axis"], d["radius"], d["half_angle"], dom, ref=d.get("ref"))
        if kind == "torus":
            return Torus(d["center"], d["axis"], d["major_radius"], d["minor_radius"], dom,
                         ref=d.get("ref"))
        if kind == "bezier_patch":
            return BezierPatch(d["control_net"], dom or ((0.0, 1.0), (0.0, 1.0)))
    except KeyError as exc:
        raise MalformedBrep(f"surface of kind {kind!r} is missing field {exc}") from None
    raise MalformedBrep(f"unknown surface kind {kind!r}")


# ----------------------------------------------------------------------- curves


class Curve3:
    kind = "abstract"

    def __init__(self, domain):
        s0, s1 = domain
        if not s1 > s0:
            raise MalformedBrep(f"empty curve domain {domain}")
        self.domain = (float(s0), float(s1))

    def eval(self, s):
        return self.derivs(s)[0]

    def deriv(self, s):
        return self.derivs(s)[1]

    def derivs(self, s):
        raise NotImplementedError


class Line(Curve3):
    kind = "line"

    def __init__(self, start, end, domain=(0.0, 1.0)):
        super().__init__(domain)
        self.start = np.asarray(start, dtype=float)
        self.end = np.asarray(end, dtype=float)

    def derivs(self, s):
        s = np.asarray(s, dtype=float)
        s0, s1 = self.domain
        d = (self.end - self.start) / (s1 - s0)
        p = self.start + _outer(s - s0, d)
        return p, np.broadcast_to(d, p.shape).copy()

    def to_dict(self):
        return {"kind": self.kind, "start": self.start.tolist(), "end": self.end.tolist(),
                "domain": list(self.domain)}


class CircularArc(Curve3):
    kind = "circular_arc"

    def __init__(self, center, radius, axis, ref, domain):
        super().__init__(domain)
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.e1, self.e2, self.e3 = _frame(axis, ref)

    def derivs(self, s):
        s = np.asarray(s, dtype=float)
        R = self.radius
        p = self.center + R * (_outer(np.cos(s), self.e1) + _outer(np.sin(s), self.e2))
        d = R * (_outer(-np.sin(s), self.e1) + _outer(np.cos(s), self.e2))
        return p, d

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(), "radius": self.radius,
                "axis": self.e3.tolist(), "ref": self.e1.tolist(), "domain": list(self.domain)}


class BezierCurve(Curve3):
    kind = "bezier"

    def __init__(self, control_points, domain=(0.0, 1.0)):
        super().__init__(domain)
        self.ctrl = np.asarray(control_points, dtype=float)
        if self.ctrl.ndim != 2 or self.ctrl.shape[1] != 3 or len(self.ctrl) < 2:
            raise MalformedBrep("bezier curve needs >= 2 control points in 3-D")
        self.n = len(self.ctrl) - 1

    def derivs(self, s):
        s = np.asarray(s, dtype=float)
        s0, s1 = self.domain
        x = (s - s0) / (s1 - s0)
        p = bernstein(self.n, x) @ self.ctrl
        d = (bernstein(self.n, x, 1) @ self.ctrl) / (s1 - s0)
        return p, d

    def to_dict(self):
        return {"kind": self.kind, "control_points": self.ctrl.tolist(), "domain": list(self.domain)}


def curve_from_dict(d: dict) -> Curve3:
    kind = d.get("kind")
    try:
        if kind == "line":
            return Line(d["start"], d["end"], d.get("domain", (0.0, 1.0)))
        if kind == "circular_arc":
            return CircularArc(d["center"], d["radius"], d["axis"], d["ref"], d["domain"])
        if kind == "bezier":
            return BezierCurve(d["control_points"], d.get("domain", (0.0, 1.0)))
    except KeyError as exc:
        raise MalformedBrep(f"curve of kind {kind!r} is missing field {exc}") from None
    raise MalformedBrep(f"unknown curve kind {kind!r}")
