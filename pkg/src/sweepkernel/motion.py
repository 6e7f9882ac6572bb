"""Rigid-motion trajectories h(t) = (A(t), b(t)) and their inverses."""
from __future__ import annotations

import json

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.interpolate import CubicSpline

from .errors import MalformedBrep, OutOfInterval

_EYE = np.eye(3)


def skew(k):
    k = np.asarray(k, dtype=float)
    return np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])


def axis_rotation(axis, theta):
    """Rodrigues rotation about ``axis`` (normalized here); ``theta`` may be an array."""
    axis = np.asarray(axis, dtype=float)
    K = skew(axis / np.linalg.norm(axis))
    th = np.asarray(theta, dtype=float)[..., None, None]
    return _EYE + np.sin(th) * K + (1.0 - np.cos(th)) * (K @ K)


def quat_to_matrix(q):
    """Rotation matrix of unit quaternions ``q = (w, x, y, z)`` (trailing axis)."""
    w, x, y, z = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    return np.stack([
        np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
        np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
        np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
    ], -2)


def _quat_matrix_deriv(q, dq):
    """Directional derivative of ``quat_to_matrix`` at ``q`` along ``dq``."""
    w, x, y, z = np.moveaxis(q, -1, 0)
    dw, dx, dy, dz = np.moveaxis(dq, -1, 0)
    return 2 * np.stack([
        np.stack([-2 * (y * dy + z * dz), x * dy + dx * y - w * dz - dw * z,
                  x * dz + dx * z + w * dy + dw * y], -1),
        np.stack([x * dy + dx * y + w * dz + dw * z, -2 * (x * dx + z * dz),
                  y * dz + dy * z - w * dx - dw * x], -1),
        np.stack([x * dz + dx * z - w * dy - dw * y, y * dz + dy * z + w * dx + dw * x,
                  -2 * (x * dx + y * dy)], -1),
    ], -2)


class Trajectory:
    """Base class.  Subclasses implement ``_derivs(t) -> (A, b, dA, db)``."""

    kind = "abstract"

    def __init__(self, interval):
        t0, t1 = (float(x) for x in interval)
        if t1 < t0:
            raise MalformedBrep(f"trajectory interval {interval} is reversed")
        self.interval = (t0, t1)

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        t0, t1 = self.interval
        slack = 1e-12 * (1.0 + abs(t0) + abs(t1))
        if np.any(t < t0 - slack) or np.any(t > t1 + slack):
            raise OutOfInterval(f"time outside [{t0}, {t1}]")
        return np.clip(t, t0, t1)

    def derivs(self, t):
        """(A, b, A', b') at ``t``; array ``t`` gives stacked results."""
        return self._derivs(self._check(t))

    def eval(self, t):
        A, b, _, _ = self.derivs(t)
        return A, b

    def point(self, x, t):
        """gamma_x(t) = A(t) x + b(t)."""
        A, b, _, _ = self.derivs(t)
        return np.einsum("...ij,...j->...i", A, np.asarray(x, dtype=float)) + b

    def velocity(self, x, t):
        """v_x(t) = A'(t) x + b'(t)."""
        _, _, dA, db = self.derivs(t)
        return np.einsum("...ij,...j->...i", dA, np.asarray(x, dtype=float)) + db

    def inverse(self, x, t):
        """Inverse trajectory A(t)^T (x - b(t))."""
        A, b, _, _ = self.derivs(t)
        return np.einsum("...ji,...j->...i", A, np.asarray(x, dtype=float) - b)

    def body_velocity(self, t):
        """(A^T A', A^T b') so that A^T v_x = (A^T A') x + A^T b'."""
        A, _, dA, db = self.derivs(t)
        At = np.swapaxes(A, -1, -2)
        return At @ dA, np.einsum("...ij,...j->...i", At, db)

    def times(self, n):
        return np.linspace(*self.interval, n)

    def then(self, A0, b0) -> "Trajectory":
        """The motion followed by the fixed rigid map x -> A0 x + b0."""
        return Composed(self, A0, b0)

    def to_dict(self):
        raise NotImplementedError

    @property
    def length(self):
        return self.interval[1] - self.interval[0]


class Screw(Trajectory):
    """Constant screw motion about the line through ``axis_point`` along ``axis_dir``.

    A(t) rotates by ``angular_rate*(t - t0)``; the translation along the axis is
    ``pitch*angular_rate*(t - t0)``.
    """

    kind = "screw"

    def __init__(self, axis_point, axis_dir, angular_rate, pitch=0.0, interval=(0.0, 1.0)):
        super().__init__(interval)
        self.c = np.asarray(axis_point, dtype=float)
        k = np.asarray(axis_dir, dtype=float)
        self.k = k / np.linalg.norm(k)
        self.omega = float(angular_rate)
        self.pitch = float(pitch)
        self.K = skew(self.k)

    def _derivs(self, t):
        tau = t - self.interval[0]
        A = axis_rotation(self.k, self.omega * tau)
        dA = self.omega * (self.K @ A)
        adv = self.pitch * self.omega
        b = self.c - A @ self.c + np.asarray(adv * tau)[..., None] * self.k
        db = -(dA @ self.c) + adv * self.k + np.zeros_like(b)
        return A, b, dA, db

    def to_dict(self):
        return {"kind": self.kind, "interval": list(self.interval), "axis_point": self.c.tolist(),
                "axis_dir": self.k.tolist(), "angular_rate": self.omega, "pitch": self.pitch}


class Polynomial(Trajectory):
    """Rotation by a polynomial angle about a fixed axis plus a polynomial translation.

    A(t) = R(k, theta(t)), b(t) = c - A(t) c + p(t).  Coefficients are in
    increasing powers of t.
    """

    kind = "polynomial"

    def __init__(self, translation=((0, 0, 0),), theta=(0.0,), axis_point=(0, 0, 0),
                 axis_dir=(0, 0, 1), interval=(0.0, 1.0)):
        super().__init__(interval)
        self.c = np.asarray(axis_point, dtype=float)
        k = np.asarray(axis_dir, dtype=float)
        self.k = k / np.linalg.norm(k)
        self.K = skew(self.k)
        self.theta = np.atleast_1d(np.asarray(theta, dtype=float))
        self.trans = np.atleast_2d(np.asarray(translation, dtype=float))
        if self.trans.shape[1] != 3:
            raise MalformedBrep("polynomial translation coefficients must be 3-vectors")
        self.dtheta = P.polyder(self.theta) if len(self.theta) > 1 else np.zeros(1)
        self.dtrans = (P.polyder(self.trans, axis=0) if len(self.trans) > 1
                       else np.zeros((1, 3)))

    def _derivs(self, t):
        th = P.polyval(t, self.theta)
        dth = P.polyval(t, self.dtheta)
        A = axis_rotation(self.k, th)
        dA = np.asarray(dth)[..., None, None] * (self.K @ A)
        p = np.moveaxis(np.array([P.polyval(t, self.trans[:, i]) for i in range(3)]), 0, -1)
        dp = np.moveaxis(np.array([P.polyval(t, self.dtrans[:, i]) for i in range(3)]), 0, -1)
        b = self.c - A @ self.c + p
        db = -(dA @ self.c) + dp
        return A, b, dA, db

    def to_dict(self):
        return {"kind": self.kind, "interval": list(self.interval), "axis_point": self.c.tolist(),
                "axis_dir": self.k.tolist(), "theta": self.theta.tolist(),
                "translation": self.trans.tolist()}


class Keyframed(Trajectory):
    """C^2 cubic-spline interpolation of quaternion and translation keyframes.

    Quaternion components are splined after a sign-continuity pass and the
    result is renormalized; the rotation derivative is differentiated
    analytically through the normalization.
    """

    kind = "keyframed"

    def __init__(self, keyframes, interval=None):
        kf = sorted(keyframes, key=lambda k: float(k["t"]))
        if len(kf) < 2:
            raise MalformedBrep("keyframed trajectory needs at least two keyframes")
        ts = np.array([float(k["t"]) for k in kf])
        if np.any(np.diff(ts) <= 0):
            raise MalformedBrep("keyframe times must be distinct")
        q = np.array([k["quat"] for k in kf], dtype=float)
        q /= np.linalg.norm(q, axis=1, keepdims=True)
        for i in range(1, len(q)):
            if np.dot(q[i], q[i - 1]) < 0:
                q[i] = -q[i]
        tr = np.array([k["trans"] for k in kf], dtype=float)
        super().__init__(interval if interval is not None else (ts[0], ts[-1]))
        if self.interval[0] < ts[0] - 1e-12 or self.interval[1] > ts[-1] + 1e-12:
            raise MalformedBrep("trajectory interval exceeds the keyframe range")
        self.keyframes = kf
        self._q = CubicSpline(ts, q, bc_type="natural")
        self._b = CubicSpline(ts, tr, bc_type="natural")

    def _derivs(self, t):
        q = self._q(t)
        dq = self._q(t, 1)
        nq = np.linalg.norm(q, axis=-1, keepdims=True)
        qh = q / nq
        dqh = (dq - qh * np.sum(qh * dq, axis=-1, keepdims=True)) / nq
        A = quat_to_matrix(qh)
        dA = _quat_matrix_deriv(qh, dqh)
        return A, self._b(t), dA, self._b(t, 1)

    def to_dict(self):
        return {"kind": self.kind, "interval": list(self.interval),
                "keyframes": [{"t": float(k["t"]), "quat": list(map(float, k["quat"])),
                               "trans": list(map(float, k["trans"]))} for k in self.keyframes]}


class Composed(Trajectory):
    """``inner`` followed by a fixed rigid map (A0, b0)."""

    kind = "composed"

    def __init__(self, inner: Trajectory, A0, b0):
        super().__init__(inner.interval)
        self.inner = inner
        self.A0 = np.asarray(A0, dtype=float)
        self.b0 = np.asarray(b0, dtype=float)

    def _derivs(self, t):
        A, b, dA, db = self.inner._derivs(t)
        return (self.A0 @ A, b @ self.A0.T + self.b0, self.A0 @ dA, db @ self.A0.T)

    def to_dict(self):
        return {"kind": self.kind, "inner": self.inner.to_dict(), "A0": self.A0.tolist(),
                "b0": self.b0.tolist()}


def trajectory_from_dict(d: dict) -> Trajectory:
    kind = d.get("kind")
    try:
        interval = d.get("interval")
        if kind == "screw":
            return Screw(d["axis_point"], d["axis_dir"], d["angular_rate"], d.get("pitch", 0.0),
                         interval or (0.0, 1.0))
        if kind == "polynomial":
            return Polynomial(d.get("translation", [[0, 0, 0]]), d.get("theta", [0.0]),
                              d.get("axis_point", [0, 0, 0]), d.get("axis_dir", [0, 0, 1]),
                              interval or (0.0, 1.0))
        if kind == "keyframed":
            return Keyframed(d["keyframes"], interval)
        if kind == "composed":
            return Composed(trajectory_from_dict(d["inner"]), d["A0"], d["b0"])
    except KeyError as exc:
        raise MalformedBrep(f"trajectory of kind {kind!r} is missing field {exc}") from None
    raise MalformedBrep(f"unknown trajectory kind {kind!r}")


def load_trajectory(path) -> Trajectory:
    try:
        with open(path) as fh:
            return trajectory_from_dict(json.load(fh))
    except json.JSONDecodeError as exc:
        raise MalformedBrep(f"{path}: {exc}") from None
