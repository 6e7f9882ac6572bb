"""Solid and motion fixtures used by the tests, scripts and documentation.

``assemble_solid`` derives coedges, senses and outward flags from geometry so
fixtures only list vertices, edge curves and face surfaces.
"""
from __future__ import annotations

import numpy as np

from .brep import SIDES, SolidBrep, side_range, side_uv
from .geometry import curve_from_dict, surface_from_dict
from .motion import Polynomial, Screw

_AXES = np.eye(3)


def assemble_solid(points: dict, edges: list, faces: list, centroid=None) -> dict:
    """Build brep JSON from geometry.

    Parameters
    ----------
    points : dict
        Vertex id -> coordinates.
    edges : list of dict
        ``{"id", "start", "end", "curve"?, "sharp"?}``; a missing curve means a
        straight line parametrized over ``domain`` (default [0, 1]).
    faces : list of dict
        ``{"id", "surface", "sides"?, "outward"?}``.  Missing ``outward`` is
        chosen so the normal at the face centre points away from ``centroid``.
    """
    pts = {k: np.asarray(v, dtype=float) for k, v in points.items()}
    if centroid is None:
        centroid = np.mean(list(pts.values()), axis=0) if pts else np.zeros(3)
    d = {"vertices": [{"id": k, "point": v.tolist()} for k, v in pts.items()],
         "curves": [], "surfaces": [], "edges": [], "coedges": [], "loops": [], "faces": []}
    ecurves = {}
    for e in edges:
        cd = e.get("curve") or {"kind": "line", "start": pts[e["start"]].tolist(),
                                "end": pts[e["end"]].tolist(), "domain": list(e.get("domain", (0.0, 1.0)))}
        d["curves"].append(dict(id="c_" + e["id"], **cd))
        d["edges"].append({"id": e["id"], "curve": "c_" + e["id"], "start_vertex": e["start"],
                           "end_vertex": e["end"], "sharp": e.get("sharp", True)})
        ecurves[e["id"]] = curve_from_dict(cd)
    for f in faces:
        surf = surface_from_dict(f["surface"])
        d["surfaces"].append(dict(id="s_" + f["id"], **f["surface"]))
        sides = {s: "edge" for s in SIDES}
        sides.update(f.get("sides", {}))
        (u0, u1), (v0, v1) = surf.domain
        outward = f.get("outward")
        if outward is None:
            c = surf.eval(0.5 * (u0 + u1), 0.5 * (v0 + v1))
            n = surf.natural_normal(0.5 * (u0 + u1), 0.5 * (v0 + v1))
            outward = 1 if np.dot(n, c - centroid) > 0 else -1
        order = list(SIDES) if outward > 0 else list(reversed(SIDES))
        cids = []
        for side in order:
            if sides[side] != "edge":
                continue
            a, b = sorted(side_range(surf, side))
            pa = surf.eval(*side_uv(surf, side, a))
            pb = surf.eval(*side_uv(surf, side, b))
            pm = surf.eval(*side_uv(surf, side, 0.5 * (a + b)))
            eid, align = _match_edge(edges, ecurves, pts, pa, pb, pm)
            if eid is None:
                raise ValueError(f"no edge along side {side} of face {f['id']}")
            walk = int(np.sign(side_range(surf, side)[1] - side_range(surf, side)[0])) * outward
            cid = f"ce_{f['id']}_{side}"
            d["coedges"].append({"id": cid, "edge": eid, "face": f["id"], "loop": "l_" + f["id"],
                                 "side": side, "sense": walk * align})
            cids.append(cid)
        loops = []
        if cids:
            d["loops"].append({"id": "l_" + f["id"], "face": f["id"], "coedges": cids})
            loops = ["l_" + f["id"]]
        d["faces"].append({"id": f["id"], "surface": "s_" + f["id"], "loops": loops,
                           "outward": int(outward), "sides": sides})
    return d


def _match_edge(edges, ecurves, pts, pa, pb, pm, tol=1e-7):
    for e in edges:
        c = ecurves[e["id"]]
        s0, s1 = c.domain
        q0, q1, qm = c.eval(s0), c.eval(s1), c.eval(0.5 * (s0 + s1))
        if np.linalg.norm(qm - pm) > tol * (1 + np.linalg.norm(pm)):
            continue
        if np.linalg.norm(q0 - pa) < tol and np.linalg.norm(q1 - pb) < tol:
            return e["id"], 1
        if np.linalg.norm(q0 - pb) < tol and np.linalg.norm(q1 - pa) < tol:
            return e["id"], -1
    return None, 0


def _plane(origin, u_dir, v_dir, domain):
    return {"kind": "plane", "origin": list(map(float, origin)), "u_dir": list(map(float, u_dir)),
            "v_dir": list(map(float, v_dir)), "domain": [list(map(float, r)) for r in domain]}


def box_dict(lo=(0, 0, 0), hi=(1, 1, 1), drop_face=None) -> dict:
    """Axis-aligned box; edge parameters equal the running coordinate."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    corners = {}
    for i in range(2):
        for j in range(2):
            for k in range(2):
                corners[f"v{i}{j}{k}"] = [(lo, hi)[i][0], (lo, hi)[j][1], (lo, hi)[k][2]]
    edges = []
    for key in corners:
        for ax in range(3):
            if key[1 + ax] == "0":
                other = key[:1 + ax] + "1" + key[2 + ax:]
                edges.append({"id": f"e_{key[1:]}_{ax}", "start": key, "end": other,
                              "domain": (lo[ax], hi[ax])})
    faces = []
    for ax in range(3):
        ua, va = (ax + 1) % 3, (ax + 2) % 3
        dom = [(lo[ua], hi[ua]), (lo[va], hi[va])]
        for name, val in (("m", lo[ax]), ("p", hi[ax])):
            fid = f"f_{name}{'xyz'[ax]}"
            if fid == drop_face:
                continue
            faces.append({"id": fid, "surface": _plane(_AXES[ax] * val, _AXES[ua], _AXES[va], dom)})
    return assemble_solid(corners, edges, faces, centroid=0.5 * (lo + hi))


def unit_cube() -> SolidBrep:
    return SolidBrep.from_dict(box_dict())


def open_cube() -> dict:
    """Unit cube with the top face removed (open shell)."""
    return box_dict(drop_face="f_pz")


def l_prism_dict() -> dict:
    """L-shaped prism over [0,2]x[0,1] U [0,1]x[1,2] with height 1.

    Top and bottom are split into three unit squares so every face stays an
    untrimmed rectangle; the split lines and the collinear side joints are
    smooth edges.  The re-entrant vertical edge at (1, 1) is concave.
    """
    ring = {"a": (0, 0), "b": (1, 0), "c": (2, 0), "d": (2, 1),
            "e": (1, 1), "f": (1, 2), "g": (0, 2), "h": (0, 1)}
    keys = list(ring)
    pts = {}
    for k, (x, y) in ring.items():
        pts[k + "0"] = (x, y, 0.0)
        pts[k + "1"] = (x, y, 1.0)
    edges = []
    for i, k in enumerate(keys):
        nk = keys[(i + 1) % len(keys)]
        edges.append({"id": f"b_{k}{nk}", "start": k + "0", "end": nk + "0"})
        edges.append({"id": f"t_{k}{nk}", "start": k + "1", "end": nk + "1"})
        edges.append({"id": f"v_{k}", "start": k + "0", "end": k + "1", "sharp": k not in ("b", "h")})
    for z in "01":
        edges.append({"id": f"s{z}_be", "start": "b" + z, "end": "e" + z, "sharp": False})
        edges.append({"id": f"s{z}_he", "start": "h" + z, "end": "e" + z, "sharp": False})
    faces = []
    for i, k in enumerate(keys):
        nk = keys[(i + 1) % len(keys)]
        p = np.array(ring[k] + (0.0,))
        q = np.array(ring[nk] + (0.0,))
        length = float(np.linalg.norm(q - p))
        # outward normal of a ccw ring edge is (dy, -dx)
        d = (q - p) / length
        outward = 1 if np.dot(np.cross(d, (0, 0, 1)), (d[1], -d[0], 0)) > 0 else -1
        faces.append({"id": f"side_{k}{nk}", "outward": outward,
                      "surface": _plane(p, d, (0, 0, 1), [(0, length), (0, 1)])})
    for z, tag, out in ((0.0, "bot", -1), (1.0, "top", 1)):
        for name, (ox, oy) in (("1", (0, 0)), ("2", (1, 0)), ("3", (0, 1))):
            faces.append({"id": f"{tag}_{name}", "outward": out,
                          "surface": _plane((ox, oy, z), (1, 0, 0), (0, 1, 0), [(0, 1), (0, 1)])})
    return assemble_solid(pts, edges, faces)


def sphere_dict(center=(0, 0, 0), radius=1.0, pole=(0, 0, 1)) -> dict:
    """Sphere as one lat/long face: seam on the u sides, poles on the v sides."""
    surf = {"kind": "sphere", "center": list(map(float, center)), "radius": float(radius),
            "pole": list(map(float, pole)),
            "domain": [[-np.pi, np.pi], [-np.pi / 2, np.pi / 2]]}
    sides = {"u0": "seam", "u1": "seam", "v0": "pole", "v1": "pole"}
    return assemble_solid({}, [], [{"id": "f_sphere", "surface": surf, "sides": sides, "outward": 1}],
                          centroid=np.asarray(center, dtype=float))


def dome_box_dict(bump=0.3) -> dict:
    """Unit box whose top is the bicubic patch z = 1 + A(x) + A(y).

    ``A`` is the cubic Bezier function with ordinates (0, bump, bump, 0), so the
    top bulges outward and every edge stays convex.  Side faces are planar
    3x1 Bezier patches whose upper boundaries follow the top patch.
    """
    a = np.array([0.0, bump, bump, 0.0])
    k = np.arange(4) / 3.0
    top = [[[k[i], k[j], 1.0 + a[i] + a[j]] for j in range(4)] for i in range(4)]
    corners = {f"v{i}{j}{z}": (float(i), float(j), float(z)) for i in (0, 1) for j in (0, 1) for z in (0, 1)}
    edges = []
    for i in (0, 1):
        for j in (0, 1):
            edges.append({"id": f"vert_{i}{j}", "start": f"v{i}{j}0", "end": f"v{i}{j}1"})
    for j in (0, 1):
        edges.append({"id": f"bot_x{j}", "start": f"v0{j}0", "end": f"v1{j}0"})
        ctrl = [[k[i], float(j), 1.0 + a[i]] for i in range(4)]
        edges.append({"id": f"top_x{j}", "start": f"v0{j}1", "end": f"v1{j}1",
                      "curve": {"kind": "bezier", "control_points": ctrl, "domain": [0.0, 1.0]}})
    for i in (0, 1):
        edges.append({"id": f"bot_y{i}", "start": f"v{i}00", "end": f"v{i}10"})
        ctrl = [[float(i), k[j], 1.0 + a[j]] for j in range(4)]
        edges.append({"id": f"top_y{i}", "start": f"v{i}01", "end": f"v{i}11",
                      "curve": {"kind": "bezier", "control_points": ctrl, "domain": [0.0, 1.0]}})
    faces = [{"id": "top", "surface": {"kind": "bezier_patch", "control_net": top,
                                       "domain": [[0, 1], [0, 1]]}},
             {"id": "bottom", "surface": _plane((0, 0, 0), (1, 0, 0), (0, 1, 0), [(0, 1), (0, 1)])}]
    for j in (0, 1):
        net = [[[k[i], float(j), 0.0], [k[i], float(j), 1.0 + a[i]]] for i in range(4)]
        faces.append({"id": f"side_y{j}", "surface": {"kind": "bezier_patch", "control_net": net,
                                                       "domain": [[0, 1], [0, 1]]}})
    for i in (0, 1):
        net = [[[float(i), k[j], 0.0], [float(i), k[j], 1.0 + a[j]]] for j in range(4)]
        faces.append({"id": f"side_x{i}", "surface": {"kind": "bezier_patch", "control_net": net,
                                                       "domain": [[0, 1], [0, 1]]}})
    return assemble_solid(corners, edges, faces, centroid=(0.5, 0.5, 0.5))


def translation(velocity, interval=(0.0, 1.0)) -> Polynomial:
    return Polynomial(translation=[[0.0, 0.0, 0.0], list(map(float, velocity))], interval=interval)


# --------------------------------------------------------------- named cases


def rotating_cube():
    """Unit cube about the z axis through (-1, -1, 0), quarter turn.

    The vertical edge at the origin stays at distance sqrt(2) from the axis.
    """
    return unit_cube(), Screw((-1.0, -1.0, 0.0), (0, 0, 1), 1.0, 0.0, (0.0, np.pi / 2))


def capsule():
    """Unit sphere (pole along the motion) translated by 2 along x."""
    return SolidBrep.from_dict(sphere_dict(pole=(1, 0, 0))), translation((1, 0, 0), (0.0, 2.0))


def translating_cube():
    return unit_cube(), translation((1, 0, 0))


def oblique_cube():
    return unit_cube(), translation((1.0, 0.5, 0.3))


def dome_box():
    return SolidBrep.from_dict(dome_box_dict()), translation((1.0, 0.3, 0.25))


SINGULAR_EDGE = "e_110_2"
SINGULAR_ST = (0.0, 0.5)


def singular_edge(omega=0.5, t_star=SINGULAR_ST[1]):
    """Box [0,1]x[0,1]x[-1/2,1/2]; A(t) = Rx(omega t), b(t) = ((t - t*)^2 / 2, 0, 0).

    On the edge (1, 1, s) the body-frame velocity is
    (t - t*, -omega s, omega): parallel to the edge only at (s, t) = (0, t*).
    """
    solid = SolidBrep.from_dict(box_dict((0, 0, -0.5), (1, 1, 0.5)))
    traj = Polynomial(translation=[[0.5 * t_star**2, 0, 0], [-t_star, 0, 0], [0.5, 0, 0]],
                      theta=[0.0, omega], axis_dir=(1, 0, 0), interval=(0.0, 1.0))
    return solid, traj


CROSSING_VERTEX = "v111"
CROSSING_ROOT = 0.4


def vertex_crossing(c=CROSSING_ROOT):
    """Translation b(t) = (t, (t-c)^2/2, -t): at corner (1,1,1), s = (1, t-c, -1)."""
    traj = Polynomial(translation=[[0, 0.5 * c * c, 0], [1, -c, -1], [0, 0.5, 0]], interval=(0.0, 1.0))
    return unit_cube(), traj


TWO_COMPONENT_EDGE = "e_110_2"


def two_component_edge():
    """Translation with g_left = -1 and g_right = (t - 0.3)(t - 0.7) on one vertical edge."""
    solid = unit_cube()
    _, _, nl, nr = solid.edge_frame(TWO_COMPONENT_EDGE, 0.5)
    # velocity -nl + (t^2 - t + 0.21) nr, integrated
    coeffs = [np.zeros(3), -nl + 0.21 * nr, -0.5 * nr, nr / 3.0]
    return solid, Polynomial(translation=[c.tolist() for c in coeffs], interval=(0.0, 1.0))


def non_simple_cube():
    """Cube turning about a z axis through (3, 0.5, 0): the -x face is swallowed."""
    return unit_cube(), Screw((3.0, 0.5, 0.0), (0, 0, 1), 1.0, 0.0, (0.0, np.pi / 2))


def lsi_sphere():
    """Unit sphere centred at (0.5, 0, 0) spinning about the z axis.

    The contact point (-0.5, 0, 0) is occluded at every nearby time.
    """
    return SolidBrep.from_dict(sphere_dict(center=(0.5, 0, 0), pole=(0, 1, 0))), Screw((0, 0, 0), (0, 0, 1), 1.0, 0.0, (0.0, 1.0))


SIMPLE_SWEEPS = {
    "rotating_cube": rotating_cube,
    "capsule": capsule,
    "translating_cube": translating_cube,
    "oblique_cube": oblique_cube,
    "dome_box": dome_box,
}
