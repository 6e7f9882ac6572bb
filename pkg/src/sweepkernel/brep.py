"""Input solid brep: topology, geometry lookups, validation, JSON schema.

Faces are untrimmed rectangular patches.  Each of the four domain sides is
either bounded by exactly one edge (through a coedge), a seam (identified with
the opposite side), or a pole (collapsed to a point).  The outer loop lists the
edge-bounded sides in counter-clockwise order with respect to the outward
normal.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .config import Tolerances
from .errors import AssumptionViolation, DegenerateNormals, MalformedBrep
from .geometry import Curve3, Surface, curve_from_dict, surface_from_dict

SIDES = ("v0", "u1", "v1", "u0")
SIDE_KINDS = ("edge", "seam", "pole")


@dataclass
class Vertex:
    id: str
    point: np.ndarray
    edges: list = field(default_factory=list)
    sharp: bool = False


@dataclass
class Edge:
    id: str
    curve: Curve3
    start_vertex: str
    end_vertex: str
    sharp: bool
    coedges: list = field(default_factory=list)
    left_face: str | None = None
    right_face: str | None = None


@dataclass
class Coedge:
    id: str
    edge: str
    face: str
    loop: str
    side: str
    sense: int
    # +1 when the side parameter grows with the edge parameter
    align: int = 1


@dataclass
class Loop:
    id: str
    face: str
    coedges: list


@dataclass
class Face:
    id: str
    surface: Surface
    loops: list
    outward: int = 1
    sides: dict = field(default_factory=lambda: {s: "edge" for s in SIDES})


@dataclass
class Violation:
    kind: str
    entity: str
    message: str

    def __str__(self):
        return f"{self.kind} [{self.entity}]: {self.message}"


@dataclass
class ValidationReport:
    violations: list
    n_sharp_edges: int
    n_sharp_vertices: int

    @property
    def accepted(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def raise_if_rejected(self):
        if self.violations:
            raise AssumptionViolation("; ".join(str(v) for v in self.violations))

    def summary(self) -> str:
        head = "accepted" if self.accepted else f"rejected ({len(self.violations)} violations)"
        lines = [f"{head}: {self.n_sharp_edges} sharp edges, {self.n_sharp_vertices} sharp vertices"]
        lines += [f"  {v}" for v in self.violations]
        return "\n".join(lines)


def side_range(surface: Surface, side: str):
    """Traversal range of a side's free parameter, as (start, end) of the ccw walk."""
    (u0, u1), (v0, v1) = surface.domain
    return {"v0": (u0, u1), "u1": (v0, v1), "v1": (u1, u0), "u0": (v1, v0)}[side]


def side_uv(surface: Surface, side: str, lam):
    """Domain point on ``side`` at free parameter ``lam``."""
    (u0, u1), (v0, v1) = surface.domain
    lam = np.asarray(lam, dtype=float)
    fixed = {"u0": u0, "u1": u1, "v0": v0, "v1": v1}[side]
    fixed = np.full_like(lam, fixed)
    return (fixed, lam) if side[0] == "u" else (lam, fixed)


class SolidBrep:
    def __init__(self, vertices, curves, surfaces, edges, coedges, loops, faces):
        self.vertices: dict[str, Vertex] = vertices
        self.curves: dict[str, Curve3] = curves
        self.surfaces: dict[str, Surface] = surfaces
        self.edges: dict[str, Edge] = edges
        self.coedges: dict[str, Coedge] = coedges
        self.loops: dict[str, Loop] = loops
        self.faces: dict[str, Face] = faces
        self._raw = None
        self._link()

    # ------------------------------------------------------------- building
    def _link(self):
        for v in self.vertices.values():
            v.edges = []
        for e in self.edges.values():
            e.coedges = []
            for vid in (e.start_vertex, e.end_vertex):
                if vid not in self.vertices:
                    raise MalformedBrep(f"edge {e.id} references missing vertex {vid}")
                self.vertices[vid].edges.append(e.id)
        for c in self.coedges.values():
            if c.edge not in self.edges:
                raise MalformedBrep(f"coedge {c.id} references missing edge {c.edge}")
            if c.face not in self.faces:
                raise MalformedBrep(f"coedge {c.id} references missing face {c.face}")
            if c.side not in SIDES:
                raise MalformedBrep(f"coedge {c.id} has bad side {c.side!r}")
            if c.sense not in (1, -1):
                raise MalformedBrep(f"coedge {c.id} sense must be +1 or -1")
            self.edges[c.edge].coedges.append(c.id)
        for lp in self.loops.values():
            if lp.face not in self.faces:
                raise MalformedBrep(f"loop {lp.id} references missing face {lp.face}")
            for cid in lp.coedges:
                if cid not in self.coedges:
                    raise MalformedBrep(f"loop {lp.id} references missing coedge {cid}")
        for f in self.faces.values():
            for lid in f.loops:
                if lid not in self.loops:
                    raise MalformedBrep(f"face {f.id} references missing loop {lid}")
            for s, k in f.sides.items():
                if s not in SIDES or k not in SIDE_KINDS:
                    raise MalformedBrep(f"face {f.id} has bad side spec {s}:{k}")
        for c in self.coedges.values():
            c.align = self._alignment(c)
        for e in self.edges.values():
            e.left_face = e.right_face = None
            for cid in e.coedges:
                c = self.coedges[cid]
                if c.sense > 0 and e.left_face is None:
                    e.left_face = c.face
                elif c.sense < 0 and e.right_face is None:
                    e.right_face = c.face
        for v in self.vertices.values():
            v.sharp = any(self.edges[e].sharp for e in v.edges)

    def _alignment(self, c: Coedge) -> int:
        e = self.edges[c.edge]
        f = self.faces[c.face]
        a, b = side_range(f.surface, c.side)
        if c.side in ("v1", "u0"):
            a, b = b, a  # ascending parameter order
        start = f.surface.eval(*side_uv(f.surface, c.side, a))
        end = f.surface.eval(*side_uv(f.surface, c.side, b))
        p0 = e.curve.eval(e.curve.domain[0])
        return 1 if np.linalg.norm(p0 - start) <= np.linalg.norm(p0 - end) else -1

    # ----------------------------------------------------------- geometry
    def coedge_uv(self, cid: str, s):
        """Face-domain point of the coedge's face at edge parameter ``s``."""
        c = self.coedges[cid]
        e = self.edges[c.edge]
        f = self.faces[c.face]
        s0, s1 = e.curve.domain
        a, b = side_range(f.surface, c.side)
        lo, hi = min(a, b), max(a, b)
        x = (np.asarray(s, dtype=float) - s0) / (s1 - s0)
        lam = lo + x * (hi - lo) if c.align > 0 else hi - x * (hi - lo)
        return side_uv(f.surface, c.side, lam)

    def face_normal(self, fid: str, u, v):
        f = self.faces[fid]
        return f.outward * f.surface.natural_normal(u, v)

    def face_coedge(self, eid: str, fid: str) -> str:
        for cid in self.edges[eid].coedges:
            if self.coedges[cid].face == fid:
                return cid
        raise MalformedBrep(f"face {fid} does not use edge {eid}")

    def edge_faces(self, eid: str):
        e = self.edges[eid]
        return e.left_face, e.right_face

    def edge_frame(self, eid: str, s):
        """Point, tangent, left-face normal and right-face normal along an edge."""
        e = self.edges[eid]
        p, w = e.curve.derivs(s)
        out = []
        for fid in (e.left_face, e.right_face):
            cid = self.face_coedge(eid, fid)
            out.append(self.face_normal(fid, *self.coedge_uv(cid, s)))
        return p, w, out[0], out[1]

    def vertex_face_normals(self, vid: str):
        """Outward normals of every face incident to a vertex, keyed by face id."""
        vert = self.vertices[vid]
        normals = {}
        for eid in vert.edges:
            e = self.edges[eid]
            s = e.curve.domain[0] if e.start_vertex == vid else e.curve.domain[1]
            for cid in e.coedges:
                c = self.coedges[cid]
                if c.face not in normals:
                    normals[c.face] = self.face_normal(c.face, *self.coedge_uv(cid, s))
        return normals

    def vertex_edges_faces(self, vid: str):
        """(edge id, left face, right face) for each edge incident to a vertex."""
        return [(eid,) + self.edge_faces(eid) for eid in self.vertices[vid].edges]

    def face_edges(self, fid: str):
        return [self.coedges[c].edge for lid in self.faces[fid].loops for c in self.loops[lid].coedges]

    def face_vertices(self, fid: str):
        out = []
        for eid in self.face_edges(fid):
            e = self.edges[eid]
            for v in (e.start_vertex, e.end_vertex):
                if v not in out:
                    out.append(v)
        return out

    def side_edge(self, fid: str, side: str):
        """Edge id bounding ``side`` of a face (None for seams and poles)."""
        for lid in self.faces[fid].loops:
            for cid in self.loops[lid].coedges:
                if self.coedges[cid].side == side:
                    return self.coedges[cid].edge
        return None

    def entity_dim(self, ident: str) -> str:
        if ident in self.faces:
            return "face"
        if ident in self.edges:
            return "edge"
        if ident in self.vertices:
            return "vertex"
        raise KeyError(ident)

    def closure(self, ident: str) -> set:
        """The entity together with every entity on its boundary."""
        dim = self.entity_dim(ident)
        out = {ident}
        if dim == "face":
            for eid in self.face_edges(ident):
                out |= self.closure(eid)
        elif dim == "edge":
            e = self.edges[ident]
            out |= {e.start_vertex, e.end_vertex}
        return out

    def adjacent(self, a: str, b: str) -> bool:
        """Adjacency in the boundary: equal, incident, or sharing a boundary entity."""
        if a == b:
            return True
        ca, cb = self.closure(a), self.closure(b)
        return bool(ca & cb)

    def bounding_box(self, n=9):
        pts = []
        for f in self.faces.values():
            (u0, u1), (v0, v1) = f.surface.domain
            uu, vv = np.meshgrid(np.linspace(u0, u1, n), np.linspace(v0, v1, n), indexing="ij")
            pts.append(f.surface.eval(uu.ravel(), vv.ravel()))
        pts = np.concatenate(pts)
        return pts.min(axis=0), pts.max(axis=0)

    # --------------------------------------------------------------- json
    @classmethod
    def from_dict(cls, d: dict) -> "SolidBrep":
        try:
            curves = {c["id"]: curve_from_dict(c) for c in d.get("curves", [])}
            surfaces = {s["id"]: surface_from_dict(s) for s in d.get("surfaces", [])}
            vertices = {v["id"]: Vertex(v["id"], np.asarray(v["point"], dtype=float))
                        for v in d.get("vertices", [])}
            edges = {}
            for e in d.get("edges", []):
                if e["curve"] not in curves:
                    raise MalformedBrep(f"edge {e['id']} references missing curve {e['curve']}")
                edges[e["id"]] = Edge(e["id"], curves[e["curve"]], e["start_vertex"],
                                      e["end_vertex"], bool(e.get("sharp", True)))
            coedges = {c["id"]: Coedge(c["id"], c["edge"], c["face"], c.get("loop", ""), c["side"],
                                       int(c["sense"])) for c in d.get("coedges", [])}
            loops = {lp["id"]: Loop(lp["id"], lp["face"], list(lp["coedges"]))
                     for lp in d.get("loops", [])}
            faces = {}
            for f in d.get("faces", []):
                if f["surface"] not in surfaces:
                    raise MalformedBrep(f"face {f['id']} references missing surface {f['surface']}")
                sides = {s: "edge" for s in SIDES}
                sides.update(f.get("sides", {}))
                faces[f["id"]] = Face(f["id"], surfaces[f["surface"]], list(f.get("loops", [])),
                                      int(f.get("outward", 1)), sides)
        except KeyError as exc:
            raise MalformedBrep(f"missing field {exc}") from None
        obj = cls(vertices, curves, surfaces, edges, coedges, loops, faces)
        obj._raw = d
        obj._surface_ids = {id(s): k for k, s in surfaces.items()}
        obj._curve_ids = {id(c): k for k, c in curves.items()}
        return obj

    def to_dict(self) -> dict:
        sid = {id(s): k for k, s in self.surfaces.items()}
        cid = {id(c): k for k, c in self.curves.items()}
        return {
            "vertices": [{"id": v.id, "point": v.point.tolist()} for v in self.vertices.values()],
            "curves": [dict(id=k, **c.to_dict()) for k, c in self.curves.items()],
            "surfaces": [dict(id=k, **s.to_dict()) for k, s in self.surfaces.items()],
            "edges": [{"id": e.id, "curve": cid[id(e.curve)], "start_vertex": e.start_vertex,
                       "end_vertex": e.end_vertex, "sharp": e.sharp,
                       "left_face": e.left_face, "right_face": e.right_face}
                      for e in self.edges.values()],
            "coedges": [{"id": c.id, "edge": c.edge, "face": c.face, "loop": c.loop,
                         "side": c.side, "sense": c.sense} for c in self.coedges.values()],
            "loops": [{"id": lp.id, "face": lp.face, "coedges": list(lp.coedges)}
                      for lp in self.loops.values()],
            "faces": [{"id": f.id, "surface": sid[id(f.surface)], "loops": list(f.loops),
                       "outward": f.outward, "sides": dict(f.sides)} for f in self.faces.values()],
        }

    @classmethod
    def load(cls, path) -> "SolidBrep":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedBrep(f"{path}: {exc}") from None
        return cls.from_dict(data)

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


# ------------------------------------------------------------------ validation


def edge_convexity(solid: SolidBrep, eid: str, s: float, tol: Tolerances = Tolerances()) -> str:
    """Classify an edge point as 'convex', 'concave' or 'smooth'.

    The left face is the one whose coedge runs along increasing edge
    parameter; with that convention a convex edge has
    ``<N_left x N_right, e'(s)> > 0``.
    """
    _, w, n1, n2 = solid.edge_frame(eid, s)
    if abs(float(np.dot(n1, n2)) - 1.0) < tol.sharp:
        return "smooth"
    cross = np.cross(n1, n2)
    if np.linalg.norm(cross) < tol.sharp:
        raise DegenerateNormals(f"edge {eid} folds back at s={s}")
    return "convex" if float(np.dot(cross, w)) > 0 else "concave"


def _check_topology(solid: SolidBrep, out: list):
    for e in solid.edges.values():
        cs = [solid.coedges[c] for c in e.coedges]
        if len(cs) != 2:
            out.append(Violation("open_shell", e.id, f"unmatched coedges ({len(cs)} uses)"))
            continue
        if cs[0].sense + cs[1].sense != 0:
            out.append(Violation("orientation", e.id, "partner coedges share a sense"))
        if cs[0].face == cs[1].face:
            out.append(Violation("topology", e.id, "edge used twice by one face"))
    for f in solid.faces.values():
        used = {}
        for lid in f.loops:
            for cid in solid.loops[lid].coedges:
                c = solid.coedges[cid]
                if c.face != f.id:
                    out.append(Violation("topology", cid, f"listed in a loop of face {f.id}"))
                used[c.side] = cid
        for side in SIDES:
            kind = f.sides.get(side, "edge")
            if kind == "edge" and side not in used:
                out.append(Violation("open_shell", f.id, f"side {side} has no coedge"))
            if kind != "edge" and side in used:
                out.append(Violation("topology", f.id, f"{kind} side {side} carries a coedge"))


def _check_geometry(solid: SolidBrep, tol: Tolerances, out: list):
    scale = 1.0 + float(np.linalg.norm(np.subtract(*solid.bounding_box())))
    geo_tol = 1e-6 * scale
    for e in solid.edges.values():
        s = np.linspace(*e.curve.domain, 9)
        p, d = e.curve.derivs(s)
        if np.min(np.linalg.norm(d, axis=-1)) < 1e-12 * scale:
            out.append(Violation("degenerate_curve", e.id, "vanishing derivative"))
        for vid, q in ((e.start_vertex, p[0]), (e.end_vertex, p[-1])):
            if np.linalg.norm(solid.vertices[vid].point - q) > geo_tol:
                out.append(Violation("geometry", e.id, f"curve end does not meet vertex {vid}"))
        for cid in e.coedges:
            c = solid.coedges[cid]
            f = solid.faces[c.face]
            q = f.surface.eval(*solid.coedge_uv(cid, s))
            if np.max(np.linalg.norm(q - p, axis=-1)) > geo_tol:
                out.append(Violation("geometry", cid, "face side does not follow the edge curve"))
            # traversal direction of the ccw walk versus edge direction
            a, b = side_range(f.surface, c.side)
            walk = int(np.sign(b - a)) * f.outward
            if walk * c.align != c.sense:
                out.append(Violation("orientation", cid, "sense disagrees with loop direction"))
    for f in solid.faces.values():
        (u0, u1), (v0, v1) = f.surface.domain
        uu, vv = np.meshgrid(np.linspace(u0, u1, 7), np.linspace(v0, v1, 7), indexing="ij")
        mask = np.ones_like(uu, dtype=bool)
        if f.sides.get("u0") == "pole":
            mask[0, :] = False
        if f.sides.get("u1") == "pole":
            mask[-1, :] = False
        if f.sides.get("v0") == "pole":
            mask[:, 0] = False
        if f.sides.get("v1") == "pole":
            mask[:, -1] = False
        _, su, sv = f.surface.derivs(uu[mask], vv[mask])
        jac = np.linalg.norm(np.cross(su, sv), axis=-1)
        if np.min(jac) < 1e-10 * scale**2:
            out.append(Violation("degenerate_surface", f.id, "Jacobian rank below 2"))
        for a, b in (("u0", "u1"), ("v0", "v1")):
            if (f.sides.get(a) == "seam") != (f.sides.get(b) == "seam"):
                out.append(Violation("topology", f.id, f"seam side {a}/{b} is unpaired"))
            elif f.sides.get(a) == "seam":
                lam = np.linspace(*sorted(side_range(f.surface, a)), 7)
                pa = f.surface.eval(*side_uv(f.surface, a, lam))
                pb = f.surface.eval(*side_uv(f.surface, b, lam))
                if np.max(np.linalg.norm(pa - pb, axis=-1)) > geo_tol:
                    out.append(Violation("geometry", f.id, f"seam {a}/{b} does not close"))
        for side in SIDES:
            if f.sides.get(side) == "pole":
                lam = np.linspace(*sorted(side_range(f.surface, side)), 7)
                pts = f.surface.eval(*side_uv(f.surface, side, lam))
                if np.max(np.linalg.norm(pts - pts[0], axis=-1)) > geo_tol:
                    out.append(Violation("geometry", f.id, f"pole side {side} is not collapsed"))


def _check_features(solid: SolidBrep, tol: Tolerances, out: list):
    for e in solid.edges.values():
        if e.left_face is None or e.right_face is None:
            continue
        s = np.linspace(*e.curve.domain, 18)[1:-1]
        try:
            kinds = [edge_convexity(solid, e.id, x, tol) for x in s]
        except DegenerateNormals as exc:
            out.append(Violation("degenerate_normals", e.id, str(exc)))
            continue
        if e.sharp:
            if "concave" in kinds:
                out.append(Violation("concave_edge", e.id, "concave sharp edge"))
            if "smooth" in kinds:
                out.append(Violation("sharpness", e.id, "sharp edge is tangent-continuous somewhere"))
        elif any(k != "smooth" for k in kinds):
            out.append(Violation("sharpness", e.id, "edge flagged smooth has a normal jump"))
    for v in solid.vertices.values():
        if not v.sharp:
            continue
        normals = []
        for n in solid.vertex_face_normals(v.id).values():
            if all(abs(float(np.dot(n, m)) - 1.0) >= tol.sharp for m in normals):
                normals.append(n)
        if len(normals) != 3:
            out.append(Violation("vertex_valence", v.id,
                                 f"{len(normals)} distinct normals at a sharp vertex (need 3)"))
            continue
        if abs(np.linalg.det(np.array(normals))) < tol.sharp:
            out.append(Violation("dependent_normals", v.id, "face normals are linearly dependent"))


def validate_solid(solid: SolidBrep, tol: Tolerances = Tolerances()) -> ValidationReport:
    out: list[Violation] = []
    _check_topology(solid, out)
    if not any(v.kind == "open_shell" for v in out):
        _check_geometry(solid, tol, out)
        _check_features(solid, tol, out)
    n_edges = sum(1 for e in solid.edges.values() if e.sharp)
    n_verts = sum(1 for v in solid.vertices.values() if v.sharp)
    return ValidationReport(out, n_edges, n_verts)
