import json

import numpy as np
import pytest

from sweepkernel import fixtures as fx
from sweepkernel.brep import SolidBrep, edge_convexity, validate_solid
from sweepkernel.errors import AssumptionViolation, MalformedBrep

SOLIDS = {
    "cube": lambda: fx.unit_cube(),
    "sphere": lambda: SolidBrep.from_dict(fx.sphere_dict()),
    "dome_box": lambda: SolidBrep.from_dict(fx.dome_box_dict()),
    "tall_box": lambda: SolidBrep.from_dict(fx.box_dict((0, 0, -0.5), (1, 1, 0.5))),
}


def test_cube_accepted():
    rep = validate_solid(fx.unit_cube())
    assert rep.accepted, rep.summary()
    assert (rep.n_sharp_edges, rep.n_sharp_vertices) == (12, 8)


def test_open_cube_rejected():
    rep = validate_solid(SolidBrep.from_dict(fx.open_cube()))
    assert "open_shell" in rep.kinds()
    with pytest.raises(AssumptionViolation):
        rep.raise_if_rejected()


def test_l_prism_has_concave_edge():
    solid = SolidBrep.from_dict(fx.l_prism_dict())
    rep = validate_solid(solid)
    assert "concave_edge" in rep.kinds()
    concave = [v.entity for v in rep.violations if v.kind == "concave_edge"]
    assert concave == ["v_e"]
    e = solid.edges["v_e"]
    assert edge_convexity(solid, "v_e", 0.5 * sum(e.curve.domain)) == "concave"


def test_convexity_convention_on_cube_edge():
    # e_000_0 runs along +x; f_my traverses it forwards, so it is the left face
    solid = fx.unit_cube()
    e = solid.edges["e_000_0"]
    assert (e.left_face, e.right_face) == ("f_my", "f_mz")
    _, w, nl, nr = solid.edge_frame("e_000_0", 0.5)
    assert np.allclose(w, [1, 0, 0]) and np.allclose(nl, [0, -1, 0]) and np.allclose(nr, [0, 0, -1])
    assert np.dot(np.cross(nl, nr), w) > 0
    assert edge_convexity(solid, "e_000_0", 0.5) == "convex"


def test_convex_edge_with_normals_z_and_x():
    # the edge at x = z = 1: its normals are (0,0,1) and (1,0,0)
    solid = fx.unit_cube()
    _, _, nl, nr = solid.edge_frame("e_101_1", 0.5)
    assert {tuple(np.round(nl)), tuple(np.round(nr))} == {(0, 0, 1), (1, 0, 0)}
    assert edge_convexity(solid, "e_101_1", 0.5) == "convex"


def test_coplanar_split_is_smooth():
    solid = SolidBrep.from_dict(fx.l_prism_dict())
    for eid in ("v_b", "v_h", "s0_be", "s1_he"):
        e = solid.edges[eid]
        assert edge_convexity(solid, eid, 0.5 * sum(e.curve.domain)) == "smooth"


@pytest.mark.parametrize("name", sorted(SOLIDS))
def test_partner_senses_opposite(name):
    solid = SOLIDS[name]()
    for e in solid.edges.values():
        a, b = (solid.coedges[c] for c in e.coedges)
        assert a.sense == -b.sense


@pytest.mark.parametrize("name", sorted(SOLIDS))
def test_sharp_edges_convex_everywhere(name):
    solid = SOLIDS[name]()
    assert validate_solid(solid).accepted
    for e in solid.edges.values():
        if e.sharp:
            s = np.linspace(*e.curve.domain, 18)[1:-1]
            assert all(edge_convexity(solid, e.id, x) == "convex" for x in s)


@pytest.mark.parametrize("name", sorted(SOLIDS))
def test_json_round_trip(name):
    solid = SOLIDS[name]()
    again = SolidBrep.from_dict(json.loads(json.dumps(solid.to_dict())))
    assert again.to_dict() == solid.to_dict()


def test_outward_normals_on_cube():
    solid = fx.unit_cube()
    for fid, n in (("f_px", (1, 0, 0)), ("f_my", (0, -1, 0)), ("f_pz", (0, 0, 1))):
        assert np.allclose(solid.face_normal(fid, 0.5, 0.5), n)


def test_adjacency_closure():
    solid = fx.unit_cube()
    assert solid.adjacent("v000", "e_000_0") and solid.adjacent("e_000_0", "f_my")
    assert not solid.adjacent("v111", "f_mx")
    assert solid.entity_dim("v000") == "vertex" and solid.entity_dim("f_px") == "face"


def test_malformed_reference():
    d = fx.box_dict()
    d["edges"][0]["start_vertex"] = "nowhere"
    with pytest.raises(MalformedBrep):
        SolidBrep.from_dict(d)
    d = fx.box_dict()
    del d["faces"][0]["surface"]
    with pytest.raises(MalformedBrep):
        SolidBrep.from_dict(d)
