import numpy as np
import pytest
from conftest import distance_for, swept_case

from sweepkernel import fixtures as fx
from sweepkernel.config import Config
from sweepkernel.errors import DegenerateTangent, NotSimpleSweep
from sweepkernel.funnel import edge_funnel
from sweepkernel.invariants import check_closed_shell, check_euler, check_oracle_boundary, check_tags
from sweepkernel.motion import Screw
from sweepkernel.swept import (SweptBrep, Tag, assemble_loops, build_edge_faces, compute_adjacencies,
                               compute_caps, orient_edge_face, orient_vertex_coedge, sweep, verify_simple)

SPIN = Screw((0, 0, 0), (0, 0, 1), 1.0, 0.0, (0.0, 1.0))
SPIN_BACK = Screw((0, 0, 0), (0, 0, 1), -1.0, 0.0, (0.0, 1.0))


def _cyclic_equal(a, b):
    return len(a) == len(b) and any(a[k:] + a[:k] == b for k in range(len(a)))


# ---------------------------------------------------------------- whole sweeps


def test_rotating_cube_faces(rotating_cube_sweep):
    solid, traj, sw = rotating_cube_sweep
    ce = [f for f in sw.faces.values() if f.provenance == "edge_funnel_component"]
    assert sorted(f.tag.generator for f in ce) == ["e_000_2", "e_110_2"]
    # the edge at the origin circles the axis through (-1, -1, 0) at radius sqrt(2)
    f = sw.faces_by_generator("e_000_2")[0]
    r = np.hypot(f.points[:, 0] + 1, f.points[:, 1] + 1)
    assert np.max(np.abs(r - np.sqrt(2))) <= 1e-6
    assert f.area == pytest.approx(np.sqrt(2) * np.pi / 2, rel=1e-3)
    assert sw.counts() == {"V": 12, "E": 18, "F": 8, "L": 8}


def test_capsule_faces(capsule_sweep):
    _, _, sw = capsule_sweep
    kinds = sorted(f.provenance for f in sw.faces.values())
    assert kinds == ["cap", "cap", "face_funnel_component"]
    lateral = next(f for f in sw.faces.values() if f.provenance == "face_funnel_component")
    assert np.max(np.abs(np.hypot(lateral.points[:, 1], lateral.points[:, 2]) - 1.0)) <= 1e-6


def test_translating_cube_is_a_box():
    solid, traj, sw = swept_case("translating_cube")
    assert sw.counts()["F"] == 6
    P = np.concatenate([f.points for f in sw.faces.values()])
    assert np.allclose(P.min(axis=0), [0, 0, 0], atol=1e-12) and np.allclose(P.max(axis=0), [2, 1, 1], atol=1e-12)
    on_box = np.min(np.abs(np.concatenate([P, P - [2, 1, 1]], axis=1)), axis=1)
    assert np.max(on_box) <= 1e-12
    assert sum(f.area for f in sw.faces.values()) == pytest.approx(10.0, abs=1e-9)
    res = check_oracle_boundary(sw, solid, traj, n=200, dist=distance_for("translating_cube"))
    assert res.passed, res.line()


@pytest.mark.parametrize("name", sorted(fx.SIMPLE_SWEEPS))
def test_closed_and_tagged(name):
    solid, _, sw = swept_case(name)
    for check in (check_closed_shell(sw), check_euler(sw), check_tags(sw, solid)):
        assert check.passed, check.line()
    assert compute_adjacencies(sw, solid)["violations"] == []


@pytest.mark.parametrize("name", ["rotating_cube", "capsule", "dome_box"])
def test_json_round_trip(name, tmp_path):
    _, _, sw = swept_case(name)
    path = tmp_path / "swept.json"
    sw.dump(path)
    again = SweptBrep.load(path)
    assert again.counts() == sw.counts()
    for fid, f in sw.faces.items():
        g = again.faces[fid]
        assert g.tag == f.tag and g.provenance == f.provenance
        assert np.array_equal(g.points, f.points) and np.array_equal(g.triangles, f.triangles)
    assert again.report["euler_characteristic"] == 2


def test_tag_round_trip():
    t = Tag("e_000_2", "edge", 1)
    assert Tag.from_dict(t.to_dict()) == t


def test_sample_lies_on_faces(capsule_sweep, rng):
    _, _, sw = capsule_sweep
    P, N, F = sw.sample(300, rng)
    assert np.allclose(np.linalg.norm(N, axis=1), 1.0)
    lat = np.array([sw.faces[f].provenance == "face_funnel_component" for f in F])
    assert np.max(np.abs(np.hypot(P[lat, 1], P[lat, 2]) - 1.0)) <= 1e-9
    caps = ~lat
    d = np.minimum(np.linalg.norm(P[caps], axis=1), np.linalg.norm(P[caps] - [2, 0, 0], axis=1))
    assert np.max(np.abs(d - 1.0)) <= 1e-9


# ---------------------------------------------------------------- caps


def test_sphere_left_cap_is_back_hemisphere():
    caps = {p.id: p for p in compute_caps(*fx.capsule())}
    left = caps["CAP0_f_sphere_0"]
    assert left.points[:, 0].max() <= 1e-9 and left.points[:, 0].min() == pytest.approx(-1.0, abs=1e-9)


def test_translating_cube_left_cap_has_five_faces():
    caps = compute_caps(*fx.translating_cube())
    left = sorted(p.id for p in caps if p.id.startswith("CAP0_"))
    assert left == sorted(f"CAP0_{f}_0" for f in ("f_mx", "f_my", "f_py", "f_mz", "f_pz"))


# ---------------------------------------------------------------- edge faces and loops


def test_build_edge_faces_counts():
    solid, traj = fx.rotating_cube()
    assert len(build_edge_faces(solid, "e_000_2", edge_funnel(solid, "e_000_2", traj), traj)) == 1
    solid = fx.unit_cube()
    flat = fx.translation((1, 0, 0.01))
    assert build_edge_faces(solid, "e_101_1", edge_funnel(solid, "e_101_1", flat), flat) == []
    solid, traj = fx.two_component_edge()
    faces = build_edge_faces(solid, fx.TWO_COMPONENT_EDGE, edge_funnel(solid, fx.TWO_COMPONENT_EDGE, traj), traj)
    assert len(faces) == 2
    t_ranges = sorted((p.params[:, 1].min(), p.params[:, 1].max()) for p in faces)
    assert t_ranges[0][1] < t_ranges[1][0]


def test_full_prism_loop_labels():
    solid, traj = fx.rotating_cube()
    patch = build_edge_faces(solid, "e_000_2", edge_funnel(solid, "e_000_2", traj), traj)[0]
    loops = assemble_loops(patch)
    assert len(loops) == 1
    labels = loops[0].labels
    assert _cyclic_equal(labels, ["t0", "s1", "t1", "s0"]) or _cyclic_equal(labels, ["t0", "s0", "t1", "s1"])


def test_trimmed_loop_has_a_label():
    solid, traj = fx.two_component_edge()
    for patch in build_edge_faces(solid, fx.TWO_COMPONENT_EDGE, edge_funnel(solid, fx.TWO_COMPONENT_EDGE, traj), traj):
        labels = assemble_loops(patch)[0].labels
        assert {"a1", "a2"} & set(labels)


# ---------------------------------------------------------------- orientation


def test_orient_edge_face_flip():
    # edge (1,1,.) spinning about z: w x v = (-1,-1,0) leaves the cone, so it flips
    n = orient_edge_face(fx.unit_cube(), "e_110_2", SPIN, 0.5, 0.0)
    assert np.allclose(n, np.array([1, 1, 0]) / np.sqrt(2), atol=1e-15)


def test_orient_edge_face_no_flip():
    # reversed spin: w x v = (1,1,0) is already in the cone
    n = orient_edge_face(fx.unit_cube(), "e_110_2", SPIN_BACK, 0.5, 0.0)
    assert np.allclose(n, np.array([1, 1, 0]) / np.sqrt(2), atol=1e-15)


def test_orient_vertex_coedge_rotating_cube():
    # hand evaluation at v000, t = 0: w = (-1,1,0), n = (-1,-1,0)/sqrt2, e' = (0,0,1)
    # n x w is along -z, so <e', n x w> < 0 and the co-edge runs against w
    solid, traj = fx.rotating_cube()
    assert orient_vertex_coedge(solid, "v000", "e_000_2", traj, 0.0) == -1
    # at the far end of the same edge the face lies below the vertex path
    assert orient_vertex_coedge(solid, "v001", "e_000_2", traj, 0.0) == 1


def test_orient_vertex_coedge_at_rest():
    with pytest.raises(DegenerateTangent):
        orient_vertex_coedge(fx.unit_cube(), "v000", "e_000_2", SPIN, 0.0)


# ---------------------------------------------------------------- adjacency and simplicity


def test_rotating_cube_adjacency(rotating_cube_sweep):
    solid, _, sw = rotating_cube_sweep
    nb = sw.face_neighbours()
    gens = {sw.faces[f].tag.generator for f in nb[sw.faces_by_generator("e_000_2")[0].id]}
    assert gens == {"f_mx", "f_my", "f_mz", "f_pz"}
    assert all(solid.adjacent("e_000_2", g) for g in gens)


def test_capsule_adjacency(capsule_sweep):
    _, _, sw = capsule_sweep
    nb = sw.face_neighbours()
    lateral = next(f.id for f in sw.faces.values() if f.provenance == "face_funnel_component")
    assert nb[lateral] == {f for f in sw.faces if f != lateral}
    for f in sw.faces:
        if f != lateral:
            assert nb[f] == {lateral}


@pytest.mark.parametrize("name", ["rotating_cube", "capsule"])
def test_simple_fixtures_verified(name):
    rep = verify_simple(*fx.SIMPLE_SWEEPS[name](), samples=200)
    assert rep.simple, rep.evidence


def test_non_simple_cube_detected():
    rep = verify_simple(*fx.non_simple_cube(), samples=200)
    assert not rep.simple and rep.evidence
    with pytest.raises(NotSimpleSweep):
        sweep(*fx.non_simple_cube(), Config(verify_simple=True))


def test_closest_points_reach_coarse_faces(capsule_sweep):
    # just past the right rim the nearest face is the coarse end cap, not the lateral face
    _, _, sw = capsule_sweep
    X = np.array([[2.02672723, 0.6951204, -0.71839633], [2.3, 0.0, 1.2], [-0.4, 0.3, -1.1]])
    Y, d = sw.closest_points(X)
    c = np.clip(X[:, 0], 0, 2)
    expected = np.abs(np.linalg.norm(X - np.stack([c, 0 * c, 0 * c], 1), axis=1) - 1.0)
    assert np.allclose(d, expected, atol=1e-9)
