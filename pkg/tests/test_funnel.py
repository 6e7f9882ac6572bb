import numpy as np
import pytest

from sweepkernel import fixtures as fx
from sweepkernel.brep import SolidBrep
from sweepkernel.config import Grids, Tolerances
from sweepkernel.cones import edge_contact_test, g_eval
from sweepkernel.errors import AssumptionViolation, DegenerateFunnel, DegenerateStrip, RootClusterTooDense
from sweepkernel.funnel import (detect_singularities, edge_funnel, face_contact_fn, face_funnel,
                                pcurve_of_contact, vertex_intervals)
from sweepkernel.motion import Keyframed, Polynomial, Screw

TOL = Tolerances()


def _keyframed_tumble():
    return Keyframed([
        {"t": 0.0, "quat": [1, 0, 0, 0], "trans": [0, 0, 0]},
        {"t": 0.5, "quat": [0.9, 0.3, 0.2, 0.25], "trans": [0.6, 0.2, 0.4]},
        {"t": 1.0, "quat": [0.7, 0.4, 0.5, 0.3], "trans": [1.0, -0.3, 0.8]},
    ])


# ---------------------------------------------------------------- face funnels


def test_sphere_translation_great_circle():
    solid, traj = fx.capsule()
    ff = face_funnel(solid, "f_sphere", traj)
    assert len(ff.components) == 1
    assert ff.residual_max() <= TOL.f * 10
    surf = solid.faces["f_sphere"].surface
    X = surf.eval(ff.mesh.points[:, 0], ff.mesh.points[:, 1])
    assert np.max(np.abs(X[:, 0])) <= 1e-8
    assert np.allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-12)


def test_plane_spinning_in_itself_is_degenerate():
    solid, traj = fx.rotating_cube()
    with pytest.raises(DegenerateFunnel):
        face_funnel(solid, "f_pz", traj)


def test_offset_sphere_rotation_matches_grid_sampling():
    solid = SolidBrep.from_dict(fx.sphere_dict(center=(2, 0, 0), pole=(0, 1, 0)))
    traj = Screw((0, 0, 0), (0, 0, 1), 1.0, 0.0, (0.0, 1.0))
    fid = next(iter(solid.faces))
    grids = Grids(nu=64, nv=64, nt=64)
    ff = face_funnel(solid, fid, traj, grids)
    fn = face_contact_fn(solid, fid, traj)
    G = np.stack(np.meshgrid(*ff.axes, indexing="ij"), axis=-1)
    F = fn(G.reshape(-1, 3)).reshape(G.shape[:3])
    crossings = sum(int(np.sum(np.diff(np.sign(F), axis=k) != 0)) for k in range(3))
    # one refined vertex per sign-changing grid edge
    assert len(ff.mesh.points) == crossings
    assert ff.residual_max() <= TOL.f * 10
    assert len(ff.components) == 1


# ---------------------------------------------------------------- edge funnels


def test_rotating_cube_edge_funnel_is_full():
    solid, traj = fx.rotating_cube()
    ef = edge_funnel(solid, "e_000_2", traj)
    assert len(ef.components) == 1
    P = ef.mesh.points
    d1, d2 = P[ef.mesh.triangles[:, 1]] - P[ef.mesh.triangles[:, 0]], P[ef.mesh.triangles[:, 2]] - P[ef.mesh.triangles[:, 0]]
    area = 0.5 * np.sum(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    assert area == pytest.approx(1.0 * np.pi / 2, abs=1e-12)
    S, T = np.meshgrid(np.linspace(0, 1, 9), traj.times(9), indexing="ij")
    assert np.allclose(ef.alpha(S, T), 0.5, atol=1e-12)


def test_tilted_translation_gives_empty_funnel():
    solid = fx.unit_cube()
    ef = edge_funnel(solid, "e_101_1", fx.translation((1, 0, 0.01)))
    assert ef.components == []
    assert pcurve_of_contact(ef, 0.5) == []


def test_grazing_translation_is_degenerate_strip():
    with pytest.raises(DegenerateStrip):
        edge_funnel(fx.unit_cube(), "e_101_1", fx.translation((1, 0, 0)))


def test_bezier_edge_funnel_matches_sign_sampling(rng):
    solid = SolidBrep.from_dict(fx.dome_box_dict())
    traj = _keyframed_tumble()
    eid = "top_x1"
    ef = edge_funnel(solid, eid, traj, Grids(ns=256, nt_edge=256))
    # independent sign sampling in the world frame on the same 256^2 nodes
    S, T = np.meshgrid(*ef.axes, indexing="ij")
    inside = np.zeros(S.shape, dtype=bool)
    for j, t in enumerate(ef.axes[1]):
        x, _, n1, n2 = solid.edge_frame(eid, ef.axes[0])
        inside[:, j] = g_eval(n1, x, traj, t) * g_eval(n2, x, traj, t) <= 0
    nodes = {tuple(p) for p in np.round(ef.mesh.points, 14)}
    grid_in = {tuple(p) for p in np.round(np.stack([S[inside], T[inside]], 1), 14)}
    assert grid_in <= nodes
    all_nodes = {tuple(q) for q in np.round(np.stack([S.ravel(), T.ravel()], 1), 14)}
    assert nodes & all_nodes == grid_in


def test_membership_and_alpha_existence(rng):
    solid, traj = fx.oblique_cube()
    for eid in ("e_000_2", "e_100_1", "e_011_0"):
        try:
            ef = edge_funnel(solid, eid, traj)
        except DegenerateStrip:
            continue
        s = rng.uniform(0, 1, 10_000)
        t = rng.uniform(*traj.interval, 10_000)
        g1, g2 = ef.fns(np.stack([s, t], 1))
        mem = ef.contains(s, t)
        assert np.array_equal(mem, g1 * g2 <= 0)
        a = ef.alpha(s[mem], t[mem])
        f = a * g1[mem] + (1 - a) * g2[mem]
        assert np.all(np.abs(f) <= 1e-12)


def test_trim_curve_residuals():
    solid, traj = fx.two_component_edge()
    ef = edge_funnel(solid, fx.TWO_COMPONENT_EDGE, traj)
    assert len(ef.components) == 2
    for comp in ef.components:
        g1, g2 = ef.fns(comp.points)
        for loop in comp.loops():
            labels = ef.boundary_labels(comp, loop, TOL.g)
            for k, lab in enumerate(labels):
                if lab == "a2":
                    assert abs(g2[loop[k]]) <= 1e-8
                if lab == "a1":
                    assert abs(g1[loop[k]]) <= 1e-8


def test_pcurve_points_are_contact():
    solid, traj = fx.rotating_cube()
    ef = edge_funnel(solid, "e_000_2", traj)
    curves = pcurve_of_contact(ef, 0.7)
    assert len(curves) == 1
    assert curves[0][0, 0] == 0.0 and curves[0][-1, 0] == 1.0
    for s in curves[0][::16, 0]:
        assert edge_contact_test(solid, "e_000_2", s, traj, 0.7).status == "contact_unique"


def test_pcurve_sphere_single_circle():
    solid, traj = fx.capsule()
    ff = face_funnel(solid, "f_sphere", traj)
    curves = pcurve_of_contact(ff, 1.0)
    assert len(curves) == 1
    assert np.max(np.abs(curves[0][:, 1])) <= 1e-8


# ---------------------------------------------------------------- singularities


def test_singular_edge_single_point():
    solid, traj = fx.singular_edge()
    ef = edge_funnel(solid, fx.SINGULAR_EDGE, traj)
    pts = detect_singularities(solid, fx.SINGULAR_EDGE, traj, ef)
    assert len(pts) == 1
    assert abs(pts[0].s - fx.SINGULAR_ST[0]) <= 1e-6 and abs(pts[0].t - fx.SINGULAR_ST[1]) <= 1e-6
    assert pts[0].residual <= TOL.sing


def test_rotating_cube_has_no_singularity():
    solid, traj = fx.rotating_cube()
    assert detect_singularities(solid, "e_000_2", traj) == []


def test_translation_along_edge_is_non_isolated():
    with pytest.raises(AssumptionViolation):
        detect_singularities(fx.unit_cube(), "e_000_2", fx.translation((0, 0, 1)))


# ---------------------------------------------------------------- vertex intervals


def test_rotating_corner_one_interval():
    solid, traj = fx.rotating_cube()
    vi = vertex_intervals(solid, "v110", traj)
    assert len(vi.intervals) == 1
    iv = vi.intervals[0]
    assert (iv.a, iv.b) == traj.interval and (iv.cause_a, iv.cause_b) == ("t0", "t1")


def test_diagonal_translation_no_interval():
    vi = vertex_intervals(fx.unit_cube(), "v111", fx.translation(np.ones(3) / np.sqrt(3)))
    assert vi.intervals == []


def test_vertex_crossing_root():
    solid, traj = fx.vertex_crossing()
    vi = vertex_intervals(solid, fx.CROSSING_VERTEX, traj)
    assert len(vi.roots) == 1 and abs(vi.roots[0][0] - fx.CROSSING_ROOT) <= 1e-8
    assert [(i.cause_a, i.cause_b) for i in vi.intervals] == [("t0", "s1"), ("s1", "t1")]
    assert vi.intervals[0].b == vi.intervals[1].a


def test_root_cluster_rejected():
    tc = 128 / 255
    delta = (4e-7) ** 2
    y = [-tc**3 / 3, tc**2 - delta, -tc, 1 / 3]
    traj = Polynomial(translation=[[0, y[0], 0], [1, y[1], -1], [0, y[2], 0], [0, y[3], 0]], interval=(0.0, 1.0))
    with pytest.raises(RootClusterTooDense):
        vertex_intervals(fx.unit_cube(), "v111", traj, n=256)
