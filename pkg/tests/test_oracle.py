"""Point membership oracle: frozen reference values first, then properties."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sweepkernel import fixtures as fx
from sweepkernel.motion import Composed, axis_rotation
from sweepkernel.oracle import (SolidDistance, brute_force_envelope, lsi_check, lsi_check_point, pmc,
                                pmc_many, swept_bounds)


@pytest.fixture(scope="module")
def cube():
    solid, traj = fx.rotating_cube()
    return solid, traj, SolidDistance(solid)


def test_signed_distance_of_unit_cube(cube):
    solid, _, dist = cube
    q = np.array([[0.5, 0.5, 0.5], [2.0, 0.5, 0.5], [0.5, 0.5, 0.9], [2.0, 2.0, 0.5], [0.0, 0.3, 0.3]])
    # [DERIVED] exact distances to the box [0,1]^3
    np.testing.assert_allclose(dist(q), [-0.5, 1.0, -0.1, np.sqrt(2.0), 0.0], atol=1e-12)


def test_signed_distance_of_sphere():
    solid, _ = fx.capsule()
    dist = SolidDistance(solid)
    q = np.array([[0.0, 0.0, 0.0], [3.0, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, -2.0]])
    np.testing.assert_allclose(dist(q), [-1.0, 2.0, -0.5, 1.0], atol=1e-9)


def test_cube_centre_is_interior(cube):
    solid, traj, dist = cube
    assert pmc([0.5, 0.5, 0.5], solid, traj, dist=dist).verdict == "interior"


def test_far_point_is_exterior(cube):
    solid, traj, dist = cube
    assert pmc([40.0, 40.0, 40.0], solid, traj, dist=dist).verdict == "exterior"


def test_point_on_rotating_cube_cylinder_is_boundary(cube):
    solid, traj, dist = cube
    # [DERIVED] the vertical edge (1, 1, z) sweeps a cylinder of radius 2*sqrt(2) about (-1, -1)
    phi = 0.3
    p = np.array([-1 + 2 * np.sqrt(2) * np.cos(np.pi / 4 + phi), -1 + 2 * np.sqrt(2) * np.sin(np.pi / 4 + phi), 0.4])
    c = pmc(p, solid, traj, dist=dist)
    assert c.verdict == "boundary"
    assert abs(c.margin) <= 1e-5
    assert abs(c.t_witness - phi) < 1e-4


def test_pmc_many_agrees_with_pmc(cube, rng):
    solid, traj, dist = cube
    lo, hi = swept_bounds(solid, traj)
    P = lo + (hi - lo) * rng.random((20, 3))
    many = pmc_many(P, solid, traj, dist=dist)
    for p, c in zip(P, many):
        one = pmc(p, solid, traj, dist=dist)
        assert one.verdict == c.verdict
        assert abs(one.margin - c.margin) < 1e-9


def test_capsule_points_against_analytic_formula(rng):
    solid, traj = fx.capsule()
    dist = SolidDistance(solid)
    P = np.array([-1.5, -1.5, -1.5]) + np.array([6.0, 3.0, 3.0]) * rng.random((200, 3))
    # [DERIVED] distance to the segment [0, 2] x {0} x {0} minus the radius
    seg = np.clip(P[:, 0], 0.0, 2.0)
    d = np.linalg.norm(P - np.stack([seg, 0 * seg, 0 * seg], 1), axis=1) - 1.0
    res = pmc_many(P, solid, traj, dist=dist)
    for r, di in zip(res, d):
        if abs(di) > 1e-3:
            assert r.verdict == ("interior" if di < 0 else "exterior")
        # grid minima bound the true minimum from above; near the surface they are refined
        assert r.margin >= di - 1e-9
        assert r.margin - di < (1e-6 if abs(di) < 1e-3 else 1e-3)


@settings(max_examples=20, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2),
       st.floats(-1, 2), st.floats(-1, 2), st.floats(-0.5, 1.5))
def test_pmc_invariant_under_rigid_reexpression(theta, bx, by, bz, px, py, pz):
    solid, traj = fx.rotating_cube()
    A0 = axis_rotation(np.array([1.0, 2.0, 3.0]), theta)
    b0 = np.array([bx, by, bz])
    p = np.array([px, py, pz])
    moved = Composed(traj, A0, b0)
    a = pmc(p, solid, traj, nt=64)
    b = pmc(A0 @ p + b0, solid, moved, nt=64)
    assert abs(a.margin - b.margin) < 1e-8
    assert a.verdict == b.verdict


def test_interior_points_stay_interior(cube, rng):
    solid, traj, dist = cube
    X = 0.1 + 0.8 * rng.random((25, 3))
    ts = rng.uniform(*traj.interval, 25)
    P = traj.point(X, ts)
    assert all(r.verdict == "interior" for r in pmc_many(P, solid, traj, dist=dist))


def test_lsi_free_on_rotating_cube_edge(cube):
    solid, traj, dist = cube
    for t in (0.2, 0.8, 1.3):
        assert lsi_check(solid, "e_000_2", 0.5, traj, t, dist=dist).status == "free"


def test_lsi_occluded_on_smooth_counterexample():
    solid, traj = fx.lsi_sphere()
    # the near side of the sphere is swept back into itself
    r = lsi_check_point(np.array([-0.5, 0.0, 0.0]), solid, traj, 0.5)
    assert r.status == "occluded"
    assert r.depth < -1e-5


def test_lsi_rejects_boundary_site(cube):
    solid, traj, dist = cube
    with pytest.raises(ValueError):
        lsi_check(solid, "e_100_2", 0.5, traj, 0.3, dist=dist)


def test_brute_force_envelope_of_translating_sphere():
    solid, traj = fx.capsule()
    env = brute_force_envelope(solid, traj, n=24, nt=32)
    h = max(env.spacing)
    P = env.boundary_points
    seg = np.clip(P[:, 0], 0.0, 2.0)
    d = np.linalg.norm(P - np.stack([seg, 0 * seg, 0 * seg], 1), axis=1) - 1.0
    assert len(P) > 0
    assert np.max(np.abs(d)) <= h


def test_single_instant_sweep_is_the_solid():
    from sweepkernel.motion import Screw
    solid, _ = fx.rotating_cube()
    traj = Screw((-1, -1, 0), (0, 0, 1), 1.0, 0.0, (0.0, 0.0))
    assert pmc([0.5, 0.5, 0.5], solid, traj).verdict == "interior"
    assert pmc([1.5, 0.5, 0.5], solid, traj).verdict == "exterior"
    assert pmc([1.0, 0.5, 0.5], solid, traj).verdict == "boundary"
