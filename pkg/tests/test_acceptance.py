"""Acceptance suite: one PASS/FAIL line per criterion at the pinned tolerances."""
import time

import numpy as np
from conftest import distance_for, swept_case

from sweepkernel import fixtures as fx
from sweepkernel.errors import SweepKernelError
from sweepkernel.funnel import detect_singularities, edge_funnel, vertex_intervals
from sweepkernel.invariants import check_adjacency, check_closed_shell, check_oracle_boundary
from sweepkernel.oracle import SolidDistance, lsi_check, lsi_check_point
from sweepkernel.swept import sweep, verify_simple

SHARP_EDGE_FIXTURES = ("rotating_cube", "oblique_cube", "dome_box")
OTHER_FIXTURES = ("singular_edge", "vertex_crossing", "two_component_edge", "non_simple_cube", "lsi_sphere")


def _angle(a, b):
    return np.arctan2(np.linalg.norm(np.cross(a, b), axis=1), np.sum(a * b, axis=1))


def test_criterion_1_cylinder_face(acceptance):
    solid, traj = fx.rotating_cube()
    start = time.perf_counter()
    sw = sweep(solid, traj)
    elapsed = time.perf_counter() - start
    rng = np.random.default_rng(101)
    # the edge at the origin is the one at distance sqrt(2) from the axis through (-1, -1, 0);
    # it bounds the inner wall of the swept annular sector, so its outward normal points at the axis
    f = sw.faces_by_generator("e_000_2")[0]
    P, N = sw.patch(f.id).sample(1000, rng)
    P, N = np.concatenate([P, f.points]), np.concatenate([N, f.normals])
    rad = P - [-1.0, -1.0, 0.0]
    rad[:, 2] = 0.0
    radial_err = float(np.max(np.abs(np.linalg.norm(rad, axis=1) - np.sqrt(2))))
    normal_err = float(np.max(_angle(N, -rad)))
    alpha_err = 0.0
    for eid in ("e_000_2", "e_110_2"):
        g = sw.faces_by_generator(eid)[0]
        alpha = edge_funnel(solid, eid, traj).alpha(g.params[:, 0], g.params[:, 1])
        alpha_err = max(alpha_err, float(np.max(np.abs(alpha - 0.5))))
    ok = radial_err <= 1e-6 and normal_err <= 1e-6 and alpha_err <= 1e-9 and elapsed < 5.0
    detail = (f"radius err {radial_err:.2e} (<= 1e-6), normal angle {normal_err:.2e} rad (<= 1e-6), "
              f"|alpha - 1/2| {alpha_err:.2e} (<= 1e-9), sweep {elapsed:.2f} s (< 5)")
    assert acceptance(1, "cylinder face", ok, detail), detail


def _capsule_distance(X):
    """Unsigned distance to the analytic capsule: segment [0,2] x {0} x {0} inflated by 1."""
    c = np.clip(X[:, 0], 0.0, 2.0)
    return np.abs(np.linalg.norm(X - np.stack([c, 0 * c, 0 * c], 1), axis=1) - 1.0)


def _capsule_samples(n, rng):
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    lat = rng.random(n) < 0.5
    x = np.where(lat, rng.uniform(0, 2, n), np.where(d[:, 0] < 0, 0.0, 2.0))
    d[lat, 0] = 0.0
    d[lat] /= np.linalg.norm(d[lat], axis=1, keepdims=True)
    return d + np.stack([x, 0 * x, 0 * x], 1)


def test_criterion_2_capsule(acceptance):
    solid, traj = fx.capsule()
    start = time.perf_counter()
    sw = sweep(solid, traj)
    elapsed = time.perf_counter() - start
    kinds = sorted(f.provenance for f in sw.faces.values())
    V = np.concatenate([f.points for f in sw.faces.values()])
    h_out = float(np.max(_capsule_distance(V)))
    _, d_in = sw.closest_points(_capsule_samples(400, np.random.default_rng(202)))
    h_in = float(np.max(d_in))
    left = next(f for f in sw.faces.values() if f.provenance == "cap" and f.source["time"] == "t0")
    hemi = float(np.max(left.points[:, 0]))
    # seam co-edges are internal to the untrimmed sphere face; the rim is the contact co-edge
    rim = np.concatenate([sw.coedges[c].points for lp in left.loops for c in sw.loops[lp].coedges
                          if sw.coedges[c].label == "contact"])
    rim_err = float(np.max(np.abs(rim[:, 0])) + np.max(np.abs(np.hypot(rim[:, 1], rim[:, 2]) - 1.0)))
    ok = (kinds == ["cap", "cap", "face_funnel_component"] and max(h_out, h_in) <= 1e-5
          and hemi <= 1e-6 and rim_err <= 1e-6 and elapsed < 5.0)
    detail = (f"faces {len(kinds)} (2 caps + 1 lateral), Hausdorff {max(h_out, h_in):.2e} (<= 1e-5), "
              f"L cap max <N,v> {hemi:.1e}, rim circle err {rim_err:.2e} (<= 1e-6), sweep {elapsed:.2f} s (< 5)")
    assert acceptance(2, "capsule", ok, detail), detail


def test_criterion_3_oracle_consistency(acceptance):
    parts, ok = [], True
    for name in fx.SIMPLE_SWEEPS:
        solid, traj, sw = swept_case(name)
        start = time.perf_counter()
        r = check_oracle_boundary(sw, solid, traj, n=1000, nt=256, rng=np.random.default_rng(303),
                                  dist=distance_for(name))
        elapsed = time.perf_counter() - start
        ok &= r.passed and elapsed < 60.0
        parts.append(f"{name} {r.value:.3f} ({elapsed:.1f} s)")
    detail = "boundary fraction >= 0.99, |margin| <= 1e-4, none < -1e-3, < 60 s: " + ", ".join(parts)
    assert acceptance(3, "oracle consistency", ok, detail), detail


def test_criterion_4_closed_shell_and_adjacency(acceptance):
    parts, ok = [], True
    for name in fx.SIMPLE_SWEEPS:
        solid, _, sw = swept_case(name)
        shell, adj = check_closed_shell(sw), check_adjacency(sw, solid)
        ok &= shell.passed and adj.passed and sw.euler_characteristic() == 2
        parts.append(f"{name} open {int(shell.value)} viol {int(adj.value)} chi {sw.euler_characteristic()}")
    detail = ", ".join(parts)
    assert acceptance(4, "closed shell and adjacency", ok, detail), detail


def _interior_edge_samples(solid, traj, eid, n, rng):
    ef = edge_funnel(solid, eid, traj)
    (s0, s1), (t0, t1) = solid.edges[eid].curve.domain, traj.interval
    out = []
    while len(out) < n:
        s = rng.uniform(s0, s1, 4 * n)
        t = rng.uniform(t0, t1, 4 * n)
        a = ef.alpha(s, t)
        keep = ef.contains(s, t) & (a > 1e-3) & (a < 1 - 1e-3)
        out += list(zip(s[keep], t[keep]))
    return out[:n]


def test_criterion_5_lsi(acceptance):
    parts, ok = [], True
    rng = np.random.default_rng(505)
    for name in SHARP_EDGE_FIXTURES:
        solid, traj, sw = swept_case(name)
        dist = distance_for(name)
        edges = sorted({f.tag.generator for f in sw.faces.values() if f.provenance == "edge_funnel_component"})
        free = total = 0
        for k, eid in enumerate(edges):
            m = 100 // len(edges) + (k < 100 % len(edges))
            for s, t in _interior_edge_samples(solid, traj, eid, m, rng):
                free += lsi_check(solid, eid, s, traj, t, dt=1e-2, nt=64, dist=dist).status == "free"
                total += 1
        ok &= free == total == 100
        parts.append(f"{name} {free}/{total} free")
    solid, traj = fx.lsi_sphere()
    occl = lsi_check_point([-0.5, 0.0, 0.0], solid, traj, 0.5, dt=1e-2, nt=64, dist=SolidDistance(solid))
    ok &= occl.status == "occluded"
    parts.append(f"lsi_sphere {occl.status}")
    detail = ", ".join(parts)
    assert acceptance(5, "local self-intersection suite", ok, detail), detail


def test_criterion_6_singularities(acceptance):
    solid, traj = fx.singular_edge()
    pts = detect_singularities(solid, fx.SINGULAR_EDGE, traj, edge_funnel(solid, fx.SINGULAR_EDGE, traj))
    err = max((abs(p.s - fx.SINGULAR_ST[0]) + abs(p.t - fx.SINGULAR_ST[1]) for p in pts), default=np.inf)
    rsolid, rtraj = fx.rotating_cube()
    n_rot = sum(len(detect_singularities(rsolid, e, rtraj)) for e in ("e_000_2", "e_110_2"))
    ok = len(pts) == 1 and err <= 1e-6 and n_rot == 0
    detail = f"tangency fixture {len(pts)} point(s), offset {err:.1e} (<= 1e-6); rotating cube {n_rot} point(s)"
    assert acceptance(6, "singularity detection", ok, detail), detail


def test_criterion_7_vertex_intervals(acceptance):
    solid, traj = fx.vertex_crossing()
    vi = vertex_intervals(solid, fx.CROSSING_VERTEX, traj)
    err = abs(vi.roots[0][0] - fx.CROSSING_ROOT) if len(vi.roots) == 1 else np.inf
    causes = [(i.cause_a, i.cause_b) for i in vi.intervals]
    pattern_ok = (len(causes) == 2 and causes[0][0] == "t0" and causes[1][1] == "t1"
                  and causes[0][1] == causes[1][0] and causes[0][1].startswith("s"))
    ok = err <= 1e-8 and pattern_ok
    detail = f"root err {err:.1e} (<= 1e-8), intervals {causes}"
    assert acceptance(7, "vertex intervals", ok, detail), detail


def test_criterion_8_runtime(acceptance):
    parts, ok = [], True
    for name in list(fx.SIMPLE_SWEEPS) + list(OTHER_FIXTURES):
        solid, traj = getattr(fx, name)()
        size = sum(e.sharp for e in solid.edges.values()) + len(solid.faces)
        start = time.perf_counter()
        try:
            sw = sweep(solid, traj)
            outcome = "closed" if sw.is_closed() else "open"
        except SweepKernelError as exc:
            # documented stop for sweeps the assembler cannot close; must be non-simple
            outcome = type(exc).__name__
            ok &= not verify_simple(solid, traj, samples=200).simple
        elapsed = time.perf_counter() - start
        ok &= elapsed < 120.0 and size <= 25
        parts.append(f"{name} {elapsed:.1f} s {outcome}")
    detail = "< 120 s each: " + ", ".join(parts)
    assert acceptance(8, "runtime", ok, detail), detail
