import numpy as np
import pytest

from sweepkernel.contour import (boundary_loops, contour_region, contour_surface, orient_consistently,
                                 refine_roots, triangle_components)
from sweepkernel.errors import SolverDivergence


def _area(points, tris):
    P = points[tris]
    d1, d2 = P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def test_refine_roots_cubic():
    f = lambda P: P[:, 0] ** 3 - 2.0  # noqa: E731
    p0, p1 = np.array([[0.0], [1.0]]), np.array([[2.0], [1.5]])
    lam, res = refine_roots(f, p0, p1, f(p0), f(p1), 1e-14)
    roots = p0[:, 0] + lam * (p1[:, 0] - p0[:, 0])
    assert np.allclose(roots, 2 ** (1 / 3), atol=1e-13)
    assert np.all(res <= 1e-14)


def test_refine_roots_needs_bracket():
    f = lambda P: P[:, 0] ** 2 + 1  # noqa: E731
    p0, p1 = np.array([[0.0]]), np.array([[1.0]])
    with pytest.raises(SolverDivergence):
        refine_roots(f, p0, p1, f(p0), f(p1), 1e-12)


def test_refine_roots_flat_function_uses_bisection():
    f = lambda P: np.sign(P[:, 0] - 0.3) * np.abs(P[:, 0] - 0.3) ** 9  # noqa: E731
    p0, p1 = np.array([[0.0]]), np.array([[1.0]])
    lam, _ = refine_roots(f, p0, p1, f(p0), f(p1), 0.0, iters=120)
    assert abs(lam[0] - 0.3) < 1e-9


def test_disk_region():
    f = lambda P: P[:, 0] ** 2 + P[:, 1] ** 2 - 0.64  # noqa: E731
    xs = ys = np.linspace(-1, 1, 41)
    m = contour_region(f, xs, ys, tol=1e-14)
    a = _area(m.points, m.triangles)
    assert np.all(a > 0)
    assert abs(a.sum() - np.pi * 0.64) < 5e-3
    loops = m.loops()
    assert len(loops) == 1
    assert np.max(np.abs(f(m.points[loops[0]]))) <= 1e-14
    assert len(m.components()) == 1


def test_two_components_and_saddle():
    f = lambda P: np.minimum((P[:, 0] - 0.5) ** 2 + P[:, 1] ** 2, (P[:, 0] + 0.5) ** 2 + P[:, 1] ** 2) - 0.09  # noqa: E731
    xs = ys = np.linspace(-1, 1, 33)
    m = contour_region(f, xs, ys)
    assert len(m.components()) == 2
    g = lambda P: P[:, 0] * P[:, 1]  # noqa: E731  saddle at the cell centre
    s = contour_region(g, np.array([-1.0, 1.0]), np.array([-1.0, 1.0]))
    assert len(triangle_components(s.triangles, len(s.points))) >= 1
    assert np.all(_area(s.points, s.triangles) > 0)


def test_full_region_is_rectangle():
    m = contour_region(lambda P: -np.ones(len(P)), np.linspace(0, 2, 5), np.linspace(0, 1, 3))
    assert abs(_area(m.points, m.triangles).sum() - 2.0) < 1e-14
    assert len(m.loops()) == 1


def test_sphere_surface():
    f = lambda P: np.sum(P**2, axis=1) - 0.5  # noqa: E731
    ax = np.linspace(-1, 1, 24)
    m = contour_surface(f, (ax, ax, ax), tol=1e-13)
    assert np.max(m.resid) <= 1e-13
    assert np.max(np.abs(f(m.points))) <= 1e-13
    assert boundary_loops(m.triangles) == []


def test_empty_surface():
    ax = np.linspace(0, 1, 8)
    m = contour_surface(lambda P: np.ones(len(P)), (ax, ax, ax))
    assert len(m.triangles) == 0


def test_orient_consistently_repairs_flip():
    tris = np.array([[0, 1, 2], [2, 1, 3], [3, 1, 4]])
    bad = tris.copy()
    bad[1] = bad[1][::-1]
    fixed = orient_consistently(bad)
    edges = [tuple(t[[i, (i + 1) % 3]]) for t in fixed for i in range(3)]
    assert len(edges) == len(set(edges))
