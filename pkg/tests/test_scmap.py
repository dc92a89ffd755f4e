import math

import mpmath as mp
import numpy as np
import pytest
from numpy.testing import assert_allclose

from holoquad.errors import DomainError, SolverError
from holoquad.geometry import AffineSections, intersections, quad_from_vertices
from holoquad.scmap import (
    _find_root, annulus_series_degenerate, dispatch_region, evaluate, evaluate_rescaled, sc_integral,
    side_ratio_residual, solve_prevertex,
)
from holoquad.specfun import SeriesConfig, hyp2f1

from .strategies import interior_turn, random_convex_quads

SQUARE = quad_from_vertices([0, 1, 1 + 1j, 1j])


def parallel_maps():
    """Ten solved maps whose sides 1 and 3 are parallel (a3 + a4 = 1)."""
    fam = AffineSections((0, 1, 0, 1), (0, 0, 1, 1))
    maps = [solve_prevertex(intersections(fam, e), frame=0) for e in (0.5, 0.2, 0.05)]
    # horizontal pairs; the last two have prevertices below 1/64
    shapes = [
        [0, 1, 1.2 + 1j, 0.2 + 1j],
        [0, 2, 1.5 + 1.2j, 0.4 + 1.2j],
        [0, 1, 1 + 0.6j, 0.3 + 0.6j],
        [0, 2, 2 + 2j, 0.5 + 2j],
        [0, 2, 2.6 + 1j, 0.6 + 1j],
        [0, 1.5, 1.9 + 0.8j, -0.4 + 0.8j],
        [0, 3, 2.5 + 0.7j, 0.2 + 0.7j],
    ]
    for v in shapes:
        # sides 1 (x4 -> x1) and 3 (x2 -> x3) are the horizontal pair after relabelling
        maps.append(solve_prevertex(quad_from_vertices(np.roll(v, -1)), frame=0))
    for m in maps:
        a = m.target.alpha
        assert abs(a[2] + a[3] - 1) < 1e-12
    return maps


def annulus_grid(xi, n_r=20, n_th=10):
    r = np.exp(np.linspace(math.log(xi), 0.0, n_r + 2)[1:-1])
    th = np.linspace(0, np.pi, n_th)
    return (r[:, None] * np.exp(1j * th[None, :])).ravel()


# ---------------------------------------------------------------- sc_integral

def test_flat_integrand_is_identity():
    z = 0.37 + 0.81j
    assert_allclose(sc_integral([1, 1, 1, 1], 0.4, 0.0, z), z, rtol=1e-14)


def test_square_sides_symmetric():
    a = sc_integral([0.5] * 4, 0.5, 0.0, 0.5)
    b = sc_integral([0.5] * 4, 0.5, 0.5, 1.0)
    assert_allclose(abs(a) / abs(b), 1.0, rtol=1e-13)


def test_elliptic_side_lengths():
    xi = 0.3
    a = abs(sc_integral([0.5] * 4, xi, 0.0, xi))
    b = abs(sc_integral([0.5] * 4, xi, xi, 1.0))
    assert_allclose(a, 2 * float(mp.ellipk(xi)), rtol=1e-9)
    assert_allclose(b, 2 * float(mp.ellipk(1 - xi)), rtol=1e-9)


def test_sc_integral_rejects_lower_half_plane():
    with pytest.raises(DomainError):
        sc_integral([0.5] * 4, 0.3, 0.0, 0.2 - 0.1j)


def test_side_ratio_square_root():
    assert abs(side_ratio_residual([0.5] * 4, 0.5, 1.0)) < 1e-10


def test_side_ratio_parallelogram_closed_form():
    th, xi = 0.05, 0.4
    exps = [th, 1 - th, th, 1 - th]
    ratio = side_ratio_residual(exps, xi, 0.0)
    f_xi, f_one = hyp2f1(1 - th, th, 1.0, xi), hyp2f1(th, 1 - th, 1.0, 1 - xi)
    assert_allclose(ratio, f_one / f_xi, rtol=1e-8)
    # cos-weighted form with theta2 - theta1 = pi th
    t1, t2 = -0.3, -0.3 + math.pi * th
    lhs = math.cos(t2) * f_xi - math.cos(t1) * f_one
    assert_allclose(lhs, f_xi * (math.cos(t2) - math.cos(t1) * ratio), rtol=1e-8, atol=1e-12)


def test_side_ratio_monotone_in_prevertex():
    xs = np.linspace(0.01, 0.99, 15)
    for q in random_convex_quads(50, seed=7):
        r = [side_ratio_residual(q.alpha, x, 1.0) for x in xs]
        assert np.all(np.diff(r) < 0)


# ---------------------------------------------------------------- solver

def test_square_prevertex_is_half():
    m = solve_prevertex(SQUARE)
    assert_allclose(m.z4, 0.5, atol=1e-12)


def test_bracket_failure():
    with pytest.raises(SolverError, match="bracket"):
        _find_root(lambda s: 1.0)


def test_prevertex_images(tree_b):
    for target in (SQUARE, intersections(tree_b, 0.3), intersections(tree_b, 0.01)):
        m = solve_prevertex(target)
        v = target.vertices
        assert evaluate(m, 0.0) == v[2]
        got = evaluate(m, np.array([1.0, 0.0, m.z4]))
        assert_allclose(got, v[[0, 2, 3]], atol=1e-8 * target.diameter)
        assert evaluate(m, complex(math.inf, 0)) == v[1]


def test_frame_one_prevertex_images(tree_c):
    target = intersections(tree_c, 0.02)
    m = solve_prevertex(target)
    assert m.frame == 1 and m.log_one_minus_z4 < -100
    assert_allclose(evaluate(m, np.array([0.0, 1.0, 0.5])),
                    [target.vertices[2], target.vertices[0], evaluate(m, 0.5)])
    assert_allclose(evaluate_rescaled(m, 1.0), target.vertices[3], atol=1e-8 * target.diameter)


def test_series_and_integral_agree_at_half_prevertex(tree_b):
    for target in (SQUARE, intersections(tree_b, 0.5), quad_from_vertices([0, 2, 2.5 + 1.5j, 0.3 + 1.1j])):
        m = solve_prevertex(target)
        xi = m.z4
        z = np.array([xi / 2, xi / 2 + 0.1j * xi, 1 + 0.3 * (1 - xi) * np.exp(0.4j), 40 + 30j])
        assert_allclose(evaluate(m, z, "series"), evaluate(m, z, "integral"), atol=1e-8 * target.diameter)
        assert all("series" in dispatch_region(m, p, "series") for p in z)


def test_forced_series_outside_its_domain():
    m = solve_prevertex(quad_from_vertices([0, 2, 2.5 + 1.5j, 0.3 + 1.1j]))
    with pytest.raises(DomainError, match="series"):
        evaluate(m, 0.5 + 0.8j, "series")
    with pytest.raises(DomainError, match="series"):
        dispatch_region(m, 0.5 + 0.8j, "series")


def test_methods_agree_in_two_scale_mode(tree_b):
    m = solve_prevertex(intersections(tree_b, 0.05))
    assert m.z4 < 1 / 64
    s = np.array([0.2 + 0.1j, 1.2 + 0.1j, 0.7 + 0.0j])
    assert_allclose(evaluate_rescaled(m, s, "series"), evaluate_rescaled(m, s, "integral"), atol=1e-9)
    z = np.array([0.01 + 0.02j, 0.1 + 0.1j, 1 + 0.05j])
    assert_allclose(evaluate(m, z, "series"), evaluate(m, z, "integral"), atol=1e-9)
    assert_allclose(evaluate(m, z, "auto"), evaluate(m, z, "integral"), atol=1e-9)


def test_lower_half_plane_rejected():
    m = solve_prevertex(SQUARE)
    with pytest.raises(DomainError):
        evaluate(m, 0.3 - 0.1j)


def test_dispatch_labels():
    m = solve_prevertex(SQUARE)
    assert dispatch_region(m, 0.3 + 0.4j, "integral") == "quadrature"
    assert "series" in dispatch_region(m, 0.05 + 0.01j)


def test_turning_angles_square_and_trapezoid():
    for target in (SQUARE, quad_from_vertices([0, 3, 2 + 1j, 0.5 + 1j])):
        m = solve_prevertex(target)
        r = 1e-3 * min(m.z4, 1 - m.z4)
        for k in range(1, 5):
            assert abs(interior_turn(m, k, r) - math.pi * target.alpha[k - 1]) < 1e-4


def test_boundary_maps_to_sides(tree_b):
    for target in (quad_from_vertices([0, 2, 2.5 + 1.5j, 0.3 + 1.1j]), intersections(tree_b, 0.2)):
        m = solve_prevertex(target)
        v = target.vertices
        intervals = {1: (m.z4, 1.0), 2: (1.0, 30.0), 3: (-30.0, 0.0), 4: (0.0, m.z4)}
        for side, (lo, hi) in intervals.items():
            x = np.linspace(lo, hi, 13)[1:-1]
            w = evaluate(m, x + 0j)
            p, q = v[side - 2], v[side - 1]
            dist = np.abs(((w - p) * np.conj(q - p)).imag) / abs(q - p)
            assert np.all(dist < 1e-8 * target.diameter)


def test_cauchy_riemann():
    rng = np.random.default_rng(11)
    m = solve_prevertex(quad_from_vertices([0, 2, 2.5 + 1.5j, 0.3 + 1.1j]))
    z = rng.uniform(-2, 3, 50) + 1j * rng.uniform(0.05, 2, 50)
    h = 1e-5
    dx = (evaluate(m, z + h) - evaluate(m, z - h)) / (2 * h)
    dy = (evaluate(m, z + 1j * h) - evaluate(m, z - 1j * h)) / (2 * h)
    assert np.all(np.abs(dx + 1j * dy) / np.abs(dx) < 1e-6)


# ---------------------------------------------------------------- degenerate annulus

def test_annulus_series_on_real_midpoint():
    for m in parallel_maps()[:3]:
        z = complex((m.z4 + 1) / 2, 0.0)
        assert_allclose(annulus_series_degenerate(m, z), evaluate(m, z, "integral"), atol=1e-8)


def test_annulus_series_full_grid():
    for m in parallel_maps():
        z = annulus_grid(m.z4)
        assert_allclose(annulus_series_degenerate(m, z), evaluate(m, z, "integral"),
                        atol=1e-8 * m.target.diameter)


def test_annulus_series_stable_under_more_terms():
    m = parallel_maps()[1]
    z = math.sqrt(m.z4) * np.exp(1j * np.linspace(0, np.pi, 7))
    a = annulus_series_degenerate(m, z, config=SeriesConfig(rel_tol=1e-16, max_terms=2500))
    b = annulus_series_degenerate(m, z, config=SeriesConfig(rel_tol=1e-16, max_terms=5000))
    assert_allclose(a, b, rtol=1e-10)


def test_rescaled_annulus_matches_rescaled_evaluation():
    for m in parallel_maps()[:3]:
        zp = np.exp(np.linspace(0, -math.log(m.z4), 7)[1:-1])[:, None] * np.exp(1j * np.linspace(0, np.pi, 5))
        zp = zp.ravel()
        assert_allclose(annulus_series_degenerate(m, zp, rescaled=True), evaluate_rescaled(m, zp, "integral"),
                        atol=1e-8)


def test_annulus_domain_errors(tree_b):
    m = parallel_maps()[0]
    with pytest.raises(DomainError):
        annulus_series_degenerate(m, 1.5 + 0.1j)
    generic = solve_prevertex(quad_from_vertices([0, 2, 2.5 + 1.5j, 0.3 + 1.1j]))
    with pytest.raises(DomainError):
        annulus_series_degenerate(generic, 0.5 + 0.1j)


def test_rescaled_consistency(tree_b, parallelogram):
    for s, eps in ((tree_b, 0.1), (tree_b, 0.02), (parallelogram, 0.1)):
        m = solve_prevertex(intersections(s, eps))
        sp = np.array([0.4 + 0.3j, 2.0 + 0.5j, 0.9 + 0.0j, 1.5j])
        with np.errstate(under="ignore"):
            z = m.z4 * sp
        if np.all(np.abs(z) > 0):
            assert_allclose(evaluate(m, z), evaluate_rescaled(m, sp), atol=1e-8)
