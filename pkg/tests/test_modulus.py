import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from holoquad.errors import DomainError
from holoquad.geometry import AffineSections, intersections, quad_from_vertices
from holoquad.modulus import (
    cross_ratio_prevertex, modulus_from_log_prevertex, modulus_from_prevertex, modulus_of_quad,
    modulus_with_marked_point, parallelogram_prevertex, parallelogram_prevertex_equation, rengel_bounds,
)
from holoquad.scmap import sc_integral, solve_prevertex

from .strategies import random_convex_quads

QUAD = [0, 2, 2.5 + 1.5j, 0.3 + 1.1j]


def test_prevertex_half_is_one():
    assert modulus_from_prevertex(0.5) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("xi", np.round(np.arange(0.1, 1.0, 0.1), 1))
def test_prevertex_reciprocity(xi):
    assert_allclose(modulus_from_prevertex(xi) * modulus_from_prevertex(1 - xi), 1.0, rtol=1e-13)


def test_prevertex_matches_rectangle_map():
    xi = 0.3
    short = abs(sc_integral([0.5] * 4, xi, 0.0, xi))
    long_ = abs(sc_integral([0.5] * 4, xi, xi, 1.0))
    assert_allclose(modulus_from_prevertex(xi), long_ / short, rtol=1e-8)
    assert_allclose(modulus_from_prevertex(xi), float(mp.ellipk(1 - xi) / mp.ellipk(xi)), rtol=1e-13)


@given(st.floats(1e-12, 1 - 1e-12))
def test_prevertex_modulus_decreasing(xi):
    lo, hi = xi * 0.999, min(xi * 1.001, 1 - 1e-13)
    if hi > lo:
        assert modulus_from_prevertex(lo) >= modulus_from_prevertex(hi)


def test_prevertex_domain():
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            modulus_from_prevertex(bad)


def test_underflowed_prevertex():
    # xi = exp(-800): M grows like log(16 / xi) / pi
    M = modulus_from_log_prevertex(-800.0, -0.0)
    assert_allclose(M, (800 + math.log(16)) / math.pi, rtol=1e-12)


def test_square_and_rectangle_anchors():
    sq = modulus_of_quad(quad_from_vertices([0, 1, 1 + 1j, 1j]))
    assert sq.M == pytest.approx(1.0, abs=1e-10)
    assert (sq.rengel_lo, sq.rengel_hi) == pytest.approx((1.0, 1.0), abs=1e-14)
    rect = quad_from_vertices([0, 1, 1 + 2j, 2j])
    r0 = modulus_of_quad(rect)
    assert r0.M == pytest.approx(2.0, abs=1e-8)
    assert (r0.rengel_lo, r0.rengel_hi) == pytest.approx((2.0, 2.0), abs=1e-12)
    assert modulus_of_quad(rect, rotation=1).M == pytest.approx(0.5, abs=1e-8)


def test_reciprocity_and_bracket_on_random_quads():
    for q in random_convex_quads(50, seed=21):
        r0, r1 = modulus_of_quad(q, 0), modulus_of_quad(q, 1)
        assert_allclose(r0.M * r1.M, 1.0, rtol=1e-8)
        for r in (r0, r1):
            assert r.rengel_lo <= r.M <= r.rengel_hi


def test_reciprocity_for_every_rotation():
    q = quad_from_vertices(QUAD)
    Ms = [modulus_of_quad(q, r).M for r in range(4)]
    assert_allclose([Ms[0] * Ms[1], Ms[1] * Ms[2], Ms[2] * Ms[3]], 1.0, rtol=1e-8)


def test_rengel_for_sheared_family(sheared):
    for eps in (0.5, 0.1, 0.01):
        g = intersections(sheared, eps)
        r = modulus_of_quad(g)
        assert r.rengel_lo <= r.M <= r.rengel_hi
        assert rengel_bounds(g) == (r.rengel_lo, r.rengel_hi)


# ---------------------------------------------------------------- parallelogram oracle

def test_parallelogram_symmetric_root():
    assert parallelogram_prevertex(-0.4, 0.4) == pytest.approx(0.5, abs=1e-13)


def test_parallelogram_root_matches_solver(parallelogram):
    eps = 0.05
    z4 = solve_prevertex(intersections(parallelogram, eps)).z4
    root = parallelogram_prevertex(math.atan(0 * eps), math.atan(1 * eps))
    assert root == pytest.approx(z4, abs=1e-8)


def test_parallelogram_roots_approach_half():
    eps = [0.2, 0.1, 0.05, 0.02]
    below = [parallelogram_prevertex(-math.atan(e), 0.0) for e in eps]
    above = [parallelogram_prevertex(0.0, math.atan(e)) for e in eps]
    assert np.all(np.diff(below) > 0) and below[-1] < 0.5
    assert np.all(np.diff(above) < 0) and above[-1] > 0.5
    # the modulus of the solved family rises toward 1
    M = [modulus_from_prevertex(x) for x in above]
    assert np.all(np.diff(M) > 0) and M[-1] < 1


def test_parallelogram_equation_domain():
    with pytest.raises(DomainError):
        parallelogram_prevertex_equation(0.0, 2.0, 0.5)


# ---------------------------------------------------------------- monotonicity

def test_moving_a_toward_d_decreases_modulus():
    q = quad_from_vertices(QUAD)
    a, d = q.vertices[0], q.vertices[3]
    Ms = [modulus_with_marked_point(q, d + t * (a - d), replaces=1) for t in (0.9, 0.7, 0.5, 0.3)]
    assert np.all(np.diff(Ms) < 0)
    assert modulus_of_quad(q).M > Ms[0]


def test_moving_d_toward_a_decreases_reciprocal_modulus():
    # with d as the moving point the roles flip: the (d, a) arc shrinks, so M drops
    q = quad_from_vertices(QUAD)
    a, d = q.vertices[0], q.vertices[3]
    Ms = [modulus_with_marked_point(q, d + t * (a - d), replaces=4) for t in (0.1, 0.3, 0.5, 0.7)]
    assert np.all(np.diff(Ms) < 0)


def test_enlarging_between_shared_sides_increases_modulus():
    a, b, c, d = QUAD
    base = modulus_of_quad(quad_from_vertices(QUAD)).M
    prev = base
    for s in (1.2, 1.4, 1.8):
        big = quad_from_vertices([a, b, b + s * (c - b), a + s * (d - a)])
        M = modulus_of_quad(big).M
        assert M > prev
        prev = M


def test_displaced_vertex_in_wedge_increases_modulus():
    a, b, c, d = (complex(v) for v in QUAD)
    base = modulus_of_quad(quad_from_vertices(QUAD)).M
    for ap in (a + 0.3 * (a - d), a + 0.2 * (a - d) + 0.1 * (b - a), 0.5 * (a + b) - 0.1j):
        assert modulus_of_quad(quad_from_vertices([ap, b, c, d])).M > base


def test_cross_ratio_handles_infinity():
    assert cross_ratio_prevertex(1.0, math.inf, 0.0, 0.25) == pytest.approx(0.25)
    assert cross_ratio_prevertex(2.0, 3.0, math.inf, 1.0) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        cross_ratio_prevertex(1.0, math.inf, 0.0, 2.0)


def test_marked_point_rejects_other_corners():
    with pytest.raises(DomainError):
        modulus_with_marked_point(quad_from_vertices(QUAD), 1.0, replaces=2)


@pytest.mark.parametrize("family", ["parallelogram", "parallelogram_24", "sheared"])
def test_modulus_limit_trend(family, request):
    s = request.getfixturevalue(family)
    Ms = [modulus_of_quad(intersections(s, e)).M for e in (1e-1, 1e-2, 1e-3)]
    gaps = np.abs(np.array(Ms) - 1)
    assert np.all(np.diff(gaps) < 0)
