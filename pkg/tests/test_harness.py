import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from holoquad import harness
from holoquad.errors import DomainError
from holoquad.geometry import AffineSections
from holoquad.gradtree import build_tree
from holoquad.harness import (
    SweepRecord, _setup, boundary_collision_check, decompose, epsilon_sweep, log_spaced, phi_ext,
    phi_ext_log, phi_int, prevertex_record, sup_error_report,
)
from holoquad.scmap import evaluate, evaluate_rescaled


def test_phi_ext_examples():
    d = 0.2
    assert phi_ext(0.0, d, 0.0, 0.0) == pytest.approx(d)
    tau = -0.7
    assert_allclose(phi_ext(0.0, d, tau, 1.0), -d * math.exp(math.pi * tau), atol=1e-16)
    assert phi_ext(math.inf, d, 0.0, 0.0) == pytest.approx(-1 / d)


def test_phi_ext_log_matches_offsets():
    tau, sig = np.meshgrid(np.linspace(-2, 0, 5), np.linspace(0, 1, 4))
    assert_allclose(np.exp(phi_ext_log(0.2, tau, sig)), phi_ext(0.0, 0.2, tau, sig), rtol=1e-14)
    # the outer chart stores log(1/z)
    assert_allclose(np.exp(-phi_ext_log(0.2, tau, sig, at_infinity=True)),
                    phi_ext(math.inf, 0.2, tau, sig), rtol=1e-14)
    assert np.all(phi_ext_log(0.2, tau, sig, at_infinity=True).imag <= 0)


def test_phi_int_examples(tree_b):
    dec = decompose(_setup(tree_b, 0.1), 0.2)
    lo, hi = dec.tau_int
    assert lo < hi
    assert phi_int(lo, 1.0, dec) == pytest.approx(0.2)
    assert phi_int(-math.log(dec.z4 / 0.2) / math.pi, 1.0) == pytest.approx(dec.z4 / 0.2, rel=1e-12)
    w = phi_int(0.5 * (lo + hi), 0.0, dec)
    assert w.real < 0 and abs(w.imag) < 1e-12 * abs(w)
    with pytest.raises(DomainError, match="strip"):
        phi_int(hi + 1.0, 0.5, dec)


def test_zero_case_has_no_internal_strip(parallelogram):
    dec = decompose(_setup(parallelogram, 0.1), 0.15)
    with pytest.raises(DomainError):
        dec.tau_int


def _coverage(dec, n, seed):
    rng = np.random.default_rng(seed)
    lo = min(dec.log_z4, math.log(1e-3)) - 3
    r = np.exp(rng.uniform(lo, 7, n))
    th = rng.uniform(0, np.pi, n)
    pts = list(r * np.exp(1j * th))
    # points placed on region boundaries
    d, xi = dec.delta, dec.z4
    for t in np.linspace(0.1, 3.0, 6):
        pts += [1 + d * np.exp(1j * t), np.exp(1j * t) / d]
        pts += [d * np.exp(1j * t)] if dec.case != 0 else [xi + d * np.exp(1j * t)]
    for z in pts:
        m = dec.membership(z)
        inside = sum(v == 2 for v in m.values())
        edge = sum(v == 1 for v in m.values())
        assert (inside == 1 and edge == 0) or (inside == 0 and edge >= 2), (z, m)


def test_region_coverage_nonzero(tree_b):
    _coverage(decompose(_setup(tree_b, 0.3), 0.2), 10_000, 0)


def test_region_coverage_zero(parallelogram):
    _coverage(decompose(_setup(parallelogram, 0.1), 0.15), 10_000, 1)


def test_membership_rejects_lower_half_plane(tree_b):
    dec = decompose(_setup(tree_b, 0.3), 0.2)
    with pytest.raises(DomainError):
        dec.membership(0.3 - 0.1j)


def test_overlapping_discs_rejected(parallelogram):
    with pytest.raises(DomainError, match="overlap"):
        decompose(_setup(parallelogram, 0.1), 0.3)


def test_epsilon_floor(tree_b):
    with pytest.raises(DomainError):
        prevertex_record(tree_b, 1e-7)


def test_record_invariants():
    good = dict(epsilon=0.1, z4=0.5, log_z4=math.log(0.5), log_one_minus_z4=math.log(0.5),
                modulus=1.0, l_estimate=0.02, case=0)
    SweepRecord(sup_errors={"e1": 0.1}, **good)
    with pytest.raises(DomainError):
        SweepRecord(sup_errors={"e1": -0.1}, **good)
    with pytest.raises(DomainError):
        SweepRecord(sup_errors={"e1": math.nan}, **good)


def test_rescaled_consistency_in_setups(tree_b, tree_c):
    for s in (tree_b, tree_c):
        m = _setup(s, 0.2).map
        sp = np.array([0.3 + 0.4j, 1.7 + 0.2j, 3 + 0j])
        assert_allclose(evaluate(m, m.z4 * sp), evaluate_rescaled(m, sp), atol=1e-8)


def test_tree_b_sups_decrease(tree_b):
    a = sup_error_report(tree_b, 0.1, delta=0.2, check_grid=False)
    b = sup_error_report(tree_b, 0.01, delta=0.2, check_grid=False)
    assert set(a.sup_errors) == {"e1", "e2", "e3", "e4", "int", "vertex", "vertex_s"}
    for k in a.sup_errors:
        assert b.sup_errors[k] < a.sup_errors[k]


def test_parallelogram_sups_decrease(parallelogram):
    recs = epsilon_sweep(parallelogram, [0.1, 0.03, 0.01])
    assert set(recs[0].sup_errors) == {"e1", "e2", "e3", "e4", "rest"}
    for k in recs[0].sup_errors:
        seq = [r.sup_errors[k] for r in recs]
        assert np.all(np.diff(seq) < 0)


@pytest.mark.parametrize("family", ["tree_b", "tree_c"])
def test_sup_errors_eventually_decrease(family, request):
    recs = epsilon_sweep(request.getfixturevalue(family), [1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
    for k in recs[0].sup_errors:
        seq = [r.sup_errors[k] for r in recs]
        assert seq[-1] < seq[-2] < seq[-3]


def test_vertex_images_close_to_abscissas(tree_b):
    # w(z_i) = x_i and |x_i - p_i| = |q_i| = O(eps)
    for eps in (0.1, 0.01):
        s = _setup(tree_b, eps)
        v = s.map.target.vertices
        got = evaluate(s.map, np.array([1.0, 0.0]))
        assert_allclose(got, v[[0, 2]], atol=1e-8)
        assert np.all(np.abs(v.imag) <= 3 * eps)


def test_prevertex_trends(tree_b, tree_c, parallelogram):
    eps = log_spaced()
    b = epsilon_sweep(tree_b, eps, with_errors=False)
    assert np.all(np.diff([r.log_z4 for r in b]) < 0)
    c = epsilon_sweep(tree_c, eps, with_errors=False)
    assert np.all(np.diff([r.log_one_minus_z4 for r in c]) < 0)
    p = epsilon_sweep(parallelogram, eps, with_errors=False)
    assert np.all(np.diff([abs(r.z4 - 0.5) for r in p]) < 0)


@pytest.mark.parametrize("family", ["tree_b", "tree_c"])
def test_length_estimates(family, request):
    s = request.getfixturevalue(family)
    ell = build_tree(s).internal_length
    r2, r3 = (prevertex_record(s, e) for e in (1e-2, 1e-3))
    assert abs(r2.l_estimate - ell) < 0.2 * ell
    assert abs(r3.l_estimate - ell) < 0.05 * ell


def test_length_estimate_with_exponential_flow():
    # internal edge with a3 != a1: the flow is exponential, l from the log formula
    s = AffineSections((0, -1, 0.5, 2), (0, -1, -1.3, -3))
    ell = build_tree(s).internal_length
    r = prevertex_record(s, 1e-3)
    assert abs(r.l_estimate - ell) < 0.05 * ell


@pytest.mark.parametrize("family, target", [("tree_b", "z3"), ("tree_c", "z1"), ("parallelogram", "half"),
                                            ("parallelogram_24", "half"), ("sheared", "half")])
def test_collision_matches(family, target, request):
    rep = boundary_collision_check(request.getfixturevalue(family))
    assert (rep.status, rep.target) == ("match", target)


def test_collision_inconclusive_on_short_sweep(tree_b):
    assert boundary_collision_check(tree_b, [0.1, 0.05]).status == "inconclusive"


def test_grid_warning(monkeypatch, tree_b):
    monkeypatch.setattr(harness, "GRID_TOLERANCE", -1.0)
    with pytest.warns(RuntimeWarning, match="grid"):
        rec = sup_error_report(tree_b, 0.1, grid_n=(8, 3))
    assert rec.grid_warning
