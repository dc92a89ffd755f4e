"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import math
import time
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest

from holoquad.config import load_config
from holoquad.geometry import intersections, quad_from_vertices
from holoquad.gradtree import build_tree
from holoquad.harness import boundary_collision_check, epsilon_sweep, log_spaced, prevertex_record
from holoquad.modulus import modulus_of_quad, modulus_with_marked_point
from holoquad.scmap import annulus_series_degenerate, evaluate, evaluate_rescaled, solve_prevertex
from holoquad.specfun import (
    appell_f1_integral, appell_f1_series, gamma, hyp2f1, hyp2f1_integral, hyp2f1_log_at_infinity,
    hyp2f1_log_at_one, hyp2f1_series,
)

from .strategies import interior_turn, random_convex_quads
from .test_scmap import annulus_grid, parallel_maps

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
GRID9 = log_spaced(1e-1, 1e-3, 9)


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail, elapsed, budget=None):
        within = budget is None or elapsed < budget
        status = "PASS" if ok and within else "FAIL"
        limit = f" (budget {budget:g} s)" if budget else ""
        with capsys.disabled():
            print(f"\n{status} criterion {number} {title}: {detail}; {elapsed:.1f} s{limit}")
        assert ok, detail
        assert within, f"took {elapsed:.1f} s, budget {budget} s"
    return emit


def _config(name):
    cfg = load_config(CONFIGS / f"{name}.cfg")
    return cfg, cfg.sections()


def _rel(a, b):
    return abs(a - b) / abs(b)


def test_specfun_oracles(report):
    t0 = time.perf_counter()
    worst = {}
    vals = np.round(np.arange(0.1, 1.0, 0.1), 1)
    worst["2F1 series/Euler"] = max(
        _rel(hyp2f1_series(a, b, b + dc, x), hyp2f1_integral(a, b, b + dc, x))
        for a in vals for b in vals for dc in (0.5, 1.0) for x in np.round(np.arange(0.1, 0.8, 0.1), 1))
    worst["F1 series/integral"] = max(
        _rel(appell_f1_series(a, b1, b2, c, x, y), appell_f1_integral(a, b1, b2, c, x, y))
        for a, b1, b2, c in [(0.5, 0.25, 0.75, 1.5), (0.3, 0.6, 0.2, 1.4), (1.2, 0.4, 0.5, 2.5)]
        for x, y in [(0.3, 0.2), (0.5, -0.4), (-0.6, 0.45), (0.1, 0.1)])
    # log-at-infinity: Pfaff transform for m = l = 0, Euler quadrature otherwise
    a, z = 0.25, -3.0
    pfaff = (1 - z) ** -a * hyp2f1(a, 1.0, a + 1, z / (z - 1)) * gamma(a) / gamma(a + 1)
    errs = [_rel(hyp2f1_log_at_infinity(a, 0, 0, z), pfaff)]
    for z in (-2.0, -5.0, -40.0):
        quad = float(mp.quad(lambda u: 4 * (1 - u ** 4) ** 3 * (1 - z * u ** 4) ** -2.25, [0, 1])
                     / mp.beta(0.25, 4.0)) * gamma(2.25) / gamma(4.25)
        errs.append(_rel(hyp2f1_log_at_infinity(0.25, 2, 1, z), quad))
    worst["log at infinity vs Pfaff/quadrature"] = max(errs)
    worst["log at one vs series overlap"] = max(
        _rel(hyp2f1_log_at_one(a, b, m, z), hyp2f1(a, b, a + b + m, z))
        for a, b, m in [(0.3, 0.4, 0), (0.3, 0.4, 1), (0.7, 0.25, 3), (1.5, 0.5, 2)]
        for z in np.linspace(0.55, 0.8, 6))
    tol = {"2F1 series/Euler": 1e-10, "F1 series/integral": 1e-10,
           "log at infinity vs Pfaff/quadrature": 1e-9, "log at one vs series overlap": 1e-9}
    ok = all(worst[k] <= tol[k] for k in tol)
    detail = ", ".join(f"{k} {worst[k]:.1e} (tol {tol[k]:.0e})" for k in tol)
    report(1, "special-function oracles", ok, detail, time.perf_counter() - t0, 30)


def test_sc_fidelity(report):
    t0 = time.perf_counter()
    v_err, a_err = 0.0, 0.0
    for q in random_convex_quads(50, seed=2024):
        m = solve_prevertex(q)
        # x4 through the rescaled chart: the float z4 is off the true prevertex by
        # up to one ulp, which near z4 -> 1 alone moves w by ~1e-8
        w = np.array([evaluate(m, 1.0), evaluate(m, complex(math.inf, 0)), evaluate(m, 0.0),
                      evaluate_rescaled(m, 1.0)])
        v_err = max(v_err, float(np.max(np.abs(w - q.vertices))) / q.diameter)
        r = 1e-3 * min(m.z4, 1 - m.z4)
        for k in range(1, 5):
            a_err = max(a_err, abs(interior_turn(m, k, r) - math.pi * q.alpha[k - 1]))
    ok = v_err <= 1e-8 and a_err <= 1e-4
    report(2, "SC fidelity on 50 quadrilaterals", ok,
           f"vertex error {v_err:.1e} diam (tol 1e-8), angle error {a_err:.1e} (tol 1e-4)",
           time.perf_counter() - t0, 120)


def test_degenerate_annulus_series(report):
    t0 = time.perf_counter()
    maps = parallel_maps()
    worst = 0.0
    for m in maps:
        z = annulus_grid(m.z4)
        diff = np.abs(annulus_series_degenerate(m, z) - evaluate(m, z, "integral"))
        worst = max(worst, float(diff.max()) / m.target.diameter)
    ok = len(maps) == 10 and worst <= 1e-8
    report(3, "annulus series vs integral", ok, f"{len(maps)} maps, 20x10 grid, max error {worst:.1e} diam "
           "(tol 1e-8)", time.perf_counter() - t0, 60)


def test_modulus_anchors(report):
    t0 = time.perf_counter()
    sq = modulus_of_quad(quad_from_vertices([0, 1, 1 + 1j, 1j])).M
    recip, bracket = 0.0, True
    for q in random_convex_quads(50, seed=77):
        r0, r1 = modulus_of_quad(q, 0), modulus_of_quad(q, 1)
        recip = max(recip, abs(r0.M * r1.M - 1))
        bracket &= all(r.rengel_lo <= r.M <= r.rengel_hi for r in (r0, r1))
    quad = [0, 2, 2.5 + 1.5j, 0.3 + 1.1j]
    g = quad_from_vertices(quad)
    a, b, c, d = (complex(v) for v in quad)
    base = modulus_of_quad(g).M
    toward_d = [modulus_with_marked_point(g, d + t * (a - d), replaces=1) for t in (0.9, 0.7, 0.5, 0.3)]
    grown = [modulus_of_quad(quad_from_vertices([a, b, b + s * (c - b), a + s * (d - a)])).M
             for s in (1.0, 1.2, 1.4, 1.8)]
    wedge = [modulus_of_quad(quad_from_vertices([ap, b, c, d])).M
             for ap in (a + 0.3 * (a - d), a + 0.2 * (a - d) + 0.1 * (b - a))]
    mono = (base > toward_d[0] and np.all(np.diff(toward_d) < 0) and np.all(np.diff(grown) > 0)
            and all(M > base for M in wedge))
    ok = abs(sq - 1) <= 1e-10 and recip <= 1e-8 and bracket and mono
    report(4, "modulus anchors", ok, f"|M(square) - 1| {abs(sq - 1):.1e}, reciprocity {recip:.1e}, "
           f"bracket {bracket}, monotonicity {bool(mono)}", time.perf_counter() - t0)


def test_parallel_families_converge(report):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name in ("parallelogram", "sheared"):
        _, sections = _config(name)
        recs = epsilon_sweep(sections, GRID9, with_errors=False)
        gap = [abs(r.z4 - 0.5) for r in recs]
        dm = [abs(r.modulus - 1) for r in recs]
        good = bool(np.all(np.diff(gap) < 0)) and dm[-1] < 0.1 * dm[0]
        ok &= good
        parts.append(f"{name}: |z4 - 1/2| {gap[0]:.3g} -> {gap[-1]:.3g}, |M - 1| {dm[0]:.3g} -> {dm[-1]:.3g}")
    report(5, "z4 -> 1/2 for parallel families", ok, "; ".join(parts), time.perf_counter() - t0, 120)


def test_internal_length_estimate(report):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name, use in (("tree_b", "log z4"), ("tree_c", "log(1 - z4)")):
        _, sections = _config(name)
        ell = build_tree(sections).internal_length
        est = prevertex_record(sections, 1e-3).l_estimate
        rel = abs(est - ell) / ell
        ok &= rel < 0.05
        parts.append(f"{name} via {use}: {est:.6f} vs l = {ell:g} ({100 * rel:.3f}%)")
    report(6, "internal edge length", ok, "; ".join(parts) + " (tol 5%)", time.perf_counter() - t0, 60)


def test_region_errors_converge(report):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name in ("tree_b", "tree_c", "parallelogram"):
        cfg, sections = _config(name)
        recs = epsilon_sweep(sections, GRID9, delta=cfg.delta, grid_n=cfg.grid)
        final = max(recs[-1].sup_errors.values())
        tails = {k: [r.sup_errors[k] for r in recs[-3:]] for k in recs[0].sup_errors}
        dec = all(t[0] > t[1] > t[2] for t in tails.values())
        ok &= dec and final < 0.1
        parts.append(f"{name} (case {recs[0].case:+d}): tails decreasing {dec}, final max {final:.2e}")
    report(7, "region sup-errors", ok, "; ".join(parts) + " (tol 0.1)", time.perf_counter() - t0, 300)


def test_boundary_collision(report):
    t0 = time.perf_counter()
    parts = []
    for name in ("tree_b", "tree_c", "parallelogram"):
        cfg, sections = _config(name)
        rep = boundary_collision_check(sections, cfg.epsilons)
        parts.append((name, rep.status, rep.target))
    ok = all(s == "match" for _, s, _ in parts)
    report(8, "boundary collision", ok, ", ".join(f"{n}: {s} ({t})" for n, s, t in parts),
           time.perf_counter() - t0)
