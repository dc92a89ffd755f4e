"""Sweeps in eps comparing the holomorphic quadrilateral map with its gradient tree.

Vocabulary
----------
* The *working frame* is the labelling in which the collapsing prevertex (if
  any) sits at 0.  For a negative degenerate axis the sections are relabelled
  by one step (x'_j = x_{j+1}); this is the same map as the Moebius frame of
  :mod:`holoquad.scmap` and keeps every chart below in one coordinate system.
* External region i is a half disc around the prevertex of vertex i,
  parametrised by the strip (tau, sigma) in (-inf, 0] x [0, 1].  Near 0 and
  xi in the nonzero case the discs are taken in the rescaled variable
  s = z / xi.
* Vertex regions are compact; since w - p0 is holomorphic there, the sup of
  |w - p0| is attained on the boundary, which is what gets sampled.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .geometry import AffineSections, intersections
from .gradtree import JUNCTIONS, GradientTree, build_tree
from .modulus import modulus_from_log_prevertex
from .scmap import SCQuadMap, solve_prevertex

DEFAULT_DELTA = {1: 0.2, -1: 0.2, 0: 0.15}
DEFAULT_GRID = (64, 17)
# external strips cover eps * tau in [-EXT_SPAN / |da|_min, 0]
EXT_SPAN = 8.0
GRID_TOLERANCE = 0.10
EPS_FLOOR = 1e-6


def phi_ext(p, delta: float, tau, sigma):
    """Strip coordinates to the half disc around ``p`` (``p = inf`` for the outer disc).

    ``p + delta exp(pi (tau + i sigma))``, or ``-exp(-pi (tau + i sigma)) / delta``
    around infinity.
    """
    tau = np.asarray(tau, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    e = np.pi * (tau + 1j * sigma)
    if p is None or (isinstance(p, float) and math.isinf(p)):
        return -np.exp(-e) / delta
    return p + delta * np.exp(e)


def phi_ext_log(delta: float, tau, sigma, at_infinity: bool = False):
    """Logarithm of the chart offset behind :func:`phi_ext`.

    Finite centres use offset ``t = z - p``; the outer disc uses ``t = 1 / z``,
    whose logarithm lies in the lower half plane.
    """
    tau = np.asarray(tau, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if at_infinity:
        return math.log(delta) + np.pi * tau + 1j * np.pi * (sigma - 1.0)
    return math.log(delta) + np.pi * (tau + 1j * sigma)


def phi_int(tau, sigma, decomposition: "RegionDecomposition | None" = None):
    """Internal strip to the annulus: ``exp(-pi tau + i pi (1 - sigma))``.

    With a decomposition, points outside its strip bounds raise DomainError.
    """
    tau = np.asarray(tau, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if decomposition is not None:
        lo, hi = decomposition.tau_int
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(tau < lo - slack) or np.any(tau > hi + slack) or np.any((sigma < 0) | (sigma > 1)):
            raise DomainError("point outside the internal strip")
    return np.exp(-np.pi * tau + 1j * np.pi * (1.0 - sigma))


@dataclass(frozen=True)
class Region:
    label: str
    kind: str          # "ext", "int", "vertex"
    centre: float      # prevertex in z (or in s for rescaled discs); inf for the outer disc
    radius: float      # radius in the coordinate the region is defined in
    rescaled: bool = False


@dataclass(frozen=True)
class RegionDecomposition:
    """Partition of the closed upper half plane used for one eps.

    Labels follow the working frame: ``e1``..``e4`` (external discs), ``int``
    (the annulus of the internal edge, nonzero case), ``vertex`` and
    ``vertex_s`` (the two compact vertex regions in z and in s = z/xi, nonzero
    case) or ``rest`` (the single vertex region, zero case).
    """

    delta: float
    case: int
    log_z4: float
    log_one_minus_z4: float
    regions: tuple = field(default_factory=tuple)

    @property
    def z4(self) -> float:
        return math.exp(self.log_z4)

    @property
    def tau_int(self) -> tuple[float, float]:
        """Strip bounds of the internal edge (nonzero case)."""
        if self.case == 0:
            raise DomainError("the zero case has no internal strip")
        return -math.log(self.delta) / math.pi, (-self.log_z4 + math.log(self.delta)) / math.pi

    def membership(self, z) -> dict:
        """For each region label, 2 if ``z`` is inside, 1 if on its boundary, 0 otherwise."""
        z = complex(z)
        if z.imag < 0:
            raise DomainError("points must lie in the closed upper half plane")
        d, xi = self.delta, self.z4
        rtol = 1e-12

        def cmp(val, bound):
            # 2: strictly less, 1: equal within rounding, 0: greater
            if abs(val - bound) <= rtol * max(abs(bound), 1e-300):
                return 1
            return 2 if val < bound else 0

        def disc(c, r):
            return cmp(abs(z - c), r)

        def outside(c, r):
            v = disc(c, r)
            return {2: 0, 1: 1, 0: 2}[v]

        def both(*parts):
            return min(parts)

        out = {}
        az = abs(z)
        if self.case == 0:
            out["e1"] = disc(1.0, d)
            out["e2"] = 0 if az == 0 else cmp(1.0 / az, d)
            out["e3"] = disc(0.0, d)
            out["e4"] = disc(xi, d)
            out["rest"] = both(outside(1.0, d), outside(0.0, d), outside(xi, d),
                               {2: 0, 1: 1, 0: 2}[out["e2"]])
            return out
        out["e1"] = disc(1.0, d)
        out["e2"] = 0 if az == 0 else cmp(1.0 / az, d)
        out["e3"] = disc(0.0, xi * d)
        out["e4"] = disc(xi, xi * d)
        out["vertex"] = both(outside(0.0, d), outside(1.0, d), {2: 0, 1: 1, 0: 2}[out["e2"]])
        # annulus xi / d < |z| < d
        out["int"] = both(cmp(az, d), outside(0.0, xi / d))
        out["vertex_s"] = both(disc(0.0, xi / d), outside(0.0, xi * d), outside(xi, xi * d))
        return out


@dataclass(frozen=True)
class SweepRecord:
    """One eps of a sweep, reported in the original labelling.

    ``sup_errors`` maps region labels (``e1``..``e4`` by original edge index,
    ``int``, ``vertex``, ``vertex_s``, ``rest``) to the sampled sup error.
    """

    epsilon: float
    z4: float
    log_z4: float
    log_one_minus_z4: float
    modulus: float
    l_estimate: float
    sup_errors: dict
    case: int
    grid_warning: bool = False

    def __post_init__(self):
        vals = [self.epsilon, self.modulus, self.l_estimate, self.log_z4, self.log_one_minus_z4]
        vals += list(self.sup_errors.values())
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("non-finite field in sweep record")
        if any(v < 0 for v in self.sup_errors.values()):
            raise DomainError("negative sup error")

    @property
    def sup_err_vertex(self) -> float:
        keys = [k for k in ("vertex", "vertex_s", "rest") if k in self.sup_errors]
        return max(self.sup_errors[k] for k in keys)


# ------------------------------------------------------------------ setup per eps

@dataclass(frozen=True)
class _Setup:
    case: int
    shift: int               # working index j is original index j + shift
    work_sections: AffineSections
    tree: GradientTree
    map: SCQuadMap


def working_sections(sections: AffineSections, case: int) -> tuple[AffineSections, int]:
    """Relabel so the collapsing prevertex sits at 0 (a one-step shift for case -1)."""
    if case >= 0:
        return sections, 0
    rot = lambda v: tuple(v[1:]) + tuple(v[:1])  # noqa: E731
    return AffineSections(rot(sections.a), rot(sections.b), rot(sections.c)), 1


def _setup(sections: AffineSections, epsilon: float) -> _Setup:
    if not epsilon >= EPS_FLOOR:
        raise DomainError(f"epsilon below the solver floor {EPS_FLOOR:g}")
    case = build_tree(sections).classification.degenerate_axis
    work, shift = working_sections(sections, case)
    tree = build_tree(work)
    target = intersections(work, epsilon)
    m = solve_prevertex(target, frame=0)
    return _Setup(case, shift, work, tree, m)


def decompose(setup: _Setup, delta: float) -> RegionDecomposition:
    m = setup.map
    xi = m.z4
    if setup.case == 0:
        regs = (Region("e1", "ext", 1.0, delta), Region("e2", "ext", math.inf, delta),
                Region("e3", "ext", 0.0, delta), Region("e4", "ext", xi, delta),
                Region("rest", "vertex", math.nan, delta))
        if not (2 * delta < xi and 2 * delta < 1 - xi and delta < 0.5):
            raise DomainError("delta too large: the external discs overlap")
    else:
        regs = (Region("e1", "ext", 1.0, delta), Region("e2", "ext", math.inf, delta),
                Region("e3", "ext", 0.0, delta, True), Region("e4", "ext", 1.0, delta, True),
                Region("int", "int", 0.0, delta), Region("vertex", "vertex", math.nan, delta),
                Region("vertex_s", "vertex", math.nan, delta, True))
        if not delta < 0.5:
            raise DomainError("delta too large: the external discs overlap")
    return RegionDecomposition(delta, setup.case, m.log_z4, m.log_one_minus_z4, regs)


# ------------------------------------------------------------------ sampling

def _flow_at(edge, t):
    """Closed-form position on ``edge`` at times ``t`` (no domain check)."""
    t = np.asarray(t, dtype=float)
    if edge.delta_a == 0:
        return edge.start - edge.delta_b * t
    xs = -edge.delta_b / edge.delta_a
    return xs + (edge.start - xs) * np.exp(-edge.delta_a * t)


def _junction(tree: GradientTree, members: tuple) -> float:
    for group in JUNCTIONS[tree.shape]:
        if set(members) <= set(group):
            return tree.external(group[0]).start
    raise DomainError("no junction holds the requested edges")


def _ext_chart(case: int, i: int) -> str:
    if i == 1:
        return "z1"
    if i == 2:
        return "inf"
    if case == 0:
        return "z0" if i == 3 else "zx"
    return "s0" if i == 3 else "s1"


def _ext_sup(setup: _Setup, i: int, delta: float, eps: float, n_tau: int, n_sigma: int,
             method: str) -> float:
    edge = setup.tree.external(i)
    das = [abs(e.delta_a) for e in setup.tree.edges[:4] if e.delta_a != 0]
    span = EXT_SPAN / min(das)
    taus = np.linspace(-span / eps, 0.0, n_tau)
    sig = np.linspace(0.0, 1.0, n_sigma)
    chart = _ext_chart(setup.case, i)
    core = setup.map.core
    worst = 0.0
    for tau in taus:
        lt = phi_ext_log(delta, np.full(n_sigma, tau), sig, at_infinity=(i == 2))
        w = core.w_chart(chart, lt, method)
        ref = float(_flow_at(edge, eps * tau))
        worst = max(worst, float(np.max(np.abs(w - ref))))
    return worst


def _int_sup(setup: _Setup, dec: RegionDecomposition, eps: float, n_tau: int, n_sigma: int,
             method: str) -> float:
    tree = setup.tree
    edge = tree.internal
    lo, hi = dec.tau_int
    if not hi > lo:
        raise DomainError("internal strip is empty: eps too large for this delta")
    taus = np.linspace(lo, hi, n_tau)
    sig = np.linspace(0.0, 1.0, n_sigma)
    l = tree.internal_length
    # the strip starts next to the junction of edges 1 and 2
    forward = math.isclose(edge.start, _junction(tree, (1, 2)), abs_tol=1e-12)
    core = setup.map.core
    worst = 0.0
    for tau in taus:
        lt = -np.pi * tau + 1j * np.pi * (1.0 - sig)
        w = core.w_chart("log", lt, method)
        t = min(max(eps * tau, 0.0), l)
        ref = float(_flow_at(edge, t if forward else l - t))
        worst = max(worst, float(np.max(np.abs(w - ref))))
    return worst


def _boundary_points(centres: list, delta: float, n: int) -> np.ndarray:
    """Boundary of {|z| <= 1/delta} minus half discs of radius delta at ``centres`` (sorted)."""
    sig = np.linspace(0.0, 1.0, n)
    pts = [phi_ext(None, delta, np.zeros(n), sig)]
    for c in centres:
        pts.append(phi_ext(c, delta, np.zeros(n), sig))
    edges = [-1.0 / delta] + [x for c in centres for x in (c - delta, c + delta)] + [1.0 / delta]
    for a, b in zip(edges[::2], edges[1::2]):
        if b > a:
            pts.append(np.linspace(a, b, n) + 0j)
    return np.concatenate(pts)


def _vertex_sups(setup: _Setup, delta: float, n: int, method: str) -> dict:
    core = setup.map.core
    tree = setup.tree
    if setup.case == 0:
        xi = setup.map.z4
        pts = _boundary_points([0.0, xi, 1.0], delta, n)
        p0 = _junction(tree, (1, 2, 3, 4))
        w = core.w_from_F(core.F_z(pts, method))
        return {"rest": float(np.max(np.abs(w - p0)))}
    pts = _boundary_points([0.0, 1.0], delta, n)
    w = core.w_from_F(core.F_z(pts, method))
    out = {"vertex": float(np.max(np.abs(w - _junction(tree, (1, 2)))))}
    w = core.w_from_F(core.F_s(pts, method))
    out["vertex_s"] = float(np.max(np.abs(w - _junction(tree, (3, 4)))))
    return out


def _all_sups(setup, dec, eps, n_tau, n_sigma, method) -> dict:
    sups = {}
    for i in range(1, 5):
        orig = (i - 1 + setup.shift) % 4 + 1
        sups[f"e{orig}"] = _ext_sup(setup, i, dec.delta, eps, n_tau, n_sigma, method)
    if setup.case != 0:
        sups["int"] = _int_sup(setup, dec, eps, n_tau, n_sigma, method)
    sups.update(_vertex_sups(setup, dec.delta, n_tau, method))
    return dict(sorted(sups.items()))


def _record(setup: _Setup, eps: float, sups: dict, grid_warning: bool) -> SweepRecord:
    m = setup.map
    lx, l1 = m.log_z4, m.log_one_minus_z4
    if setup.shift:
        # working prevertex xi' = 1 - z4 in the original labelling
        lx, l1 = l1, lx
    M = modulus_from_log_prevertex(lx, l1)
    l_est = -(eps / math.pi) * min(lx, l1)
    return SweepRecord(epsilon=float(eps), z4=math.exp(lx), log_z4=lx, log_one_minus_z4=l1,
                       modulus=M, l_estimate=l_est, sup_errors=sups, case=setup.case,
                       grid_warning=grid_warning)


def sup_error_report(sections: AffineSections, epsilon: float, delta: float | None = None,
                     grid_n: tuple = DEFAULT_GRID, method: str = "auto",
                     check_grid: bool = True) -> SweepRecord:
    """Sampled sup distances between the map and the tree on every region.

    Parameters
    ----------
    sections : AffineSections
        The four sections; classification decides the case.
    epsilon : float
        Scale of the family, at least ``EPS_FLOOR``.
    delta : float, optional
        Region radius; defaults to 0.2 (nonzero case) or 0.15 (zero case).
    grid_n : (int, int)
        Samples in tau and sigma per strip (tau count is reused for boundary arcs).
    check_grid : bool
        Repeat on a doubled grid and warn when any sup moves by more than 10 %.
    """
    setup = _setup(sections, epsilon)
    delta = DEFAULT_DELTA[setup.case] if delta is None else float(delta)
    dec = decompose(setup, delta)
    n_tau, n_sigma = grid_n
    sups = _all_sups(setup, dec, epsilon, n_tau, n_sigma, method)
    flag = False
    if check_grid:
        fine = _all_sups(setup, dec, epsilon, 2 * n_tau - 1, 2 * n_sigma - 1, method)
        for k, v in fine.items():
            if abs(v - sups[k]) > GRID_TOLERANCE * max(v, 1e-300):
                flag = True
        if flag:
            warnings.warn(f"sup-error grid too coarse at eps={epsilon:g}", RuntimeWarning)
        sups = {k: max(v, fine[k]) for k, v in sups.items()}
    return _record(setup, epsilon, sups, flag)


def prevertex_record(sections: AffineSections, epsilon: float) -> SweepRecord:
    """Sweep record without sup errors (solve only)."""
    return _record(_setup(sections, epsilon), epsilon, {}, False)


def epsilon_sweep(sections: AffineSections, eps_list, delta: float | None = None,
                  grid_n: tuple = DEFAULT_GRID, with_errors: bool = True,
                  check_grid: bool = False) -> list:
    """Records for each eps, in the order given."""
    eps_list = [float(e) for e in eps_list]
    if with_errors:
        return [sup_error_report(sections, e, delta, grid_n, check_grid=check_grid)
                for e in eps_list]
    return [prevertex_record(sections, e) for e in eps_list]


def log_spaced(eps_max: float = 1e-1, eps_min: float = 1e-3, n: int = 9) -> list:
    return list(np.logspace(math.log10(eps_max), math.log10(eps_min), n))


# ------------------------------------------------------------------ collision check

@dataclass(frozen=True)
class CollisionReport:
    status: str                 # "match", "mismatch" or "inconclusive"
    target: str | None          # "z3" (0), "z1" (1) or "half"
    expected_shape: str | None
    tree_shape: str
    z4_sequence: tuple


_SHAPE_OF_TARGET = {"z3": "b", "z1": "c", "half": "a"}


def boundary_collision_check(sections: AffineSections, eps_list=None) -> CollisionReport:
    """Compare where z4 goes as eps -> 0 with the shape of the gradient tree.

    The limit is read off as the nearest of 0, 1/2, 1 to the last z4, and is
    accepted only if the distance to it shrinks strictly over the last three
    records; otherwise (including sweeps shorter than three) the report is
    inconclusive.
    """
    eps_list = log_spaced() if eps_list is None else sorted(eps_list, reverse=True)
    recs = epsilon_sweep(sections, eps_list, with_errors=False)
    shape = build_tree(sections).shape
    z4s = tuple(r.z4 for r in recs)
    # distances in log form so that underflowing z4 still ranks correctly
    dist = {"z3": [r.log_z4 for r in recs],
            "z1": [r.log_one_minus_z4 for r in recs],
            "half": [math.log(abs(r.z4 - 0.5)) if r.z4 != 0.5 else -math.inf for r in recs]}
    target = min(dist, key=lambda k: dist[k][-1])
    tail = dist[target][-3:]
    if len(tail) < 3 or not all(b < a for a, b in zip(tail, tail[1:])):
        return CollisionReport("inconclusive", None, None, shape, z4s)
    expected = _SHAPE_OF_TARGET[target]
    status = "match" if expected == shape else "mismatch"
    return CollisionReport(status, target, expected, shape, z4s)
