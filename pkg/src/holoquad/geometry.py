"""Quadrilaterals cut out by four scaled affine sections y = eps * (a_i x + b_i).

Side i of the quadrilateral lies on line i; vertex i is the intersection of
lines i and i + 1 (indices cyclic), with abscissa p_i independent of eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import GeometryError

EQ_TOL = 1e-12


@dataclass(frozen=True)
class AffineSections:
    """Slopes ``a`` and intercepts ``b`` of the four sections; ``c`` is carried but unused."""

    a: tuple
    b: tuple
    c: tuple = (0, 0, 0, 0)

    def __post_init__(self):
        for name in ("a", "b", "c"):
            vals = tuple(getattr(self, name))
            if len(vals) != 4:
                raise GeometryError(f"{name} must have exactly four entries")
            object.__setattr__(self, name, vals)
        for i in range(4):
            if self.a[i] == self.a[(i + 1) % 4]:
                raise GeometryError(
                    f"adjacent sections parallel: a{i + 1} = a{(i + 1) % 4 + 1}")

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Rational) for v in self.a + self.b)

    def abscissas(self) -> tuple:
        """p_i = (b_i - b_{i+1}) / (a_{i+1} - a_i), exact for rational input."""
        a, b = self.a, self.b
        if self.exact:
            return tuple(Fraction(b[i] - b[(i + 1) % 4]) / Fraction(a[(i + 1) % 4] - a[i])
                         for i in range(4))
        return tuple((float(b[i]) - float(b[(i + 1) % 4])) / (float(a[(i + 1) % 4]) - float(a[i]))
                     for i in range(4))


@dataclass(frozen=True)
class QuadGeometry:
    """One member of the eps-family: vertices, abscissas, ordinates and angles.

    ``alpha`` holds interior angles as fractions of pi; ``turn = 1 - alpha`` is
    stored separately because it is formed without cancellation when an angle
    is close to pi.
    """

    epsilon: float
    vertices: np.ndarray
    p: np.ndarray
    q: np.ndarray
    alpha: np.ndarray
    turn: np.ndarray
    sections: AffineSections | None = field(default=None, compare=False)

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(max(abs(v[i] - v[j]) for i in range(4) for j in range(i + 1, 4)))

    def side(self, i: int) -> complex:
        """Vector along side ``i`` (1-based): the piece of line i from vertex i-1 to vertex i."""
        return complex(self.vertices[(i - 1) % 4] - self.vertices[(i - 2) % 4])

    def rotated(self, r: int) -> "QuadGeometry":
        """Relabel so that new vertex j is old vertex j + r."""
        idx = [(j + r) % 4 for j in range(4)]
        return QuadGeometry(self.epsilon, self.vertices[idx], self.p[idx], self.q[idx],
                            self.alpha[idx], self.turn[idx], None)


def _lt(x, y, exact: bool) -> bool:
    return x < y if exact else (y - x) > EQ_TOL * max(1.0, abs(x), abs(y))


def _eq(x, y, exact: bool) -> bool:
    return x == y if exact else abs(x - y) <= EQ_TOL * max(1.0, abs(x), abs(y))


def _corner_sign(p, i: int, exact: bool) -> int:
    """Sign of (p_{i+1} - p_i)(p_{i-1} - p_i), with zero detected at the matching tolerance."""
    nxt, prv = p[(i + 1) % 4], p[(i - 1) % 4]
    if _eq(nxt, p[i], exact) or _eq(prv, p[i], exact):
        return 0
    return 1 if (nxt - p[i]) * (prv - p[i]) > 0 else -1


def _angles(sections: AffineSections, epsilon: float):
    p = sections.abscissas()
    exact = sections.exact
    alpha = np.empty(4)
    turn = np.empty(4)
    for i in range(4):
        sign = _corner_sign(p, i, exact)
        if sign == 0:
            raise GeometryError(
                f"degenerate corner at vertex {i + 1}: a neighbouring vertex shares its abscissa")
        d = abs(math.atan(float(sections.a[(i + 1) % 4]) * epsilon)
                - math.atan(float(sections.a[i]) * epsilon)) / math.pi
        if sign > 0:
            alpha[i], turn[i] = d, 1.0 - d
        else:
            alpha[i], turn[i] = 1.0 - d, d
    return alpha, turn


def interior_angles(sections: AffineSections, epsilon: float) -> np.ndarray:
    """Interior angles alpha_i (fractions of pi) of the eps-scaled quadrilateral."""
    if not epsilon > 0:
        raise GeometryError("epsilon must be positive")
    return _angles(sections, epsilon)[0]


def _check_ccw(v: np.ndarray):
    for i in range(4):
        e0 = v[(i + 1) % 4] - v[i]
        e1 = v[(i + 2) % 4] - v[(i + 1) % 4]
        if (e0.conjugate() * e1).imag <= 0:
            raise GeometryError("vertices do not form a counterclockwise convex quadrilateral")


def intersections(sections: AffineSections, epsilon: float) -> QuadGeometry:
    """Vertices, abscissas and angles of the quadrilateral at scale ``epsilon``."""
    if not epsilon > 0:
        raise GeometryError("epsilon must be positive")
    p_exact = sections.abscissas()
    p = np.array([float(v) for v in p_exact])
    q = np.array([epsilon * (float(sections.a[i] * p_exact[i] + sections.b[i])) for i in range(4)])
    v = p + 1j * q
    for i in range(4):
        if v[i] == v[(i + 1) % 4]:
            raise GeometryError(f"triple point: vertices {i + 1} and {(i + 1) % 4 + 1} coincide")
    alpha, turn = _angles(sections, epsilon)
    _check_ccw(v)
    return QuadGeometry(float(epsilon), v, p, q, alpha, turn, sections)


def quad_from_vertices(vertices) -> QuadGeometry:
    """QuadGeometry for an arbitrary counterclockwise convex quadrilateral (eps = 1)."""
    v = np.asarray(vertices, dtype=complex)
    if v.shape != (4,):
        raise GeometryError("need exactly four vertices")
    _check_ccw(v)
    turn = np.array([np.angle((v[(i + 1) % 4] - v[i]) / (v[i] - v[(i - 1) % 4])) / np.pi
                     for i in range(4)])
    return QuadGeometry(1.0, v, v.real.copy(), v.imag.copy(), 1.0 - turn, turn, None)


# ------------------------------------------------------------------ configuration table

def _between(x, lo, hi, exact):
    return _lt(lo, x, exact) and _lt(x, hi, exact)


_A_CONDITIONS = {
    "a2,a4 in (a1,a3)": lambda a, e: _between(a[1], a[0], a[2], e) and _between(a[3], a[0], a[2], e),
    "a2,a4 in (a3,a1)": lambda a, e: _between(a[1], a[2], a[0], e) and _between(a[3], a[2], a[0], e),
    "a1,a3 in (a2,a4)": lambda a, e: _between(a[0], a[1], a[3], e) and _between(a[2], a[1], a[3], e),
    "a1,a3 in (a4,a2)": lambda a, e: _between(a[0], a[3], a[1], e) and _between(a[2], a[3], a[1], e),
    "max{a1,a3}<min{a2,a4}": lambda a, e: _lt(max(a[0], a[2]), min(a[1], a[3]), e),
    "max{a2,a4}<min{a1,a3}": lambda a, e: _lt(max(a[1], a[3]), min(a[0], a[2]), e),
}

# (slope condition, abscissa ordering, tree shape); "=" joins tied abscissas
CONFIGURATION_TABLE = (
    ("a2,a4 in (a1,a3)", "4<1<2<3", "c"),
    ("a2,a4 in (a1,a3)", "3<2<1<4", "c"),
    ("a2,a4 in (a3,a1)", "1<4<3<2", "c"),
    ("a2,a4 in (a3,a1)", "2<3<4<1", "c"),
    ("a1,a3 in (a2,a4)", "1<2<3<4", "b"),
    ("a1,a3 in (a2,a4)", "4<3<2<1", "b"),
    ("a1,a3 in (a4,a2)", "3<4<1<2", "b"),
    ("a1,a3 in (a4,a2)", "2<1<4<3", "b"),
    ("max{a1,a3}<min{a2,a4}", "4<1<3<2", "c"),
    ("max{a1,a3}<min{a2,a4}", "2<3<1<4", "c"),
    ("max{a1,a3}<min{a2,a4}", "4<3<1<2", "b"),
    ("max{a1,a3}<min{a2,a4}", "2<1<3<4", "b"),
    ("max{a1,a3}<min{a2,a4}", "4<1=3<2", "a"),
    ("max{a1,a3}<min{a2,a4}", "2<3=1<4", "a"),
    ("max{a2,a4}<min{a1,a3}", "1<4<2<3", "c"),
    ("max{a2,a4}<min{a1,a3}", "3<2<4<1", "c"),
    ("max{a2,a4}<min{a1,a3}", "3<4<2<1", "b"),
    ("max{a2,a4}<min{a1,a3}", "1<2<4<3", "b"),
    ("max{a2,a4}<min{a1,a3}", "1<4=2<3", "a"),
    ("max{a2,a4}<min{a1,a3}", "3<2=4<1", "a"),
)


def _ordering_holds(order: str, p, exact: bool) -> bool:
    groups = [[int(t) - 1 for t in g.split("=")] for g in order.split("<")]
    for g in groups:
        if not all(_eq(p[g[0]], p[j], exact) for j in g[1:]):
            return False
    return all(_lt(p[groups[k][0]], p[groups[k + 1][0]], exact) for k in range(len(groups) - 1))


@dataclass(frozen=True)
class Classification:
    table_row: int
    row_label: str
    tree_shape: str
    generic: bool
    degenerate_axis: int
    parallel_pairs: tuple


def classify(sections: AffineSections) -> Classification:
    """Match the configuration against every row of the configuration table.

    ``table_row`` is the 1-based position of the matched ordering in
    :data:`CONFIGURATION_TABLE`.
    """
    a, p, exact = sections.a, sections.abscissas(), sections.exact
    for k, (acond, order, shape) in enumerate(CONFIGURATION_TABLE):
        if _A_CONDITIONS[acond](a, exact) and _ordering_holds(order, p, exact):
            p13 = _eq(p[0], p[2], exact)
            p24 = _eq(p[1], p[3], exact)
            par = (a[0] == a[2], a[1] == a[3])
            prod = (p[2] - p[0]) * (p[3] - p[1])
            axis = 0 if (p13 or p24) else (1 if prod > 0 else -1)
            return Classification(
                table_row=k + 1,
                row_label=f"{acond}; " + "<".join(f"p{g}" if "=" not in g else
                                                  "=".join(f"p{t}" for t in g.split("="))
                                                  for g in order.split("<")),
                tree_shape=shape,
                generic=not (p13 or p24 or par[0] or par[1]),
                degenerate_axis=axis,
                parallel_pairs=par,
            )
    raise GeometryError("no match: the sections do not bound a counterclockwise convex "
                        "quadrilateral of any tabulated type")
