"""The unique gradient tree of four quadratic functions on the line.

f_i has derivative a_i x + b_i, so every edge of the tree carries a flow of the
form I' = -(da * I + db) that is solved in closed form.  External edge i carries
the flow of f_{i+1} - f_i with time in (-inf, 0]; it starts (at t = -inf) at the
critical point p_i and ends at the junction it is attached to.  The internal
edge carries the flow of f_rig - f_lef on [0, l].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, GeometryError
from .geometry import AffineSections, Classification, classify

# pairs of external edges sharing an internal vertex, per tree shape
JUNCTIONS = {"a": ((1, 2, 3, 4),), "b": ((1, 2), (3, 4)), "c": ((2, 3), (4, 1))}
# (lef, rig) of the internal edge
INTERNAL_PAIR = {"b": (1, 3), "c": (2, 4)}


@dataclass(frozen=True)
class Edge:
    """One edge with its closed-form flow.

    For external edges ``start`` is the junction position reached at t = 0 and
    ``end`` is the critical point p_i approached as t -> -inf.  For the internal
    edge the flow runs from ``start`` at t = 0 to ``end`` at t = l.
    """

    kind: str
    index: int
    lef: int
    rig: int
    delta_a: float
    delta_b: float
    start: float
    end: float

    @property
    def fixed_point(self) -> float | None:
        return None if self.delta_a == 0 else -self.delta_b / self.delta_a


@dataclass(frozen=True)
class GradientTree:
    shape: str
    p: tuple
    minima: tuple
    edges: tuple
    internal_length: float | None
    classification: Classification
    sections: AffineSections

    def external(self, i: int) -> Edge:
        return self.edges[i - 1]

    @property
    def internal(self) -> Edge | None:
        return self.edges[4] if len(self.edges) > 4 else None

    def junction_points(self) -> tuple:
        """Positions of the internal vertices, one per junction group of the shape."""
        return tuple(self.external(group[0]).start for group in JUNCTIONS[self.shape])


def is_minimum(sections: AffineSections, i: int) -> bool:
    """Whether p_i (1-based) is a minimum, i.e. a Morse index-zero point, of f_{i+1} - f_i."""
    return sections.a[i % 4] > sections.a[i - 1]


def _flow_time(delta_a: float, delta_b: float, start: float, end: float) -> float:
    """Time for I' = -(da I + db) to carry ``start`` to ``end``; nan if it never does."""
    if delta_a == 0:
        return -(end - start) / delta_b if delta_b != 0 else math.nan
    xs = -delta_b / delta_a
    ratio = (end - xs) / (start - xs) if start != xs else math.nan
    if not ratio > 0:
        return math.nan
    return -math.log(ratio) / delta_a


def build_tree(sections: AffineSections) -> GradientTree:
    """Shape from the configuration table plus the closed-form flows on every edge."""
    cls = classify(sections)
    a, b = sections.a, sections.b
    p = tuple(float(v) for v in sections.abscissas())
    minima = tuple(is_minimum(sections, i) for i in range(1, 5))

    junction_of = {}
    for group in JUNCTIONS[cls.tree_shape]:
        mins = [i for i in group if minima[i - 1]]
        if not mins:
            raise GeometryError("junction without an index-zero critical point")
        pos = p[mins[0] - 1]
        for i in group:
            junction_of[i] = pos

    edges = []
    for i in range(1, 5):
        j = i % 4 + 1
        edges.append(Edge("external", i, i, j, float(a[j - 1] - a[i - 1]),
                          float(b[j - 1] - b[i - 1]), junction_of[i], p[i - 1]))

    length = None
    if cls.tree_shape in INTERNAL_PAIR:
        lef, rig = INTERNAL_PAIR[cls.tree_shape]
        da = float(a[rig - 1] - a[lef - 1])
        db = float(b[rig - 1] - b[lef - 1])
        ends = [junction_of[g[0]] for g in JUNCTIONS[cls.tree_shape]]
        for s, e in (ends, ends[::-1]):
            t = _flow_time(da, db, s, e)
            if t > 0 and math.isfinite(t):
                edges.append(Edge("internal", 0, lef, rig, da, db, s, e))
                length = t
                break
        else:
            raise GeometryError("inconsistent tree: the internal flow joins neither junction pair")
    return GradientTree(cls.tree_shape, p, minima, tuple(edges), length, cls, sections)


def edge_flow(tree: GradientTree, edge: Edge, t: float) -> float:
    """Position on ``edge`` at time ``t``, from the exact solution of I' = -(da I + db)."""
    if edge.kind == "external":
        if t > 0:
            raise DomainError("external edges are parametrised by t <= 0")
    elif not (0 <= t <= tree.internal_length):
        raise DomainError("internal edge time must lie in [0, l]")
    if edge.delta_a == 0:
        return edge.start - edge.delta_b * t
    xs = edge.fixed_point
    return xs + (edge.start - xs) * math.exp(-edge.delta_a * t)


def internal_edge_length(tree: GradientTree) -> float:
    """Length l of the internal edge: the time the flow needs between its critical endpoints."""
    edge = tree.internal
    if edge is None:
        raise DomainError("tree shape (a) has no internal edge")
    if edge.delta_a == 0:
        return -(edge.end - edge.start) / edge.delta_b
    xs = edge.fixed_point
    return -math.log((edge.end - xs) / (edge.start - xs)) / edge.delta_a
