"""Conformal modulus of a polygonal quadrilateral.

``M(Q; a, b, c, d)`` is the height of the rectangle ``[0, 1] x [0, M]`` onto
which Q maps with a, b, c, d going to 0, 1, 1 + iM, iM.  The vertices
x1..x4 of a :class:`QuadGeometry` play the roles of a..d.  With prevertices
x3 -> 0, x4 -> xi, x1 -> 1, x2 -> inf the right-angle map gives

    M(xi) = K(1 - xi) / K(xi),    K(x) = 2F1(1/2, 1/2; 1; x),

which equals 1 at xi = 1/2 and decreases from +inf to 0 on (0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .geometry import QuadGeometry
from .scmap import SCQuadMap, evaluate, solve_prevertex
from .specfun import hyp2f1, hyp2f1_log_at_one


@dataclass(frozen=True)
class ModulusReport:
    """Modulus of one labelling of a quadrilateral plus its area/width bracket.

    ``xi`` may underflow for very elongated shapes; ``log_xi`` keeps it.
    """

    M: float
    xi: float
    rengel_lo: float
    rengel_hi: float
    log_xi: float = math.nan
    rotation: int = 0

    def __post_init__(self):
        if not self.M > 0:
            raise DomainError("modulus must be positive")


def _elliptic_k(log_x: float, log_1mx: float) -> float:
    """2F1(1/2, 1/2; 1; x) from log x and log(1 - x), accurate up to x -> 1."""
    x = math.exp(log_x)
    if x <= 0.5:
        return hyp2f1(0.5, 0.5, 1.0, x)
    return hyp2f1_log_at_one(0.5, 0.5, 0, x, one_minus_z=math.exp(log_1mx),
                             log_one_minus_z=log_1mx)


def modulus_from_log_prevertex(log_xi: float, log_one_minus_xi: float) -> float:
    """M(xi) given log xi and log(1 - xi); usable when xi or 1 - xi underflows."""
    if not (math.isfinite(log_xi) and math.isfinite(log_one_minus_xi)):
        raise DomainError("prevertex must lie strictly inside (0, 1)")
    # one of the two logs may round to -0.0 when the other side underflows
    if log_xi > 0.0 or log_one_minus_xi > 0.0 or log_xi == log_one_minus_xi == 0.0:
        raise DomainError("prevertex must lie strictly inside (0, 1)")
    return _elliptic_k(log_one_minus_xi, log_xi) / _elliptic_k(log_xi, log_one_minus_xi)


def modulus_from_prevertex(xi: float) -> float:
    """Modulus of the upper half plane marked at 1, inf, 0, xi.

    Parameters
    ----------
    xi : float
        Prevertex of the fourth marked point, ``0 < xi < 1``.

    Returns
    -------
    float
        ``K(1 - xi) / K(xi)``.
    """
    xi = float(xi)
    if not 0.0 < xi < 1.0:
        raise DomainError("modulus_from_prevertex needs 0 < xi < 1")
    return modulus_from_log_prevertex(math.log(xi), math.log1p(-xi))


def _segment_distance(p0: complex, p1: complex, q0: complex, q1: complex) -> float:
    """Distance between two non-crossing segments: the closest endpoint-to-segment gap."""
    def point_seg(x, a, b):
        d = b - a
        t = ((x - a) * d.conjugate()).real / abs(d) ** 2
        t = min(1.0, max(0.0, t))
        return abs(x - (a + t * d))
    return min(point_seg(p0, q0, q1), point_seg(p1, q0, q1),
               point_seg(q0, p0, p1), point_seg(q1, p0, p1))


def _area(v) -> float:
    x, y = np.real(v), np.imag(v)
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def rengel_bounds(target: QuadGeometry) -> tuple[float, float]:
    """Lower and upper bounds on M(Q; x1, x2, x3, x4) from area and side distances.

    ``lo = s**2 / area`` with ``s`` the distance between sides (x1, x2) and
    (x3, x4), the pair the rectangle's vertical direction joins;
    ``hi = area / l**2`` with ``l`` the distance between (x2, x3) and (x4, x1).
    Both are equalities for rectangles.
    """
    v = [complex(c) for c in target.vertices]
    area = _area(v)
    s = _segment_distance(v[0], v[1], v[2], v[3])
    ell = _segment_distance(v[1], v[2], v[3], v[0])
    return s * s / area, area / (ell * ell)


def modulus_of_quad(target: QuadGeometry, rotation: int = 0) -> ModulusReport:
    """Modulus of ``target`` with its labelling rotated by ``rotation``.

    Rotation r uses (a, b, c, d) = (x_{1+r}, ..., x_{4+r}); rotations r and
    r + 1 give reciprocal moduli.  Each rotation is solved independently.
    """
    r = int(rotation) % 4
    work = target.rotated(r) if r else target
    m = solve_prevertex(work)
    M = modulus_from_log_prevertex(m.log_z4, m.log_one_minus_z4)
    lo, hi = rengel_bounds(work)
    return ModulusReport(M=M, xi=m.z4, rengel_lo=lo, rengel_hi=hi, log_xi=m.log_z4, rotation=r)


def parallelogram_prevertex_equation(theta1: float, theta2: float, xi: float) -> float:
    """Residual whose root in ``xi`` is the prevertex of a parallelogram.

    For a parallelogram with side directions at angles ``theta1`` and ``theta2``
    (so the acute angle is ``theta2 - theta1``) the residual is

        cos(theta2) 2F1(1 - t, t; 1; xi) - cos(theta1) 2F1(t, 1 - t; 1; 1 - xi)

    with ``t = (theta2 - theta1) / pi``.
    """
    t = (theta2 - theta1) / math.pi
    if not 0.0 < t < 0.5:
        raise DomainError("theta2 - theta1 must lie in (0, pi/2)")
    if not 0.0 < xi < 1.0:
        raise DomainError("xi must lie in (0, 1)")
    return (math.cos(theta2) * hyp2f1(1.0 - t, t, 1.0, xi)
            - math.cos(theta1) * hyp2f1(t, 1.0 - t, 1.0, 1.0 - xi))


def parallelogram_prevertex(theta1: float, theta2: float, xtol: float = 1e-15) -> float:
    """Root of :func:`parallelogram_prevertex_equation` (it is increasing in xi)."""
    lo, hi = 1e-12, 1.0 - 1e-12

    def f(x):
        return parallelogram_prevertex_equation(theta1, theta2, x)
    return brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)


# ------------------------------------------------------------------ marked boundary points

def _side_prevertex(z4: float, side: int, u: float) -> float:
    """Real prevertex at fraction ``u`` of the interval that maps to ``side``."""
    if side == 1:
        return z4 + u * (1.0 - z4)
    if side == 2:
        return 1.0 + u / (1.0 - u)
    if side == 3:
        return -(1.0 - u) / u
    return u * z4


def prevertex_of_boundary_point(m: SCQuadMap, point: complex, side: int) -> float:
    """Prevertex of a point on side ``side`` (1-based, from x_{side-1} to x_side).

    The image of the matching real interval traces the side monotonically, so
    the prevertex is the root of ``|w(zeta) - x_{side-1}| - |point - x_{side-1}|``.
    """
    if side not in (1, 2, 3, 4):
        raise DomainError("side must be 1, 2, 3 or 4")
    v = m.target.vertices
    start, end = complex(v[side - 2]), complex(v[side - 1])
    edge = end - start
    t = ((complex(point) - start) * edge.conjugate()).real / abs(edge) ** 2
    off = abs((complex(point) - start) - t * edge)
    if not (0.0 < t < 1.0) or off > 1e-9 * abs(edge):
        raise DomainError("point does not lie inside the requested side")
    target = abs(complex(point) - start)

    def f(u):
        zeta = _side_prevertex(m.z4, side, u)
        return abs(complex(evaluate(m, complex(zeta, 0.0))) - start) - target
    u = brentq(f, 1e-14, 1.0 - 1e-14, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=300)
    return _side_prevertex(m.z4, side, u)


def cross_ratio_prevertex(za: float, zb: float, zc: float, zd: float) -> float:
    """Image of ``zd`` under the Moebius map sending zc, za, zb to 0, 1, inf.

    Any one argument may be ``math.inf``.  For cyclically ordered real points
    the result lies in (0, 1).
    """
    if math.isinf(zb):
        lam = (zd - zc) / (za - zc)
    elif math.isinf(zc):
        lam = (za - zb) / (zd - zb)
    elif math.isinf(za):
        lam = (zd - zc) / (zd - zb)
    elif math.isinf(zd):
        lam = (za - zb) / (za - zc)
    else:
        lam = (zd - zc) * (za - zb) / ((zd - zb) * (za - zc))
    if not 0.0 < lam < 1.0:
        raise DomainError("marked prevertices are not in cyclic order")
    return lam


def modulus_with_marked_point(corners: QuadGeometry, point: complex, replaces: int) -> float:
    """Modulus of the polygon ``corners`` with one marked point moved off its corner.

    The four marked points are the corners x1..x4 except that corner
    ``replaces`` is swapped for ``point``, which must lie on side 1 (from x4 to
    x1) when ``replaces`` is 1 or 4.  This covers quadrilaterals whose marked
    points are not all corners, e.g. a marked point in the middle of a side.
    """
    if replaces not in (1, 4):
        raise DomainError("the marked point must replace x1 or x4 (it lies on side x4 -> x1)")
    m = solve_prevertex(corners)
    zeta = prevertex_of_boundary_point(m, point, 1)
    marks = [1.0, math.inf, 0.0, m.z4]
    marks[replaces - 1] = zeta
    return modulus_from_prevertex(cross_ratio_prevertex(*marks))
