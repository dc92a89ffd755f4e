"""Schwarz-Christoffel maps from the upper half plane onto a convex quadrilateral.

Prevertex convention: 0 -> x3, xi = z4 -> x4, 1 -> x1, infinity -> x2, and

    w(z) = x3 + B * F(z),    F(z) = int_0^z zeta^(a3-1) (zeta-xi)^(a4-1) (zeta-1)^(a1-1) dzeta

with every power taken on the branch that is continuous in the upper half
plane (arguments in [0, pi]).

Two evaluation regimes are used.  When xi is not small (direct mode) F is
integrated along straight segments from the nearest prevertex.  When
xi < 1/64 the prevertices 0 and xi form a cluster that is resolved in the
rescaled coordinate s = z / xi, the annulus between the cluster and the unit
scale is covered by a Laurent expansion in log z, and xi itself is only ever
handled through log(xi).  Together with :class:`~holoquad.quadrature.Scaled`
numbers this keeps maps usable when xi is far below the floating-point range,
which happens for eps ~ 1e-3.

Large prevertices (xi close to 1) are handled by relabelling the vertices once
(``frame = 1``): the Moebius map zeta -> (zeta - xi) / zeta sends the
prevertices (0, xi, 1, inf) to (inf, 0, 1 - xi, 1), so the rotated problem
has the small prevertex 1 - xi.

Points can be passed in *charts* so that offsets far below the double range
stay meaningful; see :meth:`CoreMap.F_chart`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergenceError, SolverError
from .geometry import QuadGeometry
from .quadrature import Scaled, cexpm1, integrate_segment, log_lower, log_upper
from .specfun import DEFAULT_SERIES, SeriesConfig, appell_f1_series, digamma, hyp2f1

TWO_SCALE_XI = 1.0 / 64.0
R_CLUSTER = 4.0
R_ANNULUS = 0.25
LAURENT_TERMS = 40
SERIES_RADIUS = 0.5
# fraction of a convergence radius the series-only method may use
SERIES_REACH = 0.9
METHODS = ("auto", "integral", "series")
CHARTS = ("z0", "zx", "z1", "inf", "s0", "s1", "log")


def _as_c(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=complex))


def _pow(exponent: float, log_v):
    """v**exponent given log(v); an exponent of exactly zero yields 1 even where log v = -inf."""
    if exponent == 0.0:
        return np.ones_like(log_v)
    return np.exp(exponent * log_v)


def _logit_logs(s: float) -> tuple[float, float]:
    """log(xi), log(1 - xi) for xi = 1 / (1 + exp(-s)), without cancellation."""
    return -float(np.logaddexp(0.0, -s)), -float(np.logaddexp(0.0, s))


def _rmul(a: float, z):
    """a * z for real a, keeping an infinite real part of z free of nan."""
    z = np.asarray(z, dtype=complex)
    return a * z.real + 1j * (a * z.imag)


def _scaled_from_log(mant, log_scale) -> Scaled:
    """Scaled number mant * exp(log_scale) for complex ``log_scale``."""
    log_scale = np.asarray(log_scale, dtype=complex)
    return Scaled(np.asarray(mant, dtype=complex) * np.exp(1j * log_scale.imag),
                  np.asarray(log_scale.real, dtype=float))


def _where(mask, a: Scaled, b: Scaled) -> Scaled:
    return Scaled(np.where(mask, a.mant, b.mant), np.where(mask, a.scale, b.scale))


class SCKernel:
    """Unnormalised integral F for fixed angles and prevertex.

    Parameters
    ----------
    alpha, turn : array_like of 4 floats
        Interior angles alpha_k (fractions of pi) and ``1 - alpha_k``; both are
        passed so that exponents close to 0 or 1 keep full relative accuracy.
    log_xi, log_1mxi : float
        log(xi) and log(1 - xi).
    rtol : float
        Relative tolerance of every quadrature.
    """

    def __init__(self, alpha, turn, log_xi: float, log_1mxi: float, rtol: float = 1e-13):
        self.alpha = np.asarray(alpha, dtype=float)
        self.turn = np.asarray(turn, dtype=float)
        self.e = -self.turn
        self.log_xi = float(log_xi)
        self.log_1mxi = float(log_1mxi)
        self.xi = math.exp(self.log_xi)
        self.omxi = math.exp(self.log_1mxi)
        self.rtol = rtol
        self.two_scale = self.log_xi < math.log(TWO_SCALE_XI)
        self.mu0 = 1.0 - self.turn[2] - self.turn[3]
        self.ph1 = np.exp(-1j * np.pi * self.turn[0])
        self._W2 = None
        if self.two_scale:
            self._setup_laurent()
            self.G1 = complex(integrate_segment(self._g(start="0", end="1"), 0.0, 1.0 + 0j,
                                                self.e[2], self.e[3], rtol))
            self.u_in = math.log(R_CLUSTER) + self.log_xi + 0.5j * math.pi
            self.u_out = math.log(R_ANNULUS) + 0.5j * math.pi
            g_in = complex(integrate_segment(self._g(start="0"), 0.0, 1j * R_CLUSTER,
                                             self.e[2], 0.0, rtol))
            self.F_in = Scaled.of(g_in, self.mu0 * self.log_xi)
            self.F_out = self.F_in + self._annulus_laurent(self.u_in, np.array([self.u_out]))[0]
            tail = complex(integrate_segment(self._fz(end="1"), 1j * R_ANNULUS, 1.0 + 0j,
                                             0.0, self.e[0], rtol))
            self.W4 = Scaled.of(self.G1, self.mu0 * self.log_xi)
            self.W1 = self.F_out + Scaled.of(tail)
        else:
            w4 = complex(integrate_segment(self._fz(start="0", end="x"), 0.0, self.xi + 0j,
                                           self.e[2], self.e[3], rtol))
            w41 = complex(integrate_segment(self._fz(start="x", end="1"), self.xi, 1.0 + 0j,
                                            self.e[3], self.e[0], rtol))
            self.W4 = Scaled.of(w4)
            self.W1 = Scaled.of(w4 + w41)

    # -------------------------------------------------------------- integrands

    def _fz(self, start=None, end=None):
        """Integrand in the z plane; prevertex endpoints use the exact offsets."""
        e1, _, e3, e4 = self.e
        xi = self.xi

        def f(z, dP, dQ):
            a = dP if start == "0" else (dQ if end == "0" else z)
            b = dP if start == "x" else (dQ if end == "x" else z - xi)
            c = dP if start == "1" else (dQ if end == "1" else z - 1.0)
            return (_pow(e3, log_upper(a)) * _pow(e4, log_upper(b)) * _pow(e1, log_upper(c)))
        return f

    def _g(self, start=None, end=None):
        """Integrand of G(s) = xi^(-mu0) F(xi s) in the cluster chart."""
        e1, _, e3, e4 = self.e
        xi, ph1 = self.xi, self.ph1

        def g(s, dP, dQ):
            a = dP if start == "0" else (dQ if end == "0" else s)
            b = dP if start == "1" else (dQ if end == "1" else s - 1.0)
            return ph1 * _pow(e3, log_upper(a)) * _pow(e4, log_upper(b)) * _pow(e1, np.log(1.0 - xi * s))
        return g

    def _finf(self, end_one=False):
        """Integrand of int_z^inf f in v = 1/z: v^(a2-1) (1 - xi v)^(a4-1) (1 - v)^(a1-1)."""
        e1, e2, _, e4 = self.e
        xi = self.xi

        def f(v, dP, dQ):
            omv = -dQ if end_one else 1.0 - v
            return _pow(e2, log_lower(v)) * _pow(e4, np.log(1.0 - xi * v)) * _pow(e1, np.log(omv))
        return f

    @property
    def W2(self) -> Scaled:
        if self._W2 is None:
            tail = complex(integrate_segment(self._finf(end_one=True), 0.0, 1.0 + 0j,
                                             self.e[1], self.e[0], self.rtol))
            self._W2 = self.W1 + Scaled.of(tail)
        return self._W2

    @property
    def W3(self) -> Scaled:
        return Scaled.of(0j)

    # -------------------------------------------------------------- Laurent annulus

    def _setup_laurent(self):
        K = LAURENT_TERMS
        n = np.arange(2 * K + 1)
        c = np.ones(2 * K + 1)
        d = np.ones(2 * K + 1)
        for k in range(2 * K):
            c[k + 1] = c[k] * (k + self.turn[3]) / (k + 1)
            d[k + 1] = d[k] * (k + self.turn[0]) / (k + 1)
        xk = np.exp(n[:K + 1] * self.log_xi)
        self.A_pos = np.array([np.sum(c[:K + 1] * d[j:j + K + 1] * xk) for j in range(K + 1)])
        self.A_neg = np.array([np.sum(c[m:m + K + 1] * d[:K + 1] * xk) for m in range(K + 1)])
        self.jstar = int(round(-self.mu0))
        jpos = np.arange(K + 1)
        self.mu_pos = self.mu0 + jpos
        self.mu_neg = self.mu0 - jpos
        safe = np.where(self.mu_pos == 0.0, 1.0, self.mu_pos)
        wpos = self.A_pos / safe
        wneg = np.where(jpos > 0, self.A_neg / np.where(jpos > 0, self.mu_neg, 1.0), 0.0)
        if self.jstar >= 0:
            wpos[self.jstar] = 0.0
            self.star = (Scaled.of(self.A_pos[self.jstar]), self.mu_pos[self.jstar])
        else:
            m = -self.jstar
            wneg[m] = 0.0
            self.star = (Scaled.of(self.A_neg[m], m * self.log_xi), self.mu_neg[m])
        self.w_pos, self.w_neg = wpos, wneg

    def _phi_off(self, u: np.ndarray) -> Scaled:
        j = np.arange(LAURENT_TERMS + 1)
        S = (np.exp(np.outer(u, j)) @ self.w_pos
             + np.exp(np.outer(self.log_xi - u, j)) @ self.w_neg)
        return _scaled_from_log(S, self.mu0 * u)

    @staticmethod
    def _E(mu: float, u0, u1: np.ndarray) -> Scaled:
        """(exp(mu u1) - exp(mu u0)) / mu, cancellation-free."""
        u0 = np.broadcast_to(np.asarray(u0, dtype=complex), np.shape(u1))
        du = u1 - u0
        small = np.abs(mu * du) < 1.0
        if mu == 0.0:
            near = Scaled.of(du)
        else:
            near = _scaled_from_log(cexpm1(mu * du) / mu, mu * u0)
        if mu == 0.0 or np.all(small):
            return near
        far = _scaled_from_log(np.full(du.shape, 1.0 / mu), mu * u1) - \
            _scaled_from_log(np.full(du.shape, 1.0 / mu), mu * u0)
        return _where(small, near, far)

    def _annulus_laurent(self, u0, u1: np.ndarray) -> Scaled:
        """int f dz from exp(u0) to exp(u1) inside the annulus, termwise."""
        u1 = np.asarray(u1, dtype=complex)
        coef, mu = self.star
        star = coef * self._E(mu, u0, u1)
        off = self._phi_off(u1) - self._phi_off(np.full(u1.shape, u0, dtype=complex))
        return (star + off) * self.ph1

    def _annulus_quad(self, u0, u1: np.ndarray) -> Scaled:
        """Same integral by quadrature in the logarithmic variable."""
        u1 = np.asarray(u1, dtype=complex)
        e1, e4, mu0, lx, ph1 = self.e[0], self.e[3], self.mu0, self.log_xi, self.ph1
        ref = np.maximum(mu0 * np.real(u0), mu0 * u1.real)
        P = complex(u0)

        def h(u, dP, dQ):
            q = (u - dQ)[..., :1].real
            r = np.maximum(mu0 * P.real, mu0 * q)
            return ph1 * np.exp(mu0 * u - r + e4 * np.log(1.0 - np.exp(lx - u))
                                + e1 * np.log(1.0 - np.exp(u)))
        val = np.atleast_1d(integrate_segment(h, P, u1, 0.0, 0.0, self.rtol))
        return Scaled(val, ref)

    # -------------------------------------------------------------- vertex series

    def _f1(self, a, b1, b2, x, y, config):
        return np.asarray(appell_f1_series(a, b1, b2, a + 1.0, x, y, config), dtype=complex)

    def series_z0(self, log_t, config=DEFAULT_SERIES) -> Scaled:
        """F(t) near 0 in direct mode."""
        a1, _, a3, a4 = self.alpha
        t1, _, _, t4 = self.turn
        x = np.exp(log_t - self.log_xi)
        y = np.exp(log_t)
        val = self._f1(a3, t4, t1, x, y, config) / a3 * np.exp(-1j * np.pi * (t4 + t1))
        return _scaled_from_log(val, _rmul(a3, log_t) + self.e[3] * self.log_xi)

    def series_zx(self, log_t, config=DEFAULT_SERIES) -> Scaled:
        """F(xi + t) in direct mode."""
        t1, _, t3, _ = self.turn
        a4 = self.alpha[3]
        x = -np.exp(log_t - self.log_xi)
        y = np.exp(log_t - self.log_1mxi)
        val = self._f1(a4, t3, t1, x, y, config) / a4 * self.ph1
        return self.W4 + _scaled_from_log(
            val, _rmul(a4, log_t) + self.e[2] * self.log_xi + self.e[0] * self.log_1mxi)

    def series_z1(self, log_t, config=DEFAULT_SERIES) -> Scaled:
        """F(1 + t)."""
        a1 = self.alpha[0]
        _, _, t3, t4 = self.turn
        x = -np.exp(log_t)
        y = -np.exp(log_t - self.log_1mxi)
        val = self._f1(a1, t3, t4, x, y, config) / a1
        return self.W1 + _scaled_from_log(val, _rmul(a1, log_t) + self.e[3] * self.log_1mxi)

    def series_inf(self, log_v, config=DEFAULT_SERIES) -> Scaled:
        """F(1 / v) for v in the closed lower half plane."""
        a2 = self.alpha[1]
        t1, _, _, t4 = self.turn
        x = np.exp(log_v + self.log_xi)
        y = np.exp(log_v)
        val = self._f1(a2, t4, t1, x, y, config) / a2
        return self.W2 - _scaled_from_log(val, _rmul(a2, log_v))

    def series_s0(self, log_t, config=DEFAULT_SERIES) -> Scaled:
        """F(xi t) near the cluster point s = 0 (two-scale mode)."""
        a3 = self.alpha[2]
        t1, _, _, t4 = self.turn
        x = np.exp(log_t)
        y = np.exp(log_t + self.log_xi)
        val = self._f1(a3, t4, t1, x, y, config) / a3 * np.exp(-1j * np.pi * (t4 + t1))
        return _scaled_from_log(val, _rmul(a3, log_t) + self.mu0 * self.log_xi)

    def series_s1(self, log_t, config=DEFAULT_SERIES) -> Scaled:
        """F(xi (1 + t)) near the cluster point s = 1 (two-scale mode)."""
        a4 = self.alpha[3]
        t1, _, t3, _ = self.turn
        x = -np.exp(log_t)
        y = np.exp(log_t + self.log_xi - self.log_1mxi)
        val = self._f1(a4, t3, t1, x, y, config) / a4 * self.ph1
        local = _scaled_from_log(val, _rmul(a4, log_t) + self.e[0] * self.log_1mxi)
        return (Scaled.of(self.G1) + local) * Scaled.of(1.0 + 0j, self.mu0 * self.log_xi)

    # -------------------------------------------------------------- quadrature routes

    def _seg(self, f, P, Q, e_start):
        return np.atleast_1d(integrate_segment(f, P, Q, e_start, 0.0, self.rtol))

    def integral_z(self, z: np.ndarray) -> Scaled:
        """F by quadrature from a suitable anchor (points outside the cluster)."""
        z = _as_c(z)
        out = Scaled(np.zeros(z.shape, complex), np.zeros(z.shape))
        far = np.abs(z) >= 2.0
        if np.any(far):
            v = 1.0 / z[far]
            part = self.W2 - Scaled.of(self._seg(self._finf(), 0.0, v, self.e[1]))
            out = self._put(out, far, part)
        rest = ~far
        if self.two_scale:
            near1 = rest & (z.real >= 0.5)
            mid = rest & ~near1
            if np.any(near1):
                out = self._put(out, near1, self.W1 + Scaled.of(
                    self._seg(self._fz(start="1"), 1.0, z[near1], self.e[0])))
            if np.any(mid):
                out = self._put(out, mid, self.F_out + Scaled.of(
                    self._seg(self._fz(), 1j * R_ANNULUS, z[mid], 0.0)))
            return out
        anchors = np.array([0.0, self.xi, 1.0])
        nearest = np.argmin(np.abs(z[:, None] - anchors[None, :]), axis=1)
        for k, (lab, W, e) in enumerate((("0", self.W3, self.e[2]), ("x", self.W4, self.e[3]),
                                         ("1", self.W1, self.e[0]))):
            sel = rest & (nearest == k)
            if np.any(sel):
                out = self._put(out, sel, W + Scaled.of(
                    self._seg(self._fz(start=lab), anchors[k], z[sel], e)))
        return out

    def integral_s(self, s: np.ndarray) -> Scaled:
        """xi^mu0 G(s) by quadrature from the nearer of s = 0, s = 1 (two-scale mode)."""
        s = _as_c(s)
        G = np.zeros(s.shape, complex)
        from0 = np.abs(s) <= np.abs(s - 1.0)
        if np.any(from0):
            G[from0] = self._seg(self._g(start="0"), 0.0, s[from0], self.e[2])
        if np.any(~from0):
            G[~from0] = self.G1 + self._seg(self._g(start="1"), 1.0, s[~from0], self.e[3])
        return Scaled(G, np.full(s.shape, self.mu0 * self.log_xi))

    @staticmethod
    def _put(out: Scaled, mask, part: Scaled) -> Scaled:
        mant = out.mant.copy()
        scale = out.scale.copy()
        mant[mask] = np.broadcast_to(part.mant, (int(mask.sum()),))
        scale[mask] = np.broadcast_to(part.scale, (int(mask.sum()),))
        return Scaled(mant, scale)


@dataclass(frozen=True)
class _Disc:
    chart: str
    radius: float


class CoreMap(SCKernel):
    """Normalised map of one frame: w = x3 + B F with B fixed by w(1) = x1."""

    def __init__(self, alpha, turn, vertices, log_xi, log_1mxi, rtol=1e-13,
                 series: SeriesConfig = DEFAULT_SERIES):
        super().__init__(alpha, turn, log_xi, log_1mxi, rtol)
        self.vertices = np.asarray(vertices, dtype=complex)
        self.series = series
        x1, _, x3, _ = self.vertices
        self.B = Scaled.of(x1 - x3) * self.W1.reciprocal()

    def w_from_F(self, F: Scaled) -> np.ndarray:
        return self.vertices[2] + (self.B * F).value()

    # ---------------------------------------------------------- zone routines

    def _cluster(self, s, log_s, method) -> Scaled:
        """Two-scale mode, |s| <= R: vertex series near s = 0, 1 or quadrature of G."""
        out = Scaled(np.zeros(s.shape, complex), np.zeros(s.shape))
        todo = np.ones(s.shape, bool)
        if method != "integral":
            d0 = np.abs(s) < SERIES_RADIUS
            d1 = ~d0 & (np.abs(s - 1.0) < SERIES_RADIUS)
            if np.any(d0):
                out = self._put(out, d0, self.series_s0(log_s[d0], self.series))
            if np.any(d1):
                with np.errstate(divide="ignore"):
                    l1 = log_upper(s[d1] - 1.0)
                out = self._put(out, d1, self.series_s1(l1, self.series))
            todo &= ~(d0 | d1)
            if method == "series" and np.any(todo):
                # both s-series converge on discs of radius 1
                r0 = todo & (np.abs(s) <= SERIES_REACH)
                r1 = todo & ~r0 & (np.abs(s - 1.0) <= SERIES_REACH)
                if np.any(r0):
                    out = self._put(out, r0, self.series_s0(log_s[r0], self.series))
                if np.any(r1):
                    out = self._put(out, r1, self.series_s1(log_upper(s[r1] - 1.0), self.series))
                todo &= ~(r0 | r1)
                if np.any(todo):
                    raise DomainError("point outside every series domain")
        if np.any(todo):
            out = self._put(out, todo, self.integral_s(s[todo]))
        return out

    def _annulus(self, u, method) -> Scaled:
        route = self._annulus_quad if method == "integral" else self._annulus_laurent
        return self.F_in + route(self.u_in, u)

    def _discs(self):
        if self.two_scale:
            return {"z1": SERIES_RADIUS * self.omxi}
        return {"z0": 0.5 * self.xi, "zx": 0.5 * min(self.xi, self.omxi), "z1": 0.5 * self.omxi}

    def _plain(self, z, method) -> Scaled:
        """Points away from the cluster: vertex series in their discs, else quadrature."""
        out = Scaled(np.zeros(z.shape, complex), np.zeros(z.shape))
        todo = np.ones(z.shape, bool)
        if method != "integral":
            centres = {"z0": 0.0, "zx": self.xi, "z1": 1.0}
            for chart, rad in self._discs().items():
                sel = todo & (np.abs(z - centres[chart]) <= rad)
                if np.any(sel):
                    with np.errstate(divide="ignore"):
                        lt = log_upper(z[sel] - centres[chart])
                    out = self._put(out, sel, getattr(self, "series_" + chart)(lt, self.series))
                    todo &= ~sel
            far = todo & (np.abs(z) > 2.0)
            if np.any(far):
                out = self._put(out, far, self.series_inf(log_lower(1.0 / z[far]), self.series))
                todo &= ~far
            if method == "series" and np.any(todo):
                out, todo = self._reach_discs(z, out, todo)
                if np.any(todo):
                    raise DomainError("point outside every series domain")
        if np.any(todo):
            out = self._put(out, todo, self.integral_z(z[todo]))
        return out

    def _natural_discs(self):
        """Convergence discs of the vertex series, shrunk by SERIES_REACH."""
        discs = {"z1": (1.0, SERIES_REACH * self.omxi)}
        if not self.two_scale:
            discs["z0"] = (0.0, SERIES_REACH * self.xi)
            discs["zx"] = (self.xi, SERIES_REACH * min(self.xi, self.omxi))
        return discs

    def _reach_discs(self, z, out, todo):
        """Series-only fallback: vertex series anywhere inside their convergence discs."""
        for chart, (c, rad) in self._natural_discs().items():
            sel = todo & (np.abs(z - c) <= rad)
            if np.any(sel):
                with np.errstate(divide="ignore"):
                    lt = log_upper(z[sel] - c)
                out = self._put(out, sel, getattr(self, "series_" + chart)(lt, self.series))
                todo = todo & ~sel
        far = todo & (np.abs(z) * SERIES_REACH >= 1.0)
        if np.any(far):
            out = self._put(out, far, self.series_inf(log_lower(1.0 / z[far]), self.series))
            todo = todo & ~far
        return out, todo

    # ---------------------------------------------------------- dispatch by coordinate

    def F_log(self, u, method: str = "auto") -> Scaled:
        """F at z = exp(u), Im u in [0, pi]."""
        u = _as_c(u)
        out = Scaled(np.zeros(u.shape, complex), np.zeros(u.shape))
        if self.two_scale:
            cl = u.real <= self.log_xi + math.log(R_CLUSTER)
            an = ~cl & (u.real < math.log(R_ANNULUS))
            ou = ~cl & ~an
            if np.any(cl):
                ls = u[cl] - self.log_xi
                out = self._put(out, cl, self._cluster(np.exp(ls), ls, method))
        else:
            cl = (u.real < math.log(0.5 * self.xi)) if method != "integral" else np.zeros(u.shape, bool)
            an = np.zeros(u.shape, bool)
            ou = ~cl
            if np.any(cl):
                out = self._put(out, cl, self.series_z0(u[cl], self.series))
        if np.any(an):
            out = self._put(out, an, self._annulus(u[an], method))
        if np.any(ou):
            out = self._put(out, ou, self._plain(np.exp(u[ou]), method))
        return out

    def F_s(self, s, method: str = "auto", log_s=None) -> Scaled:
        """F at z = xi * s."""
        s = _as_c(s)
        with np.errstate(divide="ignore"):
            log_s = log_upper(s) if log_s is None else _as_c(log_s)
        if not self.two_scale:
            return self.F_log(log_s + self.log_xi, method)
        out = Scaled(np.zeros(s.shape, complex), np.zeros(s.shape))
        inside = np.abs(s) <= R_CLUSTER
        if np.any(inside):
            out = self._put(out, inside, self._cluster(s[inside], log_s[inside], method))
        u = log_s + self.log_xi
        an = ~inside & (u.real < math.log(R_ANNULUS))
        ou = ~inside & ~an
        if np.any(an):
            out = self._put(out, an, self._annulus(u[an], method))
        if np.any(ou):
            out = self._put(out, ou, self._plain(np.exp(u[ou]), method))
        return out

    def F_z(self, z, method: str = "auto") -> Scaled:
        """F at ordinary points of the closed upper half plane."""
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
        z = _as_c(z)
        if not self.two_scale:
            return self._plain(z, method)
        out = Scaled(np.zeros(z.shape, complex), np.zeros(z.shape))
        inner = np.abs(z) < R_ANNULUS
        if np.any(inner):
            with np.errstate(divide="ignore"):
                u = log_upper(z[inner])
            cl = u.real <= self.log_xi + math.log(R_CLUSTER)
            part = Scaled(np.zeros(u.shape, complex), np.zeros(u.shape))
            if np.any(cl):
                ls = u[cl] - self.log_xi
                part = self._put(part, cl, self._cluster(np.exp(ls), ls, method))
            if np.any(~cl):
                part = self._put(part, ~cl, self._annulus(u[~cl], method))
            out = self._put(out, inner, part)
        if np.any(~inner):
            out = self._put(out, ~inner, self._plain(z[~inner], method))
        return out

    def F_chart(self, chart: str, log_t, method: str = "auto") -> Scaled:
        """F at a point given by the logarithm of its offset in a chart.

        ``z0``: z = t.  ``zx``: z = xi + t.  ``z1``: z = 1 + t.  ``inf``: z = 1/t
        with log t in the lower half plane.  ``s0``: z = xi t.  ``s1``:
        z = xi (1 + t).  ``log``: z = exp(log_t).
        """
        lt = _as_c(log_t)
        if chart in ("z0", "log"):
            return self.F_log(lt, method)
        if chart == "s0":
            return self.F_log(lt + self.log_xi, method)
        if chart == "inf":
            small = lt.real < math.log(SERIES_RADIUS)
            if method != "integral" and np.all(small):
                return self.series_inf(lt, self.series)
            return self.F_log(-lt, method)
        if chart == "z1":
            small = lt.real < math.log(SERIES_RADIUS * self.omxi)
            if method != "integral" and np.all(small):
                return self.series_z1(lt, self.series)
            return self.F_z(1.0 + np.exp(lt), method)
        if chart in ("zx", "s1"):
            if self.two_scale:
                ls = lt - self.log_xi if chart == "zx" else lt
                if method != "integral" and np.all(ls.real < math.log(SERIES_RADIUS)):
                    return self.series_s1(ls, self.series)
                return self.F_s(1.0 + np.exp(ls), method)
            lz = lt if chart == "zx" else lt + self.log_xi
            if method != "integral" and np.all(lz.real < math.log(0.5 * min(self.xi, self.omxi))):
                return self.series_zx(lz, self.series)
            return self.F_z(self.xi + np.exp(lz), method)
        raise ValueError(f"unknown chart {chart!r}")

    def w_chart(self, chart: str, log_t, method: str = "auto") -> np.ndarray:
        return self.w_from_F(self.F_chart(chart, log_t, method))

    def vertex_images(self) -> np.ndarray:
        """w at the four prevertices, in vertex order x1..x4."""
        F = [self.W1, self.W2, self.W3, self.W4]
        return np.array([complex(self.w_from_F(v)) for v in F])


# ------------------------------------------------------------------ public map


@dataclass(frozen=True)
class SCQuadMap:
    """Solved map for one target quadrilateral.

    ``z4`` is the prevertex of x4 in the standard labelling; it can underflow or
    round to 1, so ``log_z4`` and ``log_one_minus_z4`` carry it exactly.
    ``core`` is the normalised map in the working frame: ``frame = 0`` is the
    standard labelling, ``frame = 1`` the relabelling x'_j = x_{j+1}.
    """

    target: QuadGeometry
    frame: int
    core: CoreMap
    log_z4: float
    log_one_minus_z4: float
    residual: float

    @property
    def z4(self) -> float:
        return math.exp(self.log_z4)

    @property
    def prevertices(self) -> tuple:
        return (1.0, math.inf, 0.0, self.z4)

    @property
    def exponents(self) -> np.ndarray:
        return self.target.alpha

    @property
    def A(self) -> complex:
        return complex(self.core.vertices[2])

    @property
    def B(self) -> complex:
        """Multiplier of the working frame (may overflow for extreme prevertices)."""
        return complex(self.core.B.value())

    @property
    def xi_core(self) -> float:
        return self.core.xi


def _rotated_target(target: QuadGeometry, frame: int) -> QuadGeometry:
    return target.rotated(frame) if frame else target


def _ratio_residual(alpha, turn, vertices, s: float, rtol: float) -> float:
    lx, l1 = _logit_logs(s)
    k = SCKernel(alpha, turn, lx, l1, rtol)
    x1, _, x3, x4 = vertices
    side41 = (k.W1 - k.W4).log_abs()
    side34 = k.W4.log_abs()
    return float(side41 - side34 - (math.log(abs(x1 - x4)) - math.log(abs(x4 - x3))))


def _find_root(fun, tol_res: float = 1e-12, s_cap: float = 2.0 ** 14) -> tuple[float, float]:
    """Bracket the decreasing function ``fun`` on the logit axis, bisect, then polish by secant."""
    lo, hi = -1.0, 1.0
    flo, fhi = fun(lo), fun(hi)
    while flo < 0:
        hi, fhi = lo, flo
        lo *= 2.0
        if abs(lo) > s_cap:
            raise SolverError("bracket failure: no sign change of the side-ratio residual")
        flo = fun(lo)
    while fhi > 0:
        lo, flo = hi, fhi
        hi *= 2.0
        if abs(hi) > s_cap:
            raise SolverError("bracket failure: no sign change of the side-ratio residual")
        fhi = fun(hi)
    for _ in range(200):
        if hi - lo <= 1e-6 * max(1.0, abs(lo)):
            break
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if fm == 0:
            return mid, 0.0
        if fm > 0:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    best = (lo, flo) if abs(flo) < abs(fhi) else (hi, fhi)
    x0, f0 = lo, flo
    x1, f1 = hi, fhi
    for _ in range(60):
        if abs(best[1]) < tol_res:
            break
        x = x1 - f1 * (x1 - x0) / (f1 - f0) if f1 != f0 else 0.5 * (lo + hi)
        if not (lo < x < hi):
            x = 0.5 * (lo + hi)
        fx = fun(x)
        if abs(fx) < abs(best[1]):
            best = (x, fx)
        if fx == 0:
            break
        if fx > 0:
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        x0, f0, x1, f1 = x1, f1, x, fx
        if hi - lo <= 4 * np.spacing(max(abs(lo), abs(hi))):
            break
    return best


def solve_prevertex(target: QuadGeometry, frame: int | None = None, rtol: float = 1e-13,
                    series: SeriesConfig = DEFAULT_SERIES) -> SCQuadMap:
    """Solve for z4 so that the image sides x3x4 and x4x1 have the target length ratio.

    The unknown is the logit of the working-frame prevertex, so prevertices far
    below the floating-point range are reachable.  ``frame`` forces the working
    frame; by default frame 1 is used exactly when z4 > 63/64.
    """
    if frame is None:
        probe = _ratio_residual(target.alpha, target.turn, target.vertices,
                                math.log(63.0), rtol)
        frame = 1 if probe > 0 else 0
    if frame not in (0, 1):
        raise ValueError("frame must be 0 or 1")
    work = _rotated_target(target, frame)

    def fun(s):
        return _ratio_residual(work.alpha, work.turn, work.vertices, s, rtol)

    s, res = _find_root(fun)
    lx, l1 = _logit_logs(s)
    core = CoreMap(work.alpha, work.turn, work.vertices, lx, l1, rtol, series)
    if frame == 0:
        log_z4, log_1mz4 = lx, l1
    else:
        log_z4, log_1mz4 = l1, lx
    m = SCQuadMap(target, frame, core, log_z4, log_1mz4, res)
    err = np.abs(core.vertex_images() - work.vertices)
    if not np.all(err <= 1e-8 * target.diameter):
        raise SolverError(f"vertex check failed: max error {err.max():.3e}")
    return m


def build_map(target: QuadGeometry, log_z4: float, log_one_minus_z4: float, frame: int = 0,
              rtol: float = 1e-13, series: SeriesConfig = DEFAULT_SERIES) -> SCQuadMap:
    """Map with a prescribed prevertex (no solve, no vertex check)."""
    work = _rotated_target(target, frame)
    lx, l1 = (log_z4, log_one_minus_z4) if frame == 0 else (log_one_minus_z4, log_z4)
    core = CoreMap(work.alpha, work.turn, work.vertices, lx, l1, rtol, series)
    return SCQuadMap(target, frame, core, log_z4, log_one_minus_z4, math.nan)


def evaluate(m: SCQuadMap, z, method: str = "auto"):
    """w(z) in the standard labelling for z in the closed upper half plane."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    z_in = np.asarray(z, dtype=complex)
    zc = _as_c(z_in)
    if np.any(zc.imag < 0):
        raise DomainError("points must lie in the closed upper half plane")
    out = np.empty(zc.shape, complex)
    inf = ~np.isfinite(zc)
    out[inf] = m.target.vertices[1]
    fin = ~inf
    if m.frame == 0:
        out[fin] = m.core.w_from_F(m.core.F_z(zc[fin], method))
    else:
        zero = fin & (zc == 0)
        out[zero] = m.target.vertices[2]
        rest = fin & ~zero
        if np.any(rest):
            zr = zc[rest]
            # 1 - z4 from its logarithm: z4 itself may round to 1
            zp = ((zr - 1.0) + math.exp(m.log_one_minus_z4)) / zr
            out[rest] = m.core.w_from_F(m.core.F_z(zp, method))
    return out[0] if z_in.ndim == 0 else out.reshape(z_in.shape)


def evaluate_rescaled(m: SCQuadMap, s, method: str = "auto"):
    """w at z = z4 * s, i.e. the map composed with the inverse of z -> z / z4.

    In frame 0 the cluster near z = 0 is resolved in s directly, so points
    with z below the floating-point range are still reachable.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    s_in = np.asarray(s, dtype=complex)
    sc = _as_c(s_in)
    if np.any(sc.imag < 0) or not np.all(np.isfinite(sc)):
        raise DomainError("points must be finite and lie in the closed upper half plane")
    out = np.empty(sc.shape, complex)
    if m.frame == 0:
        out[:] = m.core.w_from_F(m.core.F_s(sc, method))
    else:
        zero = sc == 0
        out[zero] = m.target.vertices[2]
        if np.any(~zero):
            # frame-1 coordinate (z - z4) / z written in s
            out[~zero] = m.core.w_from_F(m.core.F_z(1.0 - 1.0 / sc[~zero], method))
    return out[0] if s_in.ndim == 0 else out.reshape(s_in.shape)


def dispatch_region(m: SCQuadMap, z: complex, method: str = "auto") -> str:
    """Human-readable name of the route :func:`evaluate` takes for one point."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    z = complex(z)
    if z.imag < 0:
        raise DomainError("points must lie in the closed upper half plane")
    if not math.isfinite(abs(z)):
        return "prevertex of x2 (infinity)"
    prefix = ""
    if m.frame == 1:
        if z == 0:
            return "prevertex of x3"
        prefix = "frame 1, "
        z = ((z - 1.0) + math.exp(m.log_one_minus_z4)) / z
    core = m.core
    if core.two_scale and abs(z) < R_ANNULUS:
        lz = math.log(abs(z)) if z != 0 else -math.inf
        if lz <= core.log_xi + math.log(R_CLUSTER):
            s = z / core.xi
            if method != "integral" and abs(s) < SERIES_RADIUS:
                return prefix + "cluster zone, vertex series at s = 0"
            if method != "integral" and abs(s - 1.0) < SERIES_RADIUS:
                return prefix + "cluster zone, vertex series at s = 1"
            if method == "series":
                if abs(s) <= SERIES_REACH:
                    return prefix + "cluster zone, vertex series at s = 0 (extended disc)"
                if abs(s - 1.0) <= SERIES_REACH:
                    return prefix + "cluster zone, vertex series at s = 1 (extended disc)"
                raise DomainError("point outside every series domain")
            return prefix + "cluster zone, quadrature in s"
        if method == "integral":
            return prefix + "annulus zone, quadrature in log z"
        return prefix + "annulus zone, Laurent series in log z"
    if method != "integral":
        centres = {"z0": 0.0, "zx": core.xi, "z1": 1.0}
        names = {"z0": "0", "zx": "z4", "z1": "1"}
        for chart, rad in core._discs().items():
            if abs(z - centres[chart]) <= rad:
                return prefix + f"vertex series at {names[chart]}"
        if abs(z) > 2.0:
            return prefix + "series at infinity"
        if method == "series":
            for chart, (c, rad) in core._natural_discs().items():
                if abs(z - c) <= rad:
                    return prefix + f"vertex series at {names[chart]} (extended disc)"
            if abs(z) * SERIES_REACH >= 1.0:
                return prefix + "series at infinity (extended disc)"
            raise DomainError("point outside every series domain")
    return prefix + "quadrature"


# ------------------------------------------------------------------ plain integrals


def _path_points(P: complex, Q: complex, prevertices) -> list:
    """Straight path P -> Q, or a detour through the upper half plane if it crosses a prevertex."""
    if P.imag == 0 and Q.imag == 0:
        lo, hi = sorted((P.real, Q.real))
        if any(lo < p < hi for p in prevertices):
            mid = 0.5 * (P + Q) + 0.5j * abs(Q - P)
            return [P, mid, Q]
    return [P, Q]


def sc_integral(exponents, z4: float, endpoint_from: complex, endpoint_to: complex,
                rtol: float = 1e-13) -> complex:
    """Integral of zeta^(a3-1) (zeta-z4)^(a4-1) (zeta-1)^(a1-1) between two finite points.

    ``exponents`` are the interior angles (a1, a2, a3, a4) as fractions of pi.
    Prevertex endpoints are handled by Gauss-Jacobi weights.
    """
    alpha = np.asarray(exponents, dtype=float)
    if not 0 < z4 < 1:
        raise DomainError("z4 must lie in (0, 1)")
    P, Q = complex(endpoint_from), complex(endpoint_to)
    if P.imag < 0 or Q.imag < 0:
        raise DomainError("endpoints must lie in the closed upper half plane")
    kern = _PlainIntegrand(alpha, z4)
    pts = _path_points(P, Q, (0.0, z4, 1.0))
    total = 0j
    for a, b in zip(pts[:-1], pts[1:]):
        total += kern.segment(a, b, rtol)
    return total


class _PlainIntegrand:
    def __init__(self, alpha, xi):
        self.e = alpha - 1.0
        self.labels = {0.0: "0", xi: "x", 1.0: "1"}
        self.xi = xi
        self.exps = {"0": self.e[2], "x": self.e[3], "1": self.e[0]}

    def segment(self, P, Q, rtol):
        lp = self.labels.get(P.real) if P.imag == 0 else None
        lq = self.labels.get(Q.real) if Q.imag == 0 else None
        if P == Q:
            return 0j
        e1, _, e3, e4 = self.e
        xi = self.xi

        def f(z, dP, dQ):
            a = dP if lp == "0" else (dQ if lq == "0" else z)
            b = dP if lp == "x" else (dQ if lq == "x" else z - xi)
            c = dP if lp == "1" else (dQ if lq == "1" else z - 1.0)
            return _pow(e3, log_upper(a)) * _pow(e4, log_upper(b)) * _pow(e1, log_upper(c))
        return complex(integrate_segment(f, P, Q, self.exps.get(lp, 0.0), self.exps.get(lq, 0.0), rtol))


def side_ratio_residual(exponents, z4: float, target_ratio: float) -> float:
    """|image of [z4, 1]| / |image of [0, z4]| - target_ratio."""
    a = sc_integral(exponents, z4, 0.0, z4)
    b = sc_integral(exponents, z4, z4, 1.0)
    return abs(b) / abs(a) - target_ratio


# ------------------------------------------------------------------ degenerate annulus


def _degenerate_sums(alpha3: float, one_minus_alpha1: float, log_X, log_Y, L, log_xi_sum,
                     config: SeriesConfig):
    """Double sum over k != l of c_k d_l X^k Y^l / (k - l) and the logarithmic single sum.

    The double sum runs over anti-diagonals k + l = N, accumulating the k > l and
    k < l triangles separately.
    """
    P = log_X.shape[0]
    upper = np.zeros(P, complex)
    lower = np.zeros(P, complex)
    quiet = np.zeros(P, int)
    active = np.arange(P)
    a = [1.0]
    b = [1.0]
    N = 0
    # points leave the loop once their own partial sums have settled
    while active.size:
        N += 1
        if N > config.max_terms:
            raise NonConvergenceError("degenerate annulus series: truncation cap reached")
        a.append(a[-1] * (alpha3 + N - 1) / N)
        b.append(b[-1] * (one_minus_alpha1 + N - 1) / N)
        k = np.arange(N + 1)
        l = N - k
        keep = k != l
        k, l = k[keep], l[keep]
        coef = np.array(a)[k] * np.array(b)[l] / (k - l)
        terms = coef[None, :] * np.exp(np.outer(log_X[active], k) + np.outer(log_Y[active], l))
        gt = k > l
        du = terms[:, gt].sum(axis=1)
        dl = terms[:, ~gt].sum(axis=1)
        upper[active] += du
        lower[active] += dl
        small = (np.abs(du) <= config.rel_tol * np.maximum(np.abs(upper[active]), 1e-300)) & \
                (np.abs(dl) <= config.rel_tol * np.maximum(np.abs(lower[active]), 1e-300))
        quiet[active] = np.where(small, quiet[active] + 1, 0)
        active = active[quiet[active] < 3]
    double = upper + lower

    single = np.zeros(P, complex)
    coef = 1.0
    n = 0
    quiet = 0
    while True:
        term = (digamma(n + 1.0) - digamma(alpha3 + n) + L) * coef * math.exp(n * log_xi_sum)
        single = single + term
        if np.all(np.abs(term) <= config.rel_tol * np.abs(single)):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
        coef *= (alpha3 + n) * (one_minus_alpha1 + n) / ((n + 1.0) ** 2)
        n += 1
        if n >= config.max_terms:
            raise NonConvergenceError("degenerate annulus series: truncation cap reached")
    return double, single


def annulus_series_degenerate(m: SCQuadMap, z, rescaled: bool = False,
                              config: SeriesConfig | None = None) -> np.ndarray:
    """w on the annulus xi < |z| < 1 when a3 + a4 = 1 (sides 1 and 3 parallel).

    Works in the working frame of ``m`` (the standard labelling when
    ``m.frame == 0``).  With ``rescaled=True`` the argument is z' = z / xi and
    the expansion is organised around the inverted prevertex xi' = 1 / xi on
    1 < |z'| < xi'.
    """
    config = config or SeriesConfig(rel_tol=1e-16, max_terms=5000)
    c = m.core
    a1, _, a3, a4 = c.alpha
    if abs(c.mu0) > 1e-12:
        raise DomainError("degenerate annulus series needs a3 + a4 = 1")
    zz = _as_c(z)
    if np.any(zz.imag < 0):
        raise DomainError("points must lie in the closed upper half plane")
    lz = log_upper(zz)
    if rescaled:
        log_xip = -c.log_xi
        if np.any(lz.real <= 0) or np.any(lz.real >= log_xip):
            raise DomainError("rescaled series needs 1 < |z'| < 1/xi")
        log_X = -lz
        log_Y = lz - log_xip
        L = lz - 1j * math.pi
        log_sum = -log_xip
        F = hyp2f1(a3, c.turn[0], 1.0, math.exp(-log_xip))
    else:
        if np.any(lz.real <= c.log_xi) or np.any(lz.real >= 0):
            raise DomainError("annulus series needs xi < |z| < 1")
        log_X = c.log_xi - lz
        log_Y = lz
        L = lz - c.log_xi - 1j * math.pi
        log_sum = c.log_xi
        F = hyp2f1(a3, c.turn[0], 1.0, c.xi)
    double, single = _degenerate_sums(a3, c.turn[0], log_X, log_Y, L, log_sum, config)
    x3, x4 = c.vertices[2], c.vertices[3]
    pref = math.sin(math.pi * a3) / math.pi * (x4 - x3) / F * np.exp(1j * math.pi * a3)
    out = x3 + pref * (single - double)
    return out[0] if np.ndim(z) == 0 else out.reshape(np.shape(z))
