"""Singular-endpoint quadrature along straight segments, plus branch helpers.

Integrals of the form

    integral_P^Q  f(zeta) dzeta

where ``f`` may behave like ``(zeta - P)**e_start`` near ``P`` and like
``(Q - zeta)**e_end`` near ``Q`` are computed with Gauss-Jacobi rules whose
weight absorbs the endpoint power.  The segment is split once at its midpoint
so that each half carries at most one singular endpoint; halves that fail a
32-versus-64 node agreement test are bisected recursively.

The integrand callback receives three arrays: the node ``zeta`` and the two
offsets ``zeta - P`` and ``zeta - Q``.  The offsets are formed directly from
the node parameter, so factors that vanish at an endpoint can be evaluated
without cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi

from .errors import NonConvergenceError

ORDER = 64
MAX_DEPTH = 60

Integrand = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@lru_cache(maxsize=512)
def gauss_jacobi(n: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for the weight ``(1 - x)**alpha * (1 + x)**beta`` on [-1, 1]."""
    if alpha <= -1.0 or beta <= -1.0:
        raise ValueError("Jacobi exponents must exceed -1")
    x, w = roots_jacobi(n, alpha, beta)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def arg_upper(v: np.ndarray) -> np.ndarray:
    """Argument in [0, pi] for values known to lie in the closed upper half plane."""
    return np.arctan2(np.abs(np.imag(v)), np.real(v))


def arg_lower(v: np.ndarray) -> np.ndarray:
    """Argument in [-pi, 0] for values known to lie in the closed lower half plane."""
    return -np.arctan2(np.abs(np.imag(v)), np.real(v))


def log_upper(v: np.ndarray) -> np.ndarray:
    return np.log(np.abs(v)) + 1j * arg_upper(v)


def log_lower(v: np.ndarray) -> np.ndarray:
    return np.log(np.abs(v)) + 1j * arg_lower(v)


def cexpm1(z: np.ndarray) -> np.ndarray:
    """``exp(z) - 1`` without cancellation for small complex ``z``."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    re = np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2
    im = np.exp(x) * np.sin(y)
    return re + 1j * im


def _piece(f: Integrand, P, Q, s0: float, s1: float, e_start: float, e_end: float, n: int):
    """One Gauss rule on the parameter sub-interval [s0, s1] of the segment P -> Q."""
    sing_lo = s0 == 0.0 and e_start != 0.0
    sing_hi = s1 == 1.0 and e_end != 0.0
    x, w = gauss_jacobi(n, e_end if sing_hi else 0.0, e_start if sing_lo else 0.0)
    onep = 1.0 + x
    onem = 1.0 - x
    half = 0.5 * (s1 - s0)
    s = s0 + half * onep
    one_minus_s = (1.0 - s1) + half * onem
    L = Q - P
    L = np.asarray(L)[..., None]
    dP = L * s
    dQ = -L * one_minus_s
    zeta = (np.asarray(Q)[..., None] + dQ) if s1 == 1.0 else (np.asarray(P)[..., None] + dP)
    vals = f(zeta, dP, dQ)
    if sing_lo:
        vals = vals * onep ** (-e_start)
    if sing_hi:
        vals = vals * onem ** (-e_end)
    # weights live on [-1, 1]; map onto the piece
    return (L[..., 0] * half) * np.sum(vals * w, axis=-1)


def _adaptive(f, P, Q, s0, s1, e_start, e_end, atol, depth):
    hi = _piece(f, P, Q, s0, s1, e_start, e_end, ORDER)
    lo = _piece(f, P, Q, s0, s1, e_start, e_end, ORDER // 2)
    # the floor keeps the halved tolerance above rounding noise
    if abs(hi - lo) <= max(atol, 1e-14 * abs(hi)):
        return hi
    if depth >= MAX_DEPTH:
        raise NonConvergenceError("segment quadrature did not converge")
    mid = 0.5 * (s0 + s1)
    return (_adaptive(f, P, Q, s0, mid, e_start, e_end, 0.5 * atol, depth + 1)
            + _adaptive(f, P, Q, mid, s1, e_start, e_end, 0.5 * atol, depth + 1))


def integrate_segment(f: Integrand, P: complex, Q, e_start: float = 0.0, e_end: float = 0.0,
                      rtol: float = 1e-13) -> np.ndarray:
    """Integrate ``f`` along straight segments from ``P`` to each entry of ``Q``.

    Parameters
    ----------
    f : callable
        ``f(zeta, zeta - P, zeta - Q)`` evaluated on arrays of shape ``(m, n)``.
    P : complex
        Common start point.
    Q : complex or array of complex
        End point(s).
    e_start, e_end : float
        Exponents of the integrand's power behaviour at ``P`` and ``Q``.
        Use 0 for a regular endpoint.
    rtol : float
        Relative accuracy target per segment.
    """
    Q = np.asarray(Q, dtype=complex)
    scalar = Q.ndim == 0
    Qv = np.atleast_1d(Q)
    Pv = np.full(Qv.shape, complex(P))
    halves = ((0.0, 0.5), (0.5, 1.0))
    his = [_piece(f, Pv, Qv, s0, s1, e_start, e_end, ORDER) for s0, s1 in halves]
    los = [_piece(f, Pv, Qv, s0, s1, e_start, e_end, ORDER // 2) for s0, s1 in halves]
    ref = np.abs(his[0]) + np.abs(his[1])
    ref = np.where(np.isfinite(ref) & (ref > 0), ref, 1.0)
    out = np.zeros(Qv.shape, dtype=complex)
    for (s0, s1), hi, lo in zip(halves, his, los):
        bad = ~(np.abs(hi - lo) <= rtol * ref)
        for j in np.flatnonzero(bad):
            hi[j] = _adaptive(f, Pv[j:j + 1], Qv[j:j + 1], s0, s1, e_start, e_end,
                              rtol * ref[j], 0)[0]
        out += hi
    return out[0] if scalar else out


def integrate_interval(g: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
                       lo: float, hi: float, e_lo: float = 0.0, e_hi: float = 0.0,
                       rtol: float = 1e-14) -> float | complex:
    """Real-interval convenience wrapper around :func:`integrate_segment`.

    ``g(t, t - lo, t - hi)`` must include the endpoint powers itself.
    """
    def f(z, a, b):
        return g(z.real, a.real, b.real)

    val = integrate_segment(f, complex(lo), complex(hi), e_lo, e_hi, rtol)
    return val


@dataclass(frozen=True)
class Scaled:
    """Complex numbers stored as ``mant * exp(scale)`` to survive extreme magnitudes."""

    mant: np.ndarray
    scale: np.ndarray

    @staticmethod
    def of(value, scale=0.0) -> "Scaled":
        return Scaled(np.asarray(value, dtype=complex), np.asarray(scale, dtype=float)
                      + np.zeros(np.shape(value)))

    def __add__(self, other: "Scaled") -> "Scaled":
        top = np.maximum(self.scale, other.scale)
        top = np.where(np.isfinite(top), top, 0.0)
        m = self.mant * np.exp(self.scale - top) + other.mant * np.exp(other.scale - top)
        return Scaled(m, top)

    def __neg__(self) -> "Scaled":
        return Scaled(-self.mant, self.scale)

    def __sub__(self, other: "Scaled") -> "Scaled":
        return self + (-other)

    def __mul__(self, other) -> "Scaled":
        if isinstance(other, Scaled):
            return Scaled(self.mant * other.mant, self.scale + other.scale).normalized()
        return Scaled(self.mant * other, self.scale)

    __rmul__ = __mul__

    def reciprocal(self) -> "Scaled":
        return Scaled(1.0 / self.mant, -self.scale).normalized()

    def normalized(self) -> "Scaled":
        mag = np.abs(self.mant)
        shift = np.where((mag > 0) & np.isfinite(mag), np.log(np.where(mag > 0, mag, 1.0)), 0.0)
        return Scaled(self.mant / np.exp(shift), self.scale + shift)

    def log_abs(self) -> np.ndarray:
        return np.log(np.abs(self.mant)) + self.scale

    def value(self) -> np.ndarray:
        return self.mant * np.exp(self.scale)

    def __getitem__(self, idx) -> "Scaled":
        return Scaled(self.mant[idx], self.scale[idx])
