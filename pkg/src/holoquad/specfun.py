"""Special-function kernel: gamma, digamma, Pochhammer symbols, Gauss 2F1 with
its logarithmic connection formulas, Appell F1 and Horn G2.

All parameters are real.  Series are truncated once three consecutive terms fall
below ``rel_tol`` times the running sum; Euler-type integrals are evaluated with
the Gauss-Jacobi machinery of :mod:`holoquad.quadrature`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateParametersError, DomainError, NonConvergenceError, PoleError
from .quadrature import integrate_interval

EULER_GAMMA = 0.57721566490153286061


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation policy shared by every series in this module."""

    rel_tol: float = 1e-15
    max_terms: int = 20000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


DEFAULT_SERIES = SeriesConfig()


@dataclass(frozen=True)
class HypParams:
    """Parameter bundle (a, b, b2, c) for the hypergeometric families."""

    a: float
    b: float
    b2: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        if is_nonpositive_integer(self.c):
            raise DomainError("c must not be zero or a negative integer")


def is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x) == math.floor(x)


def _sinpi(x: float) -> float:
    n = round(x)
    s = math.sin(math.pi * (x - n))
    return -s if n % 2 else s


def _cospi(x: float) -> float:
    n = round(x)
    c = math.cos(math.pi * (x - n))
    return -c if n % 2 else c


# Lanczos-type coefficients (g = 671/128, 14 terms), good to double precision.
_LANCZOS = (
    57.1562356658629235, -59.5979603554754912, 14.1360979747417471,
    -0.491913816097620199, 0.339946499848118887e-4, 0.465236289270485756e-4,
    -0.983744753048795646e-4, 0.158088703224912494e-3, -0.210264441724104883e-3,
    0.217439618115212643e-3, -0.164318106536763890e-3, 0.844182239838527433e-4,
    -0.261908384015814087e-4, 0.368991826595316234e-5,
)


def _lngamma_positive(x: float) -> float:
    y = x
    tmp = x + 5.24218750000000000
    tmp = (x + 0.5) * math.log(tmp) - tmp
    ser = 0.999999999999997092
    for c in _LANCZOS:
        y += 1.0
        ser += c / y
    return tmp + math.log(2.5066282746310005 * ser / x)


def gamma(x: float) -> float:
    """Gamma function for real ``x``; raises :class:`PoleError` at 0, -1, -2, ..."""
    x = float(x)
    if is_nonpositive_integer(x):
        raise PoleError(f"gamma has a pole at {x}")
    if x < 0.5:
        return math.pi / (_sinpi(x) * gamma(1.0 - x))
    if x == math.floor(x) and x <= 171:
        return float(math.factorial(int(x) - 1))
    try:
        return math.exp(_lngamma_positive(x))
    except OverflowError:
        return math.inf


def rgamma(x: float) -> float:
    """Reciprocal gamma, zero at the poles."""
    if is_nonpositive_integer(x):
        return 0.0
    return 1.0 / gamma(x)


def loggamma_abs(x: float) -> float:
    """log|Gamma(x)|."""
    if is_nonpositive_integer(x):
        raise PoleError(f"gamma has a pole at {x}")
    if x < 0.5:
        return math.log(math.pi / abs(_sinpi(x))) - loggamma_abs(1.0 - x)
    return _lngamma_positive(x)


def digamma(x: float) -> float:
    """Logarithmic derivative of gamma: recurrence up to x >= 10, then asymptotics."""
    x = float(x)
    if is_nonpositive_integer(x):
        raise PoleError(f"digamma has a pole at {x}")
    if x < 0.0:
        return digamma(1.0 - x) - math.pi * _cospi(x) / _sinpi(x)
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = inv2 * (1 / 12 - inv2 * (1 / 120 - inv2 * (1 / 252 - inv2 * (
        1 / 240 - inv2 * (1 / 132 - inv2 * (691 / 32760 - inv2 / 12))))))
    return acc + math.log(x) - 0.5 / x - series


def pochhammer(a: float, k: int) -> float:
    """Rising factorial (a)_k; negative k means Gamma(a + k) / Gamma(a)."""
    k = int(k)
    if k == 0:
        return 1.0
    if k > 0:
        out = 1.0
        for j in range(k):
            out *= a + j
        return out
    den = 1.0
    for j in range(1, -k + 1):
        den *= a - j
    if den == 0.0:
        raise PoleError(f"({a})_{k} hits a gamma pole")
    return 1.0 / den


def _check_terms(n: int, cfg: SeriesConfig, what: str):
    if n >= cfg.max_terms:
        raise NonConvergenceError(f"{what}: truncation cap of {cfg.max_terms} terms reached")


# ---------------------------------------------------------------- Gauss 2F1

def hyp2f1_series(a: float, b: float, c: float, x, config: SeriesConfig = DEFAULT_SERIES):
    """Defining power series of 2F1; ``x`` may be complex or an array."""
    if is_nonpositive_integer(c):
        raise DomainError("c must not be zero or a negative integer")
    x = np.asarray(x, dtype=complex if np.iscomplexobj(x) else float)
    term = np.ones_like(x)
    total = np.ones_like(x)
    quiet = 0
    n = 0
    while True:
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * x
        n += 1
        total = total + term
        if not np.any(term):
            break
        if np.all(np.abs(term) <= config.rel_tol * np.abs(total)):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
        _check_terms(n, config, "hyp2f1 series")
    return total[()] if total.ndim == 0 else total


def hyp2f1_integral(a: float, b: float, c: float, x: float) -> float:
    """Euler integral representation, valid for c > b > 0 and x < 1."""
    if not (c > b > 0):
        raise DomainError("Euler integral needs c > b > 0")
    if not x < 1:
        raise DomainError("Euler integral needs x < 1")
    omx = 1.0 - x

    def g(t, d0, d1):
        tail = -d1
        return d0 ** (b - 1) * tail ** (c - b - 1) * (omx + x * tail) ** (-a)

    val = integrate_interval(g, 0.0, 1.0, b - 1.0, c - b - 1.0)
    return float(np.real(val)) * gamma(c) * rgamma(b) * rgamma(c - b)


def _near_integer(v: float, tol: float = 1e-9) -> bool:
    return abs(v - round(v)) < tol


def hyp2f1(a: float, b: float, c: float, x: float, config: SeriesConfig = DEFAULT_SERIES) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; x) for real x <= 1.

    Series for |x| <= 0.8; the Euler integral for 0.8 < x < 1 when available;
    Pfaff's transformation for x < -0.8; the logarithmic or generic 1 - x
    connection otherwise; Gauss summation at x = 1.
    """
    a, b, c, x = float(a), float(b), float(c), float(x)
    if is_nonpositive_integer(c):
        raise DomainError("c must not be zero or a negative integer")
    if x == 0.0:
        return 1.0
    if x > 1.0:
        raise DomainError("real evaluation path requires x <= 1")
    if x == 1.0:
        if c - a - b <= 0:
            raise DomainError("2F1 diverges at x = 1 unless c - a - b > 0")
        return gamma(c) * gamma(c - a - b) * rgamma(c - a) * rgamma(c - b)
    if abs(x) <= 0.8:
        return float(hyp2f1_series(a, b, c, x, config))
    if x < -0.8:
        return (1.0 - x) ** (-a) * hyp2f1(a, c - b, c, x / (x - 1.0), config)
    if c > b > 0:
        return hyp2f1_integral(a, b, c, x)
    if c > a > 0:
        return hyp2f1_integral(b, a, c, x)
    s = c - a - b
    if _near_integer(s):
        m = int(round(s))
        if m >= 0:
            return float(hyp2f1_log_at_one(a, b, m, x, config=config))
        return (1.0 - x) ** s * float(hyp2f1_log_at_one(c - a, c - b, -m, x, config=config))
    w = 1.0 - x
    t1 = gamma(c) * gamma(s) * rgamma(c - a) * rgamma(c - b) * hyp2f1_series(a, b, 1.0 - s, w, config)
    t2 = (w ** s * gamma(c) * gamma(-s) * rgamma(a) * rgamma(b)
          * hyp2f1_series(c - a, c - b, 1.0 + s, w, config))
    return float(t1 + t2)


def hyp2f1_log_at_one(a: float, b: float, m: int, z: float, *, one_minus_z: float | None = None,
                      log_one_minus_z: float | None = None,
                      config: SeriesConfig = DEFAULT_SERIES) -> float:
    """2F1(a, b; a + b + m; z) near z = 1 through its logarithmic expansion.

    ``one_minus_z`` and ``log_one_minus_z`` may be supplied when ``1 - z`` is
    too small to be formed from ``z`` in floating point.
    """
    m = int(m)
    if m < 0:
        raise DomainError("m must be a nonnegative integer")
    if is_nonpositive_integer(a) or is_nonpositive_integer(b):
        raise PoleError("a and b must not be non-positive integers")
    w = float(one_minus_z) if one_minus_z is not None else 1.0 - float(z)
    # an underflowed 1 - z is fine as long as its logarithm is supplied
    if not (0.0 < w <= 0.5 or (w == 0.0 and log_one_minus_z is not None)):
        raise DomainError("logarithmic expansion needs 0 < 1 - z <= 0.5")
    L = float(log_one_minus_z) if log_one_minus_z is not None else math.log(w)
    c = a + b + m
    if is_nonpositive_integer(c):
        raise DomainError("a + b + m must not be a non-positive integer")

    first = 0.0
    if m > 0:
        acc = 0.0
        t = 1.0
        for n in range(m):
            acc += t
            if n + 1 < m:
                t *= (a + n) * (b + n) / ((1.0 - m + n) * (n + 1.0)) * w
        first = gamma(m) * rgamma(a + m) * rgamma(b + m) * acc

    coef = 1.0 / math.factorial(m)
    h = digamma(1.0) + digamma(m + 1.0) - digamma(a + m) - digamma(b + m)
    total = coef * (h - L)
    quiet = 0
    n = 0
    while True:
        coef *= (a + m + n) * (b + m + n) / ((n + m + 1.0) * (n + 1.0)) * w
        h += 1.0 / (n + 1.0) + 1.0 / (n + m + 1.0) - 1.0 / (a + m + n) - 1.0 / (b + m + n)
        n += 1
        term = coef * (h - L)
        total += term
        if abs(term) <= config.rel_tol * abs(total):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
        _check_terms(n, config, "logarithmic 2F1 expansion")
    second = math.exp(m * L) * (-1.0) ** m * rgamma(a) * rgamma(b) * total
    return gamma(c) * (first + second)


def hyp2f1_log_at_infinity(alpha: float, m: int, l: int, z: float,
                           config: SeriesConfig = DEFAULT_SERIES):
    """Gamma(alpha+m)/Gamma(alpha+m+l+1) * 2F1(alpha, alpha+m; alpha+m+l+1; z) for |z| > 1.

    For z > 1 the value is the boundary value from the upper half plane, so
    ``log(-z) = log z - i pi``.  Returns a float for z < -1 and a complex number
    for z > 1.
    """
    m, l = int(m), int(l)
    if m < 0 or l < 0:
        raise DomainError("m and l must be nonnegative integers")
    if is_nonpositive_integer(alpha):
        raise PoleError("alpha must not be a non-positive integer")
    z = float(z)
    if -1.0 <= z <= 1.0:
        raise DomainError("branch error: expansion at infinity needs |z| > 1")
    lz = complex(math.log(-z)) if z < 0 else complex(math.log(z), -math.pi)

    def pw(s):
        return cmath.exp(s * lz)

    zi = 1.0 / z
    # tail sum, n >= l + 1
    n = l + 1
    t = pochhammer(alpha, n + m) / (math.factorial(n + m) * math.factorial(n)) * zi ** n
    acc = t
    quiet = 0
    while True:
        t *= (alpha + n + m) * (n - l) / ((n + m + 1.0) * (n + 1.0)) * zi
        n += 1
        acc += t
        if abs(t) <= config.rel_tol * abs(acc):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
        _check_terms(n - l, config, "2F1 expansion at infinity")
    out = (-1.0) ** (m + l + 1) * pw(-alpha - m) * acc

    if m > 0:
        finite = 0.0
        for n in range(m):
            finite += (math.factorial(m - n - 1) * pochhammer(alpha, n)
                       / (math.factorial(m + l - n) * math.factorial(n)) * zi ** n)
        out += pw(-alpha) * finite

    logsum = 0j
    for n in range(l + 1):
        hp = digamma(1.0 + m + n) + digamma(1.0 + n) - digamma(alpha + m + n) - digamma(l + 1.0 - n)
        logsum += (pochhammer(alpha, n + m) * pochhammer(-m - l, n + m)
                   / (math.factorial(n + m) * math.factorial(n)) * zi ** n * (lz + hp))
    out += pw(-alpha - m) / math.factorial(l + m) * logsum
    return out.real if z < 0 else out


# ---------------------------------------------------------------- Appell F1

def appell_f1_series(a: float, b1: float, b2: float, c: float, x, y,
                     config: SeriesConfig = DEFAULT_SERIES):
    """Double series of F1 summed along anti-diagonals m + n = N.

    ``x`` and ``y`` may be complex arrays of a common shape.
    """
    if is_nonpositive_integer(c):
        raise DomainError("c must not be zero or a negative integer")
    x, y = np.broadcast_arrays(np.asarray(x), np.asarray(y))
    dtype = complex if (np.iscomplexobj(x) or np.iscomplexobj(y)) else float
    x = x.astype(dtype)
    y = y.astype(dtype)
    xs = [np.ones_like(x)]
    ys = [np.ones_like(y)]
    total = np.ones_like(x)
    ratio = 1.0
    quiet = 0
    N = 0
    while True:
        N += 1
        xs.append(xs[-1] * ((b1 + N - 1) / N) * x)
        ys.append(ys[-1] * ((b2 + N - 1) / N) * y)
        ratio *= (a + N - 1) / (c + N - 1)
        diag = np.zeros_like(x)
        for m in range(N + 1):
            diag = diag + xs[m] * ys[N - m]
        term = ratio * diag
        total = total + term
        if np.all(np.abs(term) <= config.rel_tol * np.abs(total)):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
        _check_terms(N, config, "Appell F1 series")
    return total[()] if total.ndim == 0 else total


def appell_f1_integral(a: float, b1: float, b2: float, c: float, x: float, y: float) -> float:
    """Euler integral of F1, valid for 0 < a < c and real x, y < 1."""
    if not (0 < a < c):
        raise DomainError("Euler integral of F1 needs 0 < a < c")
    if not (x < 1 and y < 1):
        raise DomainError("Euler integral of F1 needs x < 1 and y < 1")

    def g(t, d0, d1):
        tail = -d1
        return (d0 ** (a - 1) * tail ** (c - a - 1)
                * ((1 - x) + x * tail) ** (-b1) * ((1 - y) + y * tail) ** (-b2))

    val = integrate_interval(g, 0.0, 1.0, a - 1.0, c - a - 1.0)
    return float(np.real(val)) * gamma(c) * rgamma(a) * rgamma(c - a)


def appell_f1(a: float, b1: float, b2: float, c: float, x: float, y: float,
              config: SeriesConfig = DEFAULT_SERIES) -> float:
    """Appell F1(a; b1, b2; c; x, y) for real arguments."""
    x, y = float(x), float(y)
    if max(abs(x), abs(y)) <= 0.8:
        return float(appell_f1_series(a, b1, b2, c, x, y, config))
    if 0 < a < c and x < 1 and y < 1:
        return appell_f1_integral(a, b1, b2, c, x, y)
    raise DomainError("arguments outside both the series and the integral domains")


# ---------------------------------------------------------------- Horn G2

def horn_g2(alpha: float, beta: float, gamma_p: float, delta: float, x, y,
            config: SeriesConfig = DEFAULT_SERIES):
    """Horn's G2 double series inside the open unit bidisk."""
    x, y = np.broadcast_arrays(np.asarray(x), np.asarray(y))
    if np.any(np.abs(x) >= 1) or np.any(np.abs(y) >= 1):
        raise DomainError("G2 series is only evaluated inside the unit bidisk")
    dtype = complex if (np.iscomplexobj(x) or np.iscomplexobj(y)) else float
    x = x.astype(dtype)
    y = y.astype(dtype)
    xs = [np.ones_like(x)]
    ys = [np.ones_like(y)]
    g_pos, g_neg = [1.0], [1.0]   # (gamma)_j and (gamma)_{-j}
    d_pos, d_neg = [1.0], [1.0]
    total = np.ones_like(x)
    quiet = 0
    N = 0
    while True:
        N += 1
        xs.append(xs[-1] * ((alpha + N - 1) / N) * x)
        ys.append(ys[-1] * ((beta + N - 1) / N) * y)
        g_pos.append(g_pos[-1] * (gamma_p + N - 1))
        d_pos.append(d_pos[-1] * (delta + N - 1))
        for seq, base in ((g_neg, gamma_p), (d_neg, delta)):
            den = base - N
            if den == 0.0:
                raise PoleError("negative-shift Pochhammer symbol hits a pole")
            seq.append(seq[-1] / den)
        diag = np.zeros_like(x)
        for m in range(N + 1):
            n = N - m
            j = n - m
            cg = g_pos[j] if j >= 0 else g_neg[-j]
            cd = d_pos[-j] if j <= 0 else d_neg[j]
            diag = diag + xs[m] * ys[n] * (cg * cd)
        total = total + diag
        if np.all(np.abs(diag) <= config.rel_tol * np.abs(total)):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
        _check_terms(N, config, "Horn G2 series")
    return total[()] if total.ndim == 0 else total


# ---------------------------------------------------------------- F1 continuation

GUARD_RADIUS = 1e-6


def f1_connection_generic(alpha: float, beta_p: float, beta: float, gamma_: float, y: float,
                          x: float, config: SeriesConfig = DEFAULT_SERIES) -> float:
    """F1(alpha; beta', beta; gamma; y, x) for x < -1 < y < 0 via F1 at (1/x, y/x) and G2.

    The generic continuation needs gamma, beta - alpha and beta - gamma away
    from the integers; closer than ``GUARD_RADIUS`` the logarithmic formulas
    must be used instead.
    """
    for v in (gamma_, beta - alpha, beta - gamma_):
        if abs(v - round(v)) < GUARD_RADIUS:
            raise DegenerateParametersError(
                "degenerate parameters: use the logarithmic connection formulas")
    if not (x < -1.0 < y < 0.0):
        raise DomainError("generic continuation is evaluated on x < -1 < y < 0")
    t1 = (gamma(beta - alpha) * gamma(gamma_) * rgamma(beta) * rgamma(gamma_ - alpha)
          * (-x) ** (-alpha)
          * appell_f1_series(alpha, 1 + alpha - gamma_, beta_p, 1 + alpha - beta, 1 / x, y / x, config))
    t2 = (gamma(alpha - beta) * gamma(gamma_) * rgamma(alpha) * rgamma(gamma_ - beta)
          * (-x) ** (-beta)
          * horn_g2(beta, beta_p, alpha - beta, 1 + beta - gamma_, -1 / x, -y, config))
    return float(t1 + t2)
