"""Hermite polynomials, Hermite coefficients of level indicators, and rank.

Coefficients are a_k = <1{f(sigma x) >= u}, H_k>_phi / sqrt(k!), with H_k the
probabilists' Hermite polynomials.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss
from scipy.stats import norm

from .errors import HermiteRangeError, NumericAccuracyError

K_MAX_EVAL = 60
_SQRT2PI = math.sqrt(2.0 * math.pi)


def hermite_eval(k, x):
    """H_k(x) by the three-term recurrence; vectorized in x."""
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise HermiteRangeError(f"order must be a nonnegative integer, got {k!r}")
    if k > K_MAX_EVAL:
        raise HermiteRangeError(f"order {k} exceeds the supported maximum {K_MAX_EVAL}")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if k == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for j in range(1, k):
        h_prev, h = h, x * h - j * h_prev
    return h if h.ndim else float(h)


def normalized_hermite_table(kmax, x):
    """Rows h_0..h_kmax of H_k/sqrt(k!) at x; stable for large k."""
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = x
    for j in range(1, kmax):
        out[j + 1] = (x * out[j] - math.sqrt(j) * out[j - 1]) / math.sqrt(j + 1)
    return out


def orthogonality_matrix(kmax, nodes=None):
    """Gram matrix of int H_k H_l phi dx by Gauss-Hermite quadrature."""
    n = nodes or (kmax + 2)
    x, w = hermegauss(n)
    w = w / _SQRT2PI
    H = np.array([hermite_eval(k, x) for k in range(kmax + 1)])
    return (H * w) @ H.T


def _phi(x):
    return np.exp(-0.5 * x * x) / _SQRT2PI


def _gl_interval(kmax, a, b, tol=1e-10, n0=32, nmax=4096):
    """Integrals of h_0..h_kmax * phi over [a, b] with node doubling."""
    prev = None
    n = n0
    while n <= nmax:
        t, w = leggauss(n)
        x = 0.5 * (b - a) * t + 0.5 * (a + b)
        vals = normalized_hermite_table(kmax, x) * (_phi(x) * w * 0.5 * (b - a))
        cur = vals.sum(axis=1)
        if prev is not None:
            err = float(np.max(np.abs(cur - prev)))
            if err < tol:
                return cur, err
        prev = cur
        n *= 2
    return prev, err


def _bisect_root(g, lo, hi, tol=1e-12):
    glo = g(lo) >= 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (g(mid) >= 0) == glo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def excursion_intervals(f, u, sigma, L):
    """Intervals of [-L, L] on which f(sigma x) >= u.

    Uses the declared monotone pieces of f; within each piece the set is an
    interval whose endpoint is located by bisection.
    """
    cuts = [-L] + sorted(b / sigma for b in f.breakpoints if -L < b / sigma < L) + [L]

    def g(x):
        return float(f(sigma * x)) - u

    segs = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        # endpoints of open pieces: step inside to avoid branch jumps
        eps = 1e-13 * max(1.0, abs(lo), abs(hi))
        a, b = lo + eps, hi - eps
        ina, inb = g(a) >= 0, g(b) >= 0
        if ina and inb:
            segs.append([lo, hi])
        elif ina != inb:
            r = _bisect_root(g, a, b)
            segs.append([lo, r] if ina else [r, hi])
    merged = []
    for s in segs:
        if merged and abs(merged[-1][1] - s[0]) < 1e-14:
            merged[-1][1] = s[1]
        else:
            merged.append(s)
    return [tuple(s) for s in merged]


def _quadrature_coefficients(f, u, sigma, kmax, tol=1e-10, fail=1e-9):
    L = max(10.0, 2.0 * math.sqrt(kmax + 1) + 8.0)
    total = np.zeros(kmax + 1)
    err = 0.0
    for a, b in excursion_intervals(f, u, sigma, L):
        val, e = _gl_interval(kmax, a, b, tol=tol)
        total += val
        err += e
    if err > fail:
        raise NumericAccuracyError(f"quadrature error estimate {err:.3g} above {fail:g}", err)
    return total, err


def hermite_coefficients(f, u, sigma, kmax):
    """a_0..a_kmax for the indicator 1{f(sigma x) >= u}.

    Monotone f uses the generalized inverse for a_0 and a_1; every other
    entry comes from piecewise Gauss-Legendre quadrature.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    a, _ = _quadrature_coefficients(f, u, sigma, kmax)
    if f.monotone:
        c = f.generalized_inverse(u) / sigma
        a[0] = norm.sf(c)
        if kmax >= 1:
            a[1] = 0.0 if math.isinf(c) else float(_phi(c))
    return a


def hermite_coefficient(f, u, sigma, k):
    """a_k = <1{f(sigma .) >= u}, H_k>_phi / sqrt(k!)."""
    if k < 0:
        raise HermiteRangeError("k must be nonnegative")
    return float(hermite_coefficients(f, u, sigma, k)[k])


def inner_product(f, u, sigma, k):
    """Unnormalized <1{f(sigma .) >= u}, H_k>_phi = sqrt(k!) a_k."""
    return hermite_coefficient(f, u, sigma, k) * math.sqrt(math.factorial(k))


@dataclass
class HermiteProfile:
    coefficients: list
    truncation_order: int
    u: float
    sigma: float
    rank: object = "undetected"
    inner_products: list = field(default_factory=list)

    def to_dict(self):
        return {"coefficients": list(map(float, self.coefficients)),
                "truncation_order": self.truncation_order, "u": self.u,
                "sigma": self.sigma, "rank": self.rank}


def hermite_rank(f, u, sigma=1.0, tol=1e-8, kmax=12):
    """Smallest k >= 1 with |<F_u, H_k>| > tol, or "undetected" up to kmax."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = hermite_coefficients(f, u, sigma, kmax)
    for k in range(1, kmax + 1):
        if abs(a[k]) * math.sqrt(math.factorial(k)) > tol:
            return k
    return "undetected"


def hermite_profile(f, u, sigma=1.0, K=12, tol=1e-8):
    a = hermite_coefficients(f, u, sigma, K)
    ip = [float(a[k]) * math.sqrt(math.factorial(k)) for k in range(K + 1)]
    rank = next((k for k in range(1, K + 1) if abs(ip[k]) > tol), "undetected")
    return HermiteProfile(list(map(float, a)), K, float(u), float(sigma), rank, ip)
