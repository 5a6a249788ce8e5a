"""Compiled scalar kernels shared by the sampling, event and quadrature code.

Everything here is ``numba.njit``-compiled and operates on plain floats or
unsigned integers so that it can be called from the Monte Carlo hot loops.
The Python-facing wrappers live in :mod:`stqp_goe.gauss` and
:mod:`stqp_goe.rng`.
"""

import math

import numpy as np
from numba import njit

SQRT2 = math.sqrt(2.0)
INV_SQRT2 = 1.0 / SQRT2
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# below this the erfc route loses relative accuracy to denormals
_CF_CUTOFF = -38.0
_LOG_SERIES_CUTOFF = -30.0

_M32 = np.uint64(0xFFFFFFFF)
_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_PHILOX_W0 = np.uint64(0x9E3779B9)
_PHILOX_W1 = np.uint64(0xBB67AE85)
_SH32 = np.uint64(32)
_SH11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53


@njit(cache=True)
def norm_pdf(x):
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


@njit(cache=True)
def _mills_cf(y):
    # y > 0; returns y * (1 - Phi(y)) / phi(y) via the Laplace continued fraction
    acc = y
    for k in range(60, 0, -1):
        acc = y + k / acc
    return y / acc


@njit(cache=True)
def norm_cdf(x):
    if x < _CF_CUTOFF:
        y = -x
        return math.exp(-0.5 * y * y - LOG_SQRT_2PI + math.log(_mills_cf(y) / y))
    return 0.5 * math.erfc(-x * INV_SQRT2)


@njit(cache=True)
def norm_sf(x):
    return norm_cdf(-x)


@njit(cache=True)
def log_norm_cdf(x):
    if x > _LOG_SERIES_CUTOFF:
        if x > 0.0:
            return math.log1p(-0.5 * math.erfc(x * INV_SQRT2))
        return math.log(0.5 * math.erfc(-x * INV_SQRT2))
    y = -x
    return -0.5 * y * y - LOG_SQRT_2PI + math.log(_mills_cf(y) / y)


@njit(cache=True)
def _ppnd16_lower(p):
    # Wichura AS241 for 0 < p <= 0.5, returns a value <= 0
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2509.0809287301226727 * r + 33430.575583588128105) * r
                    + 67265.770927008700853) * r + 45921.953931549871457) * r
                  + 13731.693765509461125) * r + 1971.5909503065514427) * r
                + 133.14166789178437745) * r + 3.387132872796366608)
        den = (((((((5226.495278852545925 * r + 28729.085735721942674) * r
                    + 39307.89580009271061) * r + 21213.794301586595867) * r
                  + 5394.1960214247511077) * r + 687.1870074920579083) * r
                + 42.313330701600911252) * r + 1.0)
        return q * num / den
    r = math.sqrt(-math.log(p))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r
                    + 0.24178072517745061177) * r + 1.27045825245236838258) * r
                  + 3.64784832476320460504) * r + 5.7694972214606914055) * r
                + 4.6303378461565452959) * r + 1.42343711074968357734)
        den = (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r
                    + 0.0151986665636164571966) * r + 0.14810397642748007459) * r
                  + 0.68976733498510000455) * r + 1.6763848301838038494) * r
                + 2.05319162663775882187) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 0.0012426609473880784386) * r + 0.026532189526576123093) * r
                  + 0.29656057182850489123) * r + 1.7848265399172913358) * r
                + 5.4637849111641143699) * r + 6.6579046435011037772)
        den = (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r
                    + 1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r
                  + 0.0148753612908506148525) * r + 0.13692988092273580531) * r
                + 0.59983220655588793769) * r + 1.0)
    return -num / den


@njit(cache=True)
def norm_ppf(p):
    """Inverse standard normal CDF: rational seed plus two Newton steps."""
    if p > 0.5:
        # 1 - p is exact on [0.5, 1)
        return -norm_ppf(1.0 - p)
    x = _ppnd16_lower(p)
    for _ in range(2):
        dens = norm_pdf(x)
        if dens <= 0.0:
            break
        x -= (norm_cdf(x) - p) / dens
    return x


@njit(cache=True)
def psi(u):
    """Phi(sqrt(2) * Phi^{-1}(u))."""
    return norm_cdf(SQRT2 * norm_ppf(u))


@njit(cache=True)
def _mulhilo(a, b):
    prod = a * b
    return prod & _M32, prod >> _SH32


@njit(cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32-10 block function on uint64-held 32-bit words."""
    for rnd in range(10):
        lo0, hi0 = _mulhilo(_PHILOX_M0, c0)
        lo1, hi1 = _mulhilo(_PHILOX_M1, c2)
        n0 = hi1 ^ c1 ^ k0
        n2 = hi0 ^ c3 ^ k1
        c0 = n0 & _M32
        c1 = lo1
        c2 = n2 & _M32
        c3 = lo0
        if rnd < 9:
            k0 = (k0 + _PHILOX_W0) & _M32
            k1 = (k1 + _PHILOX_W1) & _M32
    return c0, c1, c2, c3


@njit(cache=True)
def stream_uniform(seed, index, entry):
    """Uniform on (0, 1) for draw ``entry`` of stream (seed, index).

    Counter = (index, entry // 2), key = seed; even entries use the first
    two output words, odd entries the last two.
    """
    seed = np.uint64(seed)
    index = np.uint64(index)
    entry = np.uint64(entry)
    block = entry >> np.uint64(1)
    w0, w1, w2, w3 = philox4x32(index & _M32, index >> _SH32,
                                block & _M32, block >> _SH32,
                                seed & _M32, seed >> _SH32)
    if entry & np.uint64(1):
        bits = (w3 << _SH32) | w2
    else:
        bits = (w1 << _SH32) | w0
    return ((bits >> _SH11) + 0.5) * _TWO_M53


@njit(cache=True)
def entry_index(n, a, b):
    """Draw index of matrix entry (a, b), 0-based, diagonal first then upper rows."""
    if a == b:
        return a
    if a > b:
        a, b = b, a
    return n + a * n - (a * (a + 1)) // 2 + (b - a - 1)


@njit(cache=True)
def sample_goe_into(seed, index, n, out):
    for a in range(n):
        out[a, a] = norm_ppf(stream_uniform(seed, index, a))
    for a in range(n):
        for b in range(a + 1, n):
            e = entry_index(n, a, b)
            val = INV_SQRT2 * norm_ppf(stream_uniform(seed, index, e))
            out[a, b] = val
            out[b, a] = val


@njit(cache=True)
def sample_diagonal_into(seed, index, n, out):
    for a in range(n):
        out[a] = norm_ppf(stream_uniform(seed, index, a))
