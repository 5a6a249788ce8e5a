"""Standard-normal primitives and the lower-tail scale functions.

All public functions accept scalars or arrays and return the same shape
(floats for scalar input).  Probabilities are carried as plain reals.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _kernels as _k
from .validation import check_finite, check_int, check_open_unit

SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)


# Element-wise loops over flat float arrays.  Plain njit loops load from the
# on-disk cache, unlike vectorize ufuncs, which rebuild on every import.
@njit(cache=True)
def _cdf_loop(x, out):
    for i in range(x.shape[0]):
        out[i] = _k.norm_cdf(x[i])


@njit(cache=True)
def _logcdf_loop(x, out):
    for i in range(x.shape[0]):
        out[i] = _k.log_norm_cdf(x[i])


@njit(cache=True)
def _pdf_loop(x, out):
    for i in range(x.shape[0]):
        out[i] = _k.norm_pdf(x[i])


@njit(cache=True)
def _ppf_loop(p, out):
    for i in range(p.shape[0]):
        out[i] = _k.norm_ppf(p[i])


@njit(cache=True)
def _psi_loop(u, out):
    for i in range(u.shape[0]):
        out[i] = _k.psi(u[i])


def _elementwise(loop):
    def apply(x):
        arr = np.asarray(x, dtype=float)
        flat = np.ascontiguousarray(arr).ravel()
        out = np.empty_like(flat)
        loop(flat, out)
        return out.reshape(arr.shape)
    return apply


_cdf = _elementwise(_cdf_loop)
_logcdf = _elementwise(_logcdf_loop)
_pdf = _elementwise(_pdf_loop)
_ppf = _elementwise(_ppf_loop)
_psi = _elementwise(_psi_loop)


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def normal_cdf(x):
    """Phi(x), with relative accuracy kept in the lower tail."""
    return _out(_cdf(check_finite(x)))


def normal_pdf(x):
    return _out(_pdf(check_finite(x)))


def log_normal_cdf(x):
    return _out(_logcdf(check_finite(x)))


def normal_quantile(p):
    """Inverse of :func:`normal_cdf` on (0, 1).

    Seeded by Wichura's AS241 rational approximation and polished with two
    Newton steps on ``normal_cdf`` so that the round trip is tight.
    """
    return _out(_ppf(check_open_unit(p)))


def mills_interval(x):
    """Mills sandwich ``(x/(1+x^2) phi(x), phi(x)/x)`` for ``1 - Phi(x)``, x > 0."""
    x = check_finite(x)
    if np.any(x <= 0):
        raise ValueError("mills_interval requires x > 0")
    dens = _pdf(x)
    return _out(x / (1.0 + x * x) * dens), _out(dens / x)


def psi(u):
    """GOE off-diagonal tail transfer ``Phi(sqrt(2) * Phi^{-1}(u))``."""
    return _out(_psi(check_open_unit(u, "u")))


def psi_refined(u):
    """Two-term small-u expansion ``sqrt(pi) u^2 (s + 3/(2s))``, s = -Phi^{-1}(u)."""
    u = check_open_unit(u, "u")
    if np.any(u >= 0.5):
        raise ValueError("psi_refined is an expansion for u < 1/2")
    s = -_ppf(u)
    return _out(SQRT_PI * u * u * (s + 1.5 / s))


@dataclass(frozen=True)
class TailScale:
    """Lower-tail scales at rank-like position x out of n.

    s is the quantile scale ``-Phi^{-1}(x/n)``, big_l the exact logarithmic
    scale ``log(n/x)`` and ell the positive envelope ``1 + log_+(n/x)``.
    """

    s: float
    big_l: float
    ell: float


def tail_scale(n, x):
    n = check_int(n, "n", minimum=2)
    x = float(check_finite(x))
    if not 0.0 < x < n:
        raise ValueError(f"x must lie in (0, n), got x={x} for n={n}")
    big_l = math.log(n / x)
    return TailScale(s=-float(_ppf(x / n)), big_l=big_l, ell=1.0 + max(0.0, big_l))


@dataclass(frozen=True)
class QuantileGap:
    s: float
    t: float
    h: float


def quantile_gap(u, v):
    """Gap ``h = s - t`` between the lower-tail quantiles of u <= v."""
    u = float(check_open_unit(u, "u"))
    v = float(check_open_unit(v, "v"))
    if u > v:
        raise ValueError(f"quantile_gap requires u <= v, got u={u}, v={v}")
    s = -float(_ppf(u))
    t = -float(_ppf(v))
    return QuantileGap(s=s, t=t, h=s - t)
