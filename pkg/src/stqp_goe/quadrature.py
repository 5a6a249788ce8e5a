"""Adaptive Gauss-Kronrod (10/21-point) quadrature.

Two front ends share one rule: :func:`integrate_1d` drives a vectorized
Python integrand, and :func:`adapt` is a compiled version used for the
nested integrals, where the integrand is itself a compiled function
``f(x, params, counter)``.
"""

import heapq
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .validation import check_int

# QUADPACK qk21 abscissae (descending) and weights
_XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
])
_WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525452210, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
# 10-point Gauss weights, attached to _XGK[1], _XGK[3], ..., _XGK[9]
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[[1, 3, 5, 7, 9]] = _WG
GAUSS_WEIGHTS[[19, 17, 15, 13, 11]] = _WG

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class QuadSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-300
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        check_int(self.max_subdivisions, "max_subdivisions", minimum=1)

    def tighter(self, factor):
        return QuadSpec(self.rel_tol * factor, self.abs_tol, self.max_subdivisions)


NESTED = QuadSpec(rel_tol=1e-5)


@dataclass(frozen=True)
class QuadResult:
    value: float
    err_est: float
    evals: int
    converged: bool = True

    def scaled(self, factor, extra_err=0.0):
        return QuadResult(self.value * factor, abs(factor) * self.err_est + extra_err,
                          self.evals, self.converged)

    def __float__(self):
        return float(self.value)


def _error_estimate(kron, gauss, resabs, resasc):
    err = abs(kron - gauss)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > _TINY / (50.0 * _EPS):
        err = max(50.0 * _EPS * resabs, err)
    return err


def _panel(f, a, b):
    half = 0.5 * (b - a)
    center = 0.5 * (a + b)
    fx = np.asarray(f(center + half * NODES), dtype=float)
    if fx.shape != NODES.shape:
        raise ValueError("integrand must map an array of nodes to an array of the same shape")
    if not np.all(np.isfinite(fx)):
        raise FloatingPointError(f"integrand not finite on [{a}, {b}]")
    kron = float(KRONROD_WEIGHTS @ fx)
    gauss = float(GAUSS_WEIGHTS @ fx)
    mean = kron * 0.5
    resabs = float(KRONROD_WEIGHTS @ np.abs(fx)) * abs(half)
    resasc = float(KRONROD_WEIGHTS @ np.abs(fx - mean)) * abs(half)
    return kron * half, _error_estimate(kron * half, gauss * half, resabs, resasc)


def _adaptive(f, points, spec):
    heap = []
    evals = 0
    for a, b in zip(points[:-1], points[1:]):
        val, err = _panel(f, a, b)
        evals += 21
        heapq.heappush(heap, (-err, a, b, val))
    total = math.fsum(item[3] for item in heap)
    toterr = math.fsum(-item[0] for item in heap)
    while toterr > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if len(heap) >= spec.max_subdivisions:
            return total, toterr, evals, False
        neg_err, a, b, val = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        if not a < mid < b:
            heapq.heappush(heap, (neg_err, a, b, val))
            return total, toterr, evals, False
        left = _panel(f, a, mid)
        right = _panel(f, mid, b)
        evals += 42
        heapq.heappush(heap, (-left[1], a, mid, left[0]))
        heapq.heappush(heap, (-right[1], mid, b, right[0]))
        total = math.fsum(item[3] for item in heap)
        toterr = math.fsum(-item[0] for item in heap)
    return total, toterr, evals, True


def integrate_1d(f, a, b, spec=None, points=None):
    """Integrate a vectorized ``f`` over [a, b]; ``b`` may be ``inf``.

    ``points`` are optional interior breakpoints.  A semi-infinite range is
    split at ``a + 1`` and the tail is mapped by ``x = a + e^u``, integrated
    over unit panels in u until they stop contributing.  Non-convergence is
    reported through ``QuadResult.converged`` with the best estimate kept.
    """
    spec = spec or QuadSpec()
    a = float(a)
    b = float(b)
    if not a < b:
        if a == b:
            return QuadResult(0.0, 0.0, 0)
        raise ValueError("integrate_1d needs a <= b")
    if math.isinf(a):
        raise ValueError("lower limit must be finite")
    if not math.isinf(b):
        pts = sorted({a, b, *(float(p) for p in (points or ()) if a < p < b)})
        return QuadResult(*_adaptive(f, pts, spec))
    head = integrate_1d(f, a, a + 1.0, spec, points)

    def g(u):
        ex = np.exp(u)
        return f(a + ex) * ex

    total, err, evals, ok = head.value, head.err_est, head.evals, head.converged
    quiet = 0
    for k in range(700):
        val, e, ev, c = _adaptive(g, [float(k), float(k + 1)], spec)
        total += val
        err += e
        evals += ev
        ok = ok and c
        quiet = quiet + 1 if abs(val) <= spec.rel_tol * 1e-3 * abs(total) + spec.abs_tol else 0
        if quiet >= 2:
            break
    else:
        ok = False
    return QuadResult(total, err, evals, ok)


# compiled twin --------------------------------------------------------------

# tuples are frozen into the compiled code, which keeps it cacheable
_NB_NODES = tuple(float(v) for v in NODES)
_NB_KW = tuple(float(v) for v in KRONROD_WEIGHTS)
_NB_GW = tuple(float(v) for v in GAUSS_WEIGHTS)


# takes a compiled function argument, which numba cannot cache to disk
@njit
def _nb_panel(f, p, cnt, a, b):
    half = 0.5 * (b - a)
    center = 0.5 * (a + b)
    fx = np.empty(21)
    kron = 0.0
    gauss = 0.0
    for i in range(21):
        fx[i] = f(center + half * _NB_NODES[i], p, cnt)
        kron += _NB_KW[i] * fx[i]
        gauss += _NB_GW[i] * fx[i]
    cnt[0] += 21
    mean = 0.5 * kron
    resabs = 0.0
    resasc = 0.0
    for i in range(21):
        resabs += _NB_KW[i] * abs(fx[i])
        resasc += _NB_KW[i] * abs(fx[i] - mean)
    kron *= half
    gauss *= half
    resabs *= abs(half)
    resasc *= abs(half)
    err = abs(kron - gauss)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > 2.2250738585072014e-308 / (50.0 * 2.220446049250313e-16):
        err = max(50.0 * 2.220446049250313e-16 * resabs, err)
    return kron, err


@njit
def adapt(f, p, cnt, breaks, rtol, atol, limit):
    """Globally adaptive GK21 of compiled ``f`` over the partition ``breaks``.

    Returns ``(value, err_est, converged)``; ``cnt[0]`` accumulates the
    number of integrand evaluations.
    """
    npan = breaks.shape[0] - 1
    cap = max(limit, npan)
    lo = np.empty(cap)
    hi = np.empty(cap)
    val = np.empty(cap)
    err = np.empty(cap)
    for i in range(npan):
        lo[i] = breaks[i]
        hi[i] = breaks[i + 1]
        val[i], err[i] = _nb_panel(f, p, cnt, lo[i], hi[i])
    while True:
        total = 0.0
        toterr = 0.0
        worst = 0
        for i in range(npan):
            total += val[i]
            toterr += err[i]
            if err[i] > err[worst]:
                worst = i
        if toterr <= max(atol, rtol * abs(total)):
            return total, toterr, True
        if npan >= cap:
            return total, toterr, False
        a = lo[worst]
        b = hi[worst]
        mid = 0.5 * (a + b)
        if not (a < mid < b):
            return total, toterr, False
        hi[worst] = mid
        val[worst], err[worst] = _nb_panel(f, p, cnt, a, mid)
        lo[npan] = mid
        hi[npan] = b
        val[npan], err[npan] = _nb_panel(f, p, cnt, mid, b)
        npan += 1
