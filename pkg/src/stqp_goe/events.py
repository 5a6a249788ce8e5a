"""Two-coordinate edge events and their conditional probabilities.

Ranks are 1-based: rank r refers to the r-th smallest diagonal entry
``inst.z[r - 1]``.  For a rank pair i < j the edge between the two vertices
dips below the best vertex value exactly when ``X_ij < tau_ij``; given the
diagonal, that happens with probability ``p_ij = Phi(sqrt(2) tau_ij)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _kernels as _k
from .goe import OrderedInstance
from .validation import check_int, check_open_unit, check_ordered

SQRT2 = math.sqrt(2.0)

# slack on the uniform-scale prefilter; far above quantile round-off
_PREFILTER = 1e-7

# layout of the per-sample edge statistics row
EDGE_FIELDS = ("any_edge", "i_s", "i_a", "i_b", "q", "cond_s", "cond_a", "cond_b",
               "sum_p2", "sum_p3", "cond_total")
N_EDGE = len(EDGE_FIELDS)


@dataclass(frozen=True)
class PairEventReport:
    any_edge: bool
    i_s: bool
    i_a: bool
    i_b: bool
    q: float
    cond_s: float
    cond_a: float
    cond_b: float
    sum_p2: float
    sum_p3: float

    @property
    def cond_total(self):
        return self.cond_s + self.cond_a + self.cond_b


def _check_inst(inst):
    if not isinstance(inst, OrderedInstance):
        raise TypeError("expected an OrderedInstance (see order_instance)")
    return inst


@njit(cache=True)
def _tau(z, i, j):
    # 0-based ranks, i < j
    return z[0] - math.sqrt((z[i] - z[0]) * (z[j] - z[0]))


def pair_threshold(inst, i, j):
    """Critical off-diagonal value tau_ij for ranks 1 <= i < j <= n."""
    inst = _check_inst(inst)
    i = check_int(i, "i", minimum=1)
    j = check_int(j, "j", minimum=1, maximum=inst.n)
    if i >= j:
        raise ValueError(f"pair_threshold needs i < j, got i={i}, j={j}")
    return float(_tau(inst.z, i - 1, j - 1))


@njit(cache=True)
def _pair_prob(u, v, w):
    a = _k.norm_ppf(u)
    inner = (_k.norm_ppf(v) - a) * (_k.norm_ppf(w) - a)
    # continuous extension at v = u: clamp round-off below zero
    return _k.norm_cdf(SQRT2 * (a - math.sqrt(max(inner, 0.0))))


def pair_prob_p(u, v, w):
    """Edge probability p(u, v, w) for uniform-scale diagonal values u <= v <= w."""
    u, v, w = (float(check_open_unit(t, name)) for t, name in ((u, "u"), (v, "v"), (w, "w")))
    check_ordered([u, v, w], ["u", "v", "w"])
    return float(_pair_prob(u, v, w))


@njit(cache=True)
def _edge_stats(z, x_off, out):
    """Fill ``out`` (length N_EDGE) from ordered diagonal and off-diagonals."""
    n = z.shape[0]
    z0 = z[0]
    q = _k.norm_cdf(SQRT2 * z0)
    i_s = False
    for j in range(1, n):
        if x_off[0, j] < z0:
            i_s = True
            break
    log_s = (n - 1) * math.log1p(-q)
    log_a = 0.0
    sum_p2 = 0.0
    i_a = False
    if n > 2:
        d1 = z[1] - z0
        for j in range(2, n):
            tau = z0 - math.sqrt(d1 * (z[j] - z0))
            p = _k.norm_cdf(SQRT2 * tau)
            sum_p2 += p
            log_a += math.log1p(-p)
            if x_off[1, j] < tau:
                i_a = True
    log_b = 0.0
    sum_p3 = 0.0
    i_b = False
    for i in range(2, n):
        di = z[i] - z0
        for j in range(i + 1, n):
            tau = z0 - math.sqrt(di * (z[j] - z0))
            p = _k.norm_cdf(SQRT2 * tau)
            sum_p3 += p
            log_b += math.log1p(-p)
            if x_off[i, j] < tau:
                i_b = True
    _finish(out, i_s, i_a, i_b, q, log_s, log_a, log_b, sum_p2, sum_p3)


@njit(cache=True)
def _finish(out, i_s, i_a, i_b, q, log_s, log_a, log_b, sum_p2, sum_p3):
    i_a = i_a and not i_s
    i_b = i_b and not i_s and not i_a
    out[0] = 1.0 if (i_s or i_a or i_b) else 0.0
    out[1] = 1.0 if i_s else 0.0
    out[2] = 1.0 if i_a else 0.0
    out[3] = 1.0 if i_b else 0.0
    out[4] = q
    out[5] = -math.expm1(log_s)
    out[6] = math.exp(log_s) * -math.expm1(log_a)
    out[7] = math.exp(log_s + log_a) * -math.expm1(log_b)
    out[8] = sum_p2
    out[9] = sum_p3
    out[10] = -math.expm1(log_s + log_a + log_b)


@njit(cache=True)
def _below(seed, index, n, a, b, tau, p):
    """Whether the off-diagonal draw for matrix entry (a, b) lies below tau.

    Decides on the uniform scale when the draw is clearly above ``p``, and
    otherwise evaluates the exact variate, so the answer is identical to
    comparing the sampled matrix entry.
    """
    u = _k.stream_uniform(seed, index, _k.entry_index(n, a, b))
    if u > p * (1.0 + _PREFILTER) + 1e-300:
        return False
    return _k.INV_SQRT2 * _k.norm_ppf(u) < tau


@njit(cache=True)
def edge_stats_from_stream(seed, index, n, diag, perm, z, out):
    """Edge statistics of sample (seed, index) without materializing Q."""
    _k.sample_diagonal_into(seed, index, n, diag)
    perm[:] = np.argsort(diag, kind="mergesort")
    for r in range(n):
        z[r] = diag[perm[r]]
    z0 = z[0]
    q = _k.norm_cdf(SQRT2 * z0)
    i_s = False
    for j in range(1, n):
        if _below(seed, index, n, perm[0], perm[j], z0, q):
            i_s = True
            break
    log_s = (n - 1) * math.log1p(-q)
    log_a = 0.0
    sum_p2 = 0.0
    i_a = False
    if n > 2:
        d1 = z[1] - z0
        for j in range(2, n):
            tau = z0 - math.sqrt(d1 * (z[j] - z0))
            p = _k.norm_cdf(SQRT2 * tau)
            sum_p2 += p
            log_a += math.log1p(-p)
            if not (i_s or i_a) and _below(seed, index, n, perm[1], perm[j], tau, p):
                i_a = True
    log_b = 0.0
    sum_p3 = 0.0
    i_b = False
    for i in range(2, n):
        di = z[i] - z0
        for j in range(i + 1, n):
            tau = z0 - math.sqrt(di * (z[j] - z0))
            p = _k.norm_cdf(SQRT2 * tau)
            sum_p3 += p
            log_b += math.log1p(-p)
            if not (i_s or i_a or i_b) and _below(seed, index, n, perm[i], perm[j], tau, p):
                i_b = True
    _finish(out, i_s, i_a, i_b, q, log_s, log_a, log_b, sum_p2, sum_p3)


def classify_edges(inst):
    """All edge indicators and conditional terms for one ordered instance."""
    inst = _check_inst(inst)
    out = np.empty(N_EDGE)
    _edge_stats(np.ascontiguousarray(inst.z), np.ascontiguousarray(inst.x_off), out)
    return PairEventReport(
        any_edge=bool(out[0]), i_s=bool(out[1]), i_a=bool(out[2]), i_b=bool(out[3]),
        q=float(out[4]), cond_s=float(out[5]), cond_a=float(out[6]), cond_b=float(out[7]),
        sum_p2=float(out[8]), sum_p3=float(out[9]),
    )


def one_row_indicators(inst, k):
    """One-row events E_{k,j} = {X_kj < 2 z_(1) - z_(k)} for ranks j > k.

    Returns ``(any_event, events)`` with ``events[m]`` for rank ``j = k + 1 + m``.
    """
    inst = _check_inst(inst)
    k = check_int(k, "k", minimum=1, maximum=inst.n - 1)
    threshold = 2.0 * inst.z[0] - inst.z[k - 1]
    events = [bool(x < threshold) for x in inst.x_off[k - 1, k:]]
    return any(events), events


ONE_ROW_FIELDS = ("any_e", "frac_e", "cond_e", "any_f", "violations")
N_ONE_ROW = len(ONE_ROW_FIELDS)


@njit(cache=True)
def one_row_from_stream(seed, index, n, k, diag, perm, z, out):
    """One-row statistics for rank k (1-based) of sample (seed, index).

    Also classifies the exact events F_kj on the same draws and counts pairs
    where F_kj holds but E_kj does not.
    """
    _k.sample_diagonal_into(seed, index, n, diag)
    perm[:] = np.argsort(diag, kind="mergesort")
    for r in range(n):
        z[r] = diag[perm[r]]
    r = k - 1
    z0 = z[0]
    thr = 2.0 * z0 - z[r]
    cond_e = _k.norm_cdf(SQRT2 * thr)
    d = z[r] - z0
    count_e = 0
    any_f = False
    violations = 0
    for j in range(r + 1, n):
        u = _k.stream_uniform(seed, index, _k.entry_index(n, perm[r], perm[j]))
        x = _k.INV_SQRT2 * _k.norm_ppf(u)
        e = x < thr
        f = x < z0 - math.sqrt(d * (z[j] - z0))
        if e:
            count_e += 1
        if f:
            any_f = True
            if not e:
                violations += 1
    out[0] = 1.0 if count_e > 0 else 0.0
    out[1] = count_e / (n - k)
    out[2] = cond_e
    out[3] = 1.0 if any_f else 0.0
    out[4] = violations
