"""Finite-n probabilities by quadrature, their asymptotes and the bound evaluators.

Everything is written in the rescaled variables ``u = x/n``, ``v = y/n`` so
that the mass sits at x, y = O(1).  The nested quantities (G, I_n, A_n,
E S_3, P_{n,k}) run fully compiled: an outer x-integral, a middle y-integral
along ``y = x + delta r^2`` with ``delta = x / max(s^2, 1)`` (which resolves
the square-root layer at y = x), and the G integral in ``z = -t + r^2``.
"""

import math
from enum import Enum

import numpy as np
from numba import njit
from scipy.special import gammaincc, gammaln, log_ndtr, ndtr, ndtri

from . import _kernels as _k
from .quadrature import NESTED, QuadResult, QuadSpec, adapt, integrate_1d
from .validation import check_finite, check_int, check_open_unit

SQRT2 = math.sqrt(2.0)
EULER_GAMMA = 0.5772156649
CONST_S = 2.0 * math.sqrt(2.0 * math.pi)
CONST_A = 3.0 * math.sqrt(math.pi / 2.0)
CONST_B = 9.0 * math.sqrt(math.pi / 2.0)

# z-range kept beyond the density peak in the G and H integrals
_Z_SPAN = 12.0
# v this close to 1 leaves H with no support
_H_EDGE = 1e-8
_INNER_LIMIT = 400


def truncation_point(n):
    return 40.0 + 10.0 * math.log(n)


def _outer_breaks(xmax):
    pts = [0.0]
    b = 2.0 ** -30
    while b < xmax:
        pts.append(b)
        b *= 2.0
    pts.append(xmax)
    return np.array(pts)


def _lower_quantile(x, n):
    """Phi^{-1}(x/n) without cancellation as x approaches n."""
    x = np.asarray(x, dtype=float)
    lo = ndtri(np.clip(x / n, 1e-300, 0.5))
    hi = -ndtri(np.clip((n - x) / n, 1e-300, 0.5))
    return np.where(x / n <= 0.5, lo, hi)


def _log1m(x, n):
    """log(1 - x/n)."""
    x = np.asarray(x, dtype=float)
    return np.where(x / n <= 0.5, np.log1p(-np.minimum(x / n, 0.5)), np.log(np.maximum(n - x, 1e-300) / n))


def _converged(res, spec):
    return res.converged and res.err_est <= spec.rel_tol * abs(res.value) + spec.abs_tol


# one-dimensional quantities ------------------------------------------------
# These integrands use scipy's normal ufuncs: vectorized and free of JIT
# start-up, which keeps one-off CLI evaluations fast.

def _min_average(n, g, spec, xmax=None):
    """∫_0^n g(x) (1 - x/n)^{n-1} dx, i.e. n E-average against the minimum's density.

    Truncated at ``40 + 10 log n`` using ``(1 - x/n)^{n-1} <= e^{-x(n-1)/n}``
    and ``0 <= g <= 1``.
    """
    top = float(n) if xmax is None else min(float(n), xmax)
    tail = 0.0
    if n > 1:
        cut = truncation_point(n)
        if cut < top:
            c = (n - 1) / n
            tail = math.exp(-c * cut) / c
            top = cut

    def f(x):
        return g(x) * np.exp((n - 1) * _log1m(x, n))

    res = integrate_1d(f, 0.0, top, spec, points=list(_outer_breaks(top)[1:-1]))
    return QuadResult(res.value, res.err_est + tail, res.evals, res.converged)


def normal_vs_min(n, a, spec=None):
    """P(Y_a <= M_n) for Y_a ~ N(0, 1/a^2) independent of the minimum of n standard normals."""
    n = check_int(n, "n", minimum=1)
    a = float(check_finite(a, "a"))
    if a < 1.0:
        raise ValueError(f"normal_vs_min requires a >= 1, got a={a}")
    return _min_average(n, lambda x: ndtr(a * _lower_quantile(x, n)), spec or QuadSpec())


def normal_vs_min_asymptote(n, a):
    n = check_int(n, "n", minimum=2)
    a2 = float(a) ** 2
    return math.exp(0.5 * (a2 - 1.0) * math.log(4.0 * math.pi) - math.log(a) + gammaln(a2 + 1.0)
                    - a2 * math.log(n) + 0.5 * (a2 - 1.0) * math.log(math.log(n)))


def beta_log(n, r, gamma, spec=None):
    """n ∫_0^1 u^r (1-u)^{n-1} log(1/u)^gamma du."""
    n = check_int(n, "n", minimum=1)
    r = float(check_finite(r, "r"))
    gamma = float(check_finite(gamma, "gamma"))
    if r < 0 or gamma < 0:
        raise ValueError("beta_log requires r >= 0 and gamma >= 0")
    spec = spec or QuadSpec()
    top = float(n)
    tail = 0.0
    if n > 1 and truncation_point(n) < n:
        top = truncation_point(n)
        c = (n - 1) / n
        # ∫_top^∞ t^r e^{-ct} dt, times the bound log(n/t)^gamma <= log(n)^gamma
        tail = (math.exp(gammaln(r + 1) - (r + 1) * math.log(c) - r * math.log(n))
                * gammaincc(r + 1, c * top) * math.log(n) ** gamma)

    def f(t):
        logs = np.log(n / t)
        return (t / n) ** r * np.exp((n - 1) * _log1m(t, n)) * np.where(logs > 0, logs, 0.0) ** gamma

    res = integrate_1d(f, 0.0, top, spec, points=list(_outer_breaks(top)[1:-1]))
    return QuadResult(res.value, res.err_est + tail, res.evals, res.converged)


def beta_log_asymptote(n, r, gamma):
    return math.exp(gammaln(r + 1.0) - r * math.log(n)) * math.log(n) ** gamma


def qn_moment(n, power, spec=None):
    """E q_n^power with q_n = Psi(U_(1)), as n ∫ (1-u)^{n-1} Psi(u)^power du."""
    n = check_int(n, "n", minimum=2)
    power = check_int(power, "power", minimum=1, maximum=2)
    return _min_average(n, lambda x: ndtr(SQRT2 * _lower_quantile(x, n)) ** power, spec or QuadSpec())


def s_term(n, spec=None):
    """S_n = E[1 - (1 - q_n)^{n-1}]."""
    n = check_int(n, "n", minimum=1)
    if n == 1:
        return QuadResult(0.0, 0.0, 0)

    def g(x):
        # log(1 - Psi) = log Phi(-sqrt(2) Phi^{-1}(u)), exact in the upper range
        return -np.expm1((n - 1) * log_ndtr(-SQRT2 * _lower_quantile(x, n)))

    return _min_average(n, g, spec or QuadSpec())


def s_refined(n):
    n = check_int(n, "n", minimum=3)
    big_l = math.log(n)
    lead = CONST_S * math.sqrt(big_l) / n
    corr = (math.sqrt(math.pi / 2.0) * (math.log(big_l) + math.log(4.0 * math.pi) - 2.0 * EULER_GAMMA)
            / (n * math.sqrt(big_l)))
    return lead - corr


# compiled kernels ----------------------------------------------------------
# Anything that reaches ``adapt`` is compiled per process: numba will not
# cache functions that receive other compiled functions as arguments.

@njit(cache=True)
def _upper_s(v, vc):
    """-Phi^{-1}(v) given v and 1 - v, whichever is accurate."""
    if v <= 0.5:
        return -_k.norm_ppf(v)
    return _k.norm_ppf(vc)


@njit(cache=True)
def _log_upper(v, vc):
    if v <= 0.5:
        return math.log1p(-v)
    return math.log(vc)


@njit(cache=True)
def _g_f(r, p, cnt):
    s = p[0]
    t = p[1]
    h = p[2]
    r2 = r * r
    z = r2 - t
    arg = -_k.SQRT2 * (s + math.sqrt(h * (h + r2)))
    return 2.0 * r * math.exp(_k.log_norm_cdf(arg) - 0.5 * z * z - _k.LOG_SQRT_2PI - p[3])


@njit(cache=True)
def _ray_breaks(top, marks):
    out = np.empty(marks.shape[0] + 2)
    out[0] = 0.0
    m = 1
    for v in np.sort(marks):
        if out[m - 1] < v < top:
            out[m] = v
            m += 1
    out[m] = top
    return out[: m + 1].copy()


@njit
def g_st(s, t, rtol, cnt):
    """G in quantile coordinates s = -Phi^{-1}(u) >= t = -Phi^{-1}(v)."""
    h = max(s - t, 0.0)
    p = np.empty(4)
    p[0] = s
    p[1] = t
    p[2] = h
    p[3] = _k.log_norm_cdf(t)
    top = math.sqrt(_Z_SPAN + max(t, 0.0))
    marks = np.empty(3)
    marks[0] = math.sqrt(h)
    marks[1] = math.sqrt(max(t, 0.0))
    marks[2] = 1.0 / math.sqrt(abs(t) + 1.0)
    val, err, ok = adapt(_g_f, p, cnt, _ray_breaks(top, marks), rtol, 1e-300, _INNER_LIMIT)
    if not ok:
        cnt[1] += 1
    return val, err


@njit
def _h_f(rho, p, cnt):
    zeta = rho * rho - p[1]
    g, _ = g_st(p[0], -zeta, p[3], cnt)
    if g <= 0.0:
        return 0.0
    # 2/(1-v)^2 prefactor times d zeta = 2 rho d rho
    return 4.0 * rho * math.exp(_k.log_norm_cdf(-zeta) - 0.5 * zeta * zeta - _k.LOG_SQRT_2PI
                                - 2.0 * p[2] + math.log(g))


@njit
def h_st(s, t, rtol, cnt):
    """H in quantile coordinates; integrates over w = Phi(zeta), zeta = -t + rho^2."""
    p = np.empty(4)
    p[0] = s
    p[1] = t
    p[2] = _k.log_norm_cdf(t)
    p[3] = 0.1 * rtol
    top = math.sqrt(_Z_SPAN + max(t, 0.0))
    marks = np.empty(3)
    marks[0] = math.sqrt(max(s - t, 0.0))
    marks[1] = math.sqrt(max(t, 0.0))
    marks[2] = 1.0 / math.sqrt(abs(t) + 1.0)
    val, err, ok = adapt(_h_f, p, cnt, _ray_breaks(top, marks), rtol, 1e-300, _INNER_LIMIT)
    if not ok:
        cnt[1] += 1
    return val, err


# middle integrands: p = [n, x, s, delta, rtol_inner, k, log(1 - x/n)]

@njit(cache=True)
def _mid_point(r, p):
    n = p[0]
    y = p[1] + p[3] * r * r
    vc = (n - y) / n
    return y, y / n, vc


@njit
def _mid_i(r, p, cnt):
    y, v, vc = _mid_point(r, p)
    if vc <= 0.0:
        return 0.0
    g, _ = g_st(p[2], _upper_s(v, vc), p[4], cnt)
    return 2.0 * p[3] * r * math.exp((p[0] - 2.0) * _log_upper(v, vc)) * g


@njit
def _mid_a(r, p, cnt):
    y, v, vc = _mid_point(r, p)
    if vc <= 0.0:
        return 0.0
    g, _ = g_st(p[2], _upper_s(v, vc), p[4], cnt)
    hit = -math.expm1((p[0] - 2.0) * math.log1p(-min(g, 1.0)))
    return 2.0 * p[3] * r * math.exp((p[0] - 2.0) * _log_upper(v, vc)) * hit


@njit
def _mid_s3(r, p, cnt):
    y, v, vc = _mid_point(r, p)
    if vc <= 0.0:
        return 0.0
    g, _ = g_st(p[2], _upper_s(v, vc), p[4], cnt)
    lv = _log_upper(v, vc)
    # (1-x/n)^{n-3} - (1-v)^{n-3}, factored to avoid cancellation
    bracket = math.exp((p[0] - 3.0) * p[6]) * -math.expm1((p[0] - 3.0) * (lv - p[6]))
    return 2.0 * p[3] * r * vc * bracket * g


@njit
def _mid_pnk(r, p, cnt):
    y, v, vc = _mid_point(r, p)
    if vc <= 0.0 or r <= 0.0:
        return 0.0
    t = _upper_s(v, vc)
    k = p[5]
    lw = _k.log_norm_cdf(_k.SQRT2 * (t - 2.0 * p[2])) + (p[0] - k) * _log_upper(v, vc)
    if k > 2.0:
        lw += (k - 2.0) * math.log(p[3] * r * r)
    return 2.0 * p[3] * r * math.exp(lw)


@njit
def _mid_h(r, p, cnt):
    y, v, vc = _mid_point(r, p)
    if vc <= _H_EDGE:
        return 0.0
    hv, _ = h_st(p[2], _upper_s(v, vc), p[4], cnt)
    return 2.0 * p[3] * r * math.exp((p[0] - 2.0) * _log_upper(v, vc)) * hv


@njit(cache=True)
def _mid_params(x, po):
    n = po[0]
    u = x / n
    s = _upper_s(u, (n - x) / n)
    p = np.empty(7)
    p[0] = n
    p[1] = x
    p[2] = s
    p[3] = x / max(s * s, 1.0)
    p[4] = po[2]
    p[5] = po[3]
    p[6] = _log_upper(u, (n - x) / n)
    return p


@njit
def _mid_run(f, p, cnt, rtol):
    top = math.sqrt((p[0] - p[1]) / p[3])
    m = 1
    b = 1.0
    while b < top:
        m += 1
        b *= 2.0
    breaks = np.empty(m + 1)
    breaks[0] = 0.0
    b = 1.0
    for i in range(1, m):
        breaks[i] = b
        b *= 2.0
    breaks[m] = top
    val, err, ok = adapt(f, p, cnt, breaks, rtol, 1e-300, _INNER_LIMIT)
    if not ok:
        cnt[1] += 1
    return val


# outer integrands: po = [n, rtol_mid, rtol_inner, k]

@njit
def _outer_i(x, po, cnt):
    return _mid_run(_mid_i, _mid_params(x, po), cnt, po[1])


@njit
def _outer_a(x, po, cnt):
    p = _mid_params(x, po)
    n = po[0]
    # (1 - Psi(u))^{n-1} with 1 - Psi(u) = Phi(-sqrt(2) Phi^{-1}(u)) = Phi(sqrt(2) s)
    lead = math.exp((n - 1.0) * _k.log_norm_cdf(_k.SQRT2 * p[2]))
    if lead == 0.0:
        return 0.0
    return lead * _mid_run(_mid_a, p, cnt, po[1])


@njit
def _outer_s3(x, po, cnt):
    return _mid_run(_mid_s3, _mid_params(x, po), cnt, po[1])


@njit
def _outer_pnk(x, po, cnt):
    return _mid_run(_mid_pnk, _mid_params(x, po), cnt, po[1])


@njit
def _outer_h(x, po, cnt):
    return _mid_run(_mid_h, _mid_params(x, po), cnt, po[1])


_OUTER = {"i": _outer_i, "a": _outer_a, "s3": _outer_s3, "pnk": _outer_pnk, "h": _outer_h}


def _nested(kind, n, log_prefactor, spec, top, tail, k=0):
    spec = spec or NESTED
    po = np.array([float(n), 0.1 * spec.rel_tol, 0.01 * spec.rel_tol, float(k)])
    cnt = np.zeros(2, dtype=np.int64)
    val, err, ok = adapt(_OUTER[kind], po, cnt, _outer_breaks(top),
                         spec.rel_tol, spec.abs_tol, spec.max_subdivisions)
    scale = math.exp(log_prefactor)
    value = scale * val
    # inner levels run at 0.1x the outer tolerance; charge that to err_est
    err_est = scale * err + po[1] * abs(value) + tail
    return QuadResult(value, err_est, int(cnt[0]), bool(ok and cnt[1] == 0))


def _double_tail(n, c, log_prefactor, power):
    """Return (top, tail) for an integrand bounded by prefactor * y-weight e^{-c x}."""
    cut = truncation_point(n)
    if cut >= n:
        return float(n), 0.0
    return cut, math.exp(log_prefactor - c * cut - power * math.log(c))


# public nested quantities ---------------------------------------------------

def _check_uv(u, v):
    u = float(check_open_unit(u, "u"))
    v = float(check_open_unit(v, "v"))
    if u > v:
        raise ValueError(f"requires u <= v, got u={u}, v={v}")
    return u, v


def g_at(u, v, spec=None):
    """Averaged edge probability G(u, v) = E p(u, v, W), W uniform on (v, 1)."""
    u, v = _check_uv(u, v)
    spec = spec or QuadSpec()
    cnt = np.zeros(2, dtype=np.int64)
    val, err = g_st(-_k.norm_ppf(u), -_k.norm_ppf(v), spec.rel_tol, cnt)
    return QuadResult(val, err, int(cnt[0]), bool(cnt[1] == 0))


def g_st_value(s, t, rel_tol=1e-9):
    """G in quantile coordinates (s >= t); for callers that hold s, t exactly."""
    cnt = np.zeros(2, dtype=np.int64)
    return g_st(float(s), float(t), rel_tol, cnt)[0]


def h_at(u, v, spec=None):
    """H(u, v) = 2 (1-v)^{-2} ∫_v^1 (1-w) G(u, w) dw."""
    u, v = _check_uv(u, v)
    if v >= 1.0 - _H_EDGE:
        return QuadResult(0.0, 1e-12, 0)
    spec = spec or QuadSpec()
    cnt = np.zeros(2, dtype=np.int64)
    val, err = h_st(-_k.norm_ppf(u), -_k.norm_ppf(v), spec.rel_tol, cnt)
    return QuadResult(val, err, int(cnt[0]), bool(cnt[1] == 0))


def i_term(n, spec=None):
    """I_n = (n-2) E G(U_(1), U_(2)), the linear intensity of the second-vertex class."""
    n = check_int(n, "n", minimum=2)
    if n == 2:
        return QuadResult(0.0, 0.0, 0)
    lp = math.log((n - 1) * (n - 2) / n)
    top, tail = _double_tail(n, (n - 2) / n, lp, 2)
    return _nested("i", n, lp, spec, top, tail)


def a_term_exact(n, spec=None):
    """A_n = E[(1-q)^{n-1} (1 - prod_{j>=3} (1 - p_2j))], reduced to a double integral."""
    n = check_int(n, "n", minimum=3)
    lp = math.log((n - 1) / n)
    top, tail = _double_tail(n, (n - 2) / n, lp, 2)
    return _nested("a", n, lp, spec, top, tail)


def s3_term(n, spec=None):
    """E S_{3,n}: expected sum of pair probabilities over ranks 3 <= i < j."""
    n = check_int(n, "n", minimum=4)
    lp = math.log((n - 1) * (n - 2) / n)
    top, tail = _double_tail(n, (n - 3) / n, lp + math.log(n), 1)
    return _nested("s3", n, lp, spec, top, tail)


def s3_term_pre_tonelli(n, spec=None):
    """E S_{3,n} through the two-sample average H, before swapping integrals."""
    n = check_int(n, "n", minimum=4)
    lp = math.log((n - 1) * (n - 2) * (n - 3) / (2.0 * n))
    top, tail = _double_tail(n, (n - 2) / n, lp, 2)
    return _nested("h", n, lp, spec, top, tail)


def p_nk(n, k, spec=None):
    """One-row probability P_{n,k}; k = 1 is the pair with the minimum itself."""
    n = check_int(n, "n", minimum=2)
    k = check_int(k, "k", minimum=1, maximum=n)
    if k == 1:
        return normal_vs_min(n, SQRT2, spec)
    lp = gammaln(n + 1) - gammaln(k - 1) - gammaln(n - k + 1) - k * math.log(n)
    top, tail = float(n), 0.0
    if n - k >= n / 2:
        c = (n - k) / n
        top, tail = _double_tail(n, c, lp + gammaln(k - 1), k)
    return _nested("pnk", n, lp, spec, top, tail, k=k)


# asymptotes and bounds ---------------------------------------------------------

class Term(str, Enum):
    S = "S"
    A = "A"
    B = "B"
    PNK = "PNK"


def pnk_constant(k):
    return 24.0 * math.sqrt(2.0 * math.pi) / ((k + 2) * (k + 3))


def asymptote(term, n, k=None):
    """Leading-order formula; n may be any real > 1."""
    term = Term(term)
    n = float(check_finite(n, "n"))
    if not n > 1.0:
        raise ValueError(f"asymptote needs n > 1, got {n}")
    big_l = math.log(n)
    if term is Term.S:
        return CONST_S * math.sqrt(big_l) / n
    if term is Term.A:
        return CONST_A / (n * math.sqrt(big_l))
    if term is Term.B:
        return CONST_B / (n * big_l ** 1.5)
    if k is None:
        raise ValueError("the PNK asymptote needs k")
    k = check_int(k, "k", minimum=2)
    return pnk_constant(k) * math.sqrt(big_l) / n ** 2


def row_union_bound(n, k, spec=None):
    """k C(n,k) P(Y <= M_{n-k}) with Var Y = (k+1)/(2k^2)."""
    n = check_int(n, "n", minimum=4)
    k = check_int(k, "k", minimum=3, maximum=n - 1)
    a = math.sqrt(2.0 * k * k / (k + 1))
    tail = normal_vs_min(n - k, a, spec).value
    if tail <= 0.0:
        return 0.0
    log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    return math.exp(math.log(k) + log_binom + math.log(tail))


def chen_peng_bound(n, k, eta):
    n = check_int(n, "n", minimum=2)
    k = check_int(k, "k", minimum=2)
    eta = float(check_finite(eta, "eta"))
    if eta <= 0:
        raise ValueError("eta must be positive")
    base = eta * eta * math.log(n) + (k - 1) / (2.0 * k - 2.0)
    return math.exp(gammaln(2 * k - 2) - gammaln(k) - (k - 2) * math.log(n + 1)
                    + (k - 1) * math.log(base) - (k - 2) ** 2 / 4.0)


def bulk_exponent(alpha):
    alpha = float(check_finite(alpha, "alpha"))
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return 2.0 * (2.0 - math.sqrt(1.0 - alpha)) ** 2
