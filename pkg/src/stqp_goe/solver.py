"""Exact machinery for the standard quadratic program min x'Qx over the simplex.

Small instances are solved globally by enumerating supports: every face K
carries at most one stationary point (generically), and the optimizer is the
best of those with strictly positive weights.  ``grid_oracle`` is an
independent check that never solves a linear system.
"""

import functools
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .goe import as_matrix
from .validation import check_int, check_ordered

MAX_ENUMERATE_N = 25
POSITIVITY_TOL = 1e-12
PIVOT_TOL = 1e-12


def edge_min(a, b, c):
    """Minimize ``a t^2 + 2 b t (1-t) + c (1-t)^2`` over t in [0, 1].

    Returns ``(t_star, value)``; ties between endpoints go to t = 1.
    """
    a, b, c = float(a), float(b), float(c)
    if b < min(a, c):
        denom = a + c - 2.0 * b
        return (c - b) / denom, (a * c - b * b) / denom
    if a <= c:
        return 1.0, a
    return 0.0, c


def two_point_threshold(m, a, c):
    """Critical off-diagonal value for an edge whose vertex values are a <= c.

    ``edge_min(a, b, c)[1] < m`` holds exactly when ``b`` is below the
    returned threshold, provided ``m <= a <= c``.
    """
    check_ordered([m, a, c], ["m", "a", "c"])
    return m - math.sqrt((a - m) * (c - m))


@dataclass(frozen=True)
class KktCandidate:
    support: tuple
    weights: np.ndarray
    multiplier: float


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    support: tuple
    kappa: int
    value: float

    def to_dict(self):
        return {
            "n": int(self.x.shape[0]),
            "kappa": int(self.kappa),
            "value": float(self.value),
            "support": [int(i) for i in self.support],
            "x": [float(v) for v in self.x],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


@njit(cache=True)
def _solve_ones(a, y, k):
    """Solve a[:k, :k] y = 1 in place by Gaussian elimination, partial pivoting.

    ``a`` is overwritten.  Returns False when a pivot falls below the
    relative singularity threshold.
    """
    scale = 0.0
    for i in range(k):
        y[i] = 1.0
        for j in range(k):
            scale = max(scale, abs(a[i, j]))
    if scale == 0.0:
        return False
    tol = PIVOT_TOL * scale
    for col in range(k):
        piv = col
        best = abs(a[col, col])
        for r in range(col + 1, k):
            if abs(a[r, col]) > best:
                best = abs(a[r, col])
                piv = r
        if best < tol:
            return False
        if piv != col:
            for j in range(col, k):
                tmp = a[col, j]
                a[col, j] = a[piv, j]
                a[piv, j] = tmp
            tmp = y[col]
            y[col] = y[piv]
            y[piv] = tmp
        inv = 1.0 / a[col, col]
        ycol = y[col]
        for r in range(col + 1, k):
            f = a[r, col] * inv
            if f != 0.0:
                for j in range(col + 1, k):
                    a[r, j] -= f * a[col, j]
                y[r] -= f * ycol
    for i in range(k - 1, -1, -1):
        acc = y[i]
        for j in range(i + 1, k):
            acc -= a[i, j] * y[j]
        y[i] = acc / a[i, i]
    return True


@njit(cache=True)
def _face_candidate(q, idx, k, work, y):
    """KKT point on face idx[:k]; returns (ok, multiplier) and weights in y[:k]."""
    if k == 1:
        y[0] = 1.0
        return True, q[idx[0], idx[0]]
    for i in range(k):
        qi = idx[i]
        for j in range(k):
            work[i, j] = q[qi, idx[j]]
    if not _solve_ones(work, y, k):
        return False, 0.0
    total = 0.0
    for i in range(k):
        total += y[i]
    if abs(total) < PIVOT_TOL:
        return False, 0.0
    inv = 1.0 / total
    for i in range(k):
        if y[i] * inv <= POSITIVITY_TOL:
            return False, 0.0
    for i in range(k):
        y[i] *= inv
    return True, inv


@njit(cache=True)
def _enumerate(q, k_max):
    """Best admissible candidate over supports of size <= k_max.

    Supports are visited by size, then lexicographically; a later candidate
    replaces the incumbent only if strictly better.  Also returns the
    runner-up value and the number of admissible candidates.
    """
    n = q.shape[0]
    work = np.empty((n, n))
    y = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    best_val = np.inf
    second_val = np.inf
    best_x = np.zeros(n)
    best_k = 0
    best_idx = np.zeros(n, dtype=np.int64)
    count = 0
    for k in range(1, k_max + 1):
        for i in range(k):
            idx[i] = i
        while True:
            ok, lam = _face_candidate(q, idx, k, work, y)
            if ok:
                count += 1
                if lam < best_val:
                    second_val = best_val
                    best_val = lam
                    best_k = k
                    best_x[:] = 0.0
                    for i in range(k):
                        best_x[idx[i]] = y[i]
                        best_idx[i] = idx[i]
                elif lam < second_val:
                    second_val = lam
            # next combination in lexicographic order
            pos = k - 1
            while pos >= 0 and idx[pos] == n - k + pos:
                pos -= 1
            if pos < 0:
                break
            idx[pos] += 1
            for i in range(pos + 1, k):
                idx[i] = idx[i - 1] + 1
    return best_x, best_idx[:best_k].copy(), best_val, second_val, count


def kkt_candidate(q, support):
    """Stationary point of x'Qx on the face ``support``, or None.

    None is returned when the principal submatrix is numerically singular,
    when ``1' Q_K^{-1} 1`` vanishes, or when some weight is not positive.
    """
    q = as_matrix(q)
    support = tuple(sorted(int(i) for i in support))
    if not support:
        raise ValueError("support must be nonempty")
    if support[0] < 0 or support[-1] >= q.shape[0] or len(set(support)) != len(support):
        raise ValueError(f"invalid support {support} for n={q.shape[0]}")
    k = len(support)
    idx = np.array(support, dtype=np.int64)
    y = np.empty(k)
    ok, lam = _face_candidate(q, idx, k, np.empty((k, k)), y)
    if not ok:
        return None
    return KktCandidate(support=support, weights=y, multiplier=float(lam))


def _enumerate_checked(q, k_max):
    q = as_matrix(q)
    n = q.shape[0]
    if n > MAX_ENUMERATE_N:
        raise ValueError(
            f"exact enumeration is limited to n <= {MAX_ENUMERATE_N} (got n={n}); "
            "use the edge-event census (mode 'edges') for larger instances"
        )
    k_max = min(n, 15) if k_max is None else check_int(k_max, "k_max", minimum=1, maximum=n)
    return _enumerate(np.ascontiguousarray(q), k_max)


def solve_enumerate(q, k_max=None):
    """Global optimizer by support enumeration (exact when ``k_max == n``)."""
    x, support, value, _, _ = _enumerate_checked(q, k_max)
    return SolveResult(x=x, support=tuple(int(i) for i in support),
                       kappa=len(support), value=float(value))


def enumeration_margin(q, k_max=None):
    """``(value, runner_up_value, n_candidates)`` from the enumeration."""
    _, _, value, second, count = _enumerate_checked(q, k_max)
    return float(value), float(second), int(count)


@functools.lru_cache(maxsize=8)
def _simplex_lattice(n, resolution):
    # stars and bars: each choice of n-1 bar positions is one lattice point
    if n == 1:
        return np.ones((1, 1))
    bars = np.array(list(itertools.combinations(range(resolution + n - 1), n - 1)), dtype=np.int64)
    edges = np.hstack([np.full((bars.shape[0], 1), -1), bars,
                       np.full((bars.shape[0], 1), resolution + n - 1)])
    pts = (np.diff(edges, axis=1) - 1) / resolution
    pts.setflags(write=False)
    return pts


@njit(cache=True)
def _pair_descent(q, x, tol, max_sweeps):
    n = x.shape[0]
    qx = q @ x
    value = x @ qx
    for _ in range(max_sweeps):
        start = value
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                # exact line search along e_i - e_j, step in [-x_i, x_j]
                grad = 2.0 * (qx[i] - qx[j])
                curv = q[i, i] + q[j, j] - 2.0 * q[i, j]
                lo = -x[i]
                hi = x[j]
                delta = lo
                gain = grad * lo + curv * lo * lo
                g_hi = grad * hi + curv * hi * hi
                if g_hi < gain:
                    delta, gain = hi, g_hi
                if curv > 0.0:
                    d = min(max(-grad / (2.0 * curv), lo), hi)
                    g_d = grad * d + curv * d * d
                    if g_d < gain:
                        delta, gain = d, g_d
                if gain < 0.0:
                    x[i] = max(x[i] + delta, 0.0)
                    x[j] = max(x[j] - delta, 0.0)
                    qx = q @ x
                    value = x @ qx
        if start - value < tol:
            break
    return value


def grid_oracle(q, resolution=60):
    """Independent global value for n <= 5: lattice scan then pairwise descent."""
    q = as_matrix(q)
    n = q.shape[0]
    if n > 5:
        raise ValueError(f"grid_oracle supports n <= 5, got n={n}")
    resolution = check_int(resolution, "resolution", minimum=1)
    if n == 1:
        return float(q[0, 0])
    pts = _simplex_lattice(n, resolution)
    vals = np.einsum("ij,jk,ik->i", pts, q, pts)
    x = pts[int(np.argmin(vals))].copy()
    return float(_pair_descent(np.ascontiguousarray(q), x, 1e-12, 100000))


def min_diag_heuristic(q):
    """Index of the smallest diagonal entry (lowest index on ties)."""
    return int(np.argmin(np.diag(as_matrix(q))))


def row_average_ok(q, support):
    """Whether some active row has average over the support below min_r Q_rr."""
    q = as_matrix(q)
    support = sorted(int(i) for i in support)
    if len(support) < 2:
        raise ValueError("row_average_ok needs a support of size > 1")
    sub = q[np.ix_(support, support)]
    return bool(np.any(sub.mean(axis=1) < np.min(np.diag(q))))
