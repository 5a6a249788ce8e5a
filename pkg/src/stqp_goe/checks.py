"""Quick property suites behind ``stqp check``.

Each check returns ``(name, passed, detail)``.  The suites are smaller
versions of the test-suite properties, sized to finish in seconds.
"""

import math

import numpy as np

from . import _kernels as _k
from . import terms
from .events import classify_edges, edge_stats_from_stream, N_EDGE, pair_prob_p
from .gauss import mills_interval, normal_cdf, normal_quantile, psi
from .goe import order_instance, sample_goe
from .montecarlo import ExperimentConfig, merge, run_census
from .rng import derive_stream
from .solver import edge_min, grid_oracle, kkt_candidate, solve_enumerate, two_point_threshold


def _check(name, passed, detail=""):
    return name, bool(passed), detail


def toolbox():
    p = np.logspace(-300, math.log10(0.5), 400)
    p = np.concatenate([p, 1.0 - p[(p > 1e-15) & (p < 0.4)]])
    err = np.max(np.abs(normal_cdf(normal_quantile(p)) - p) / np.minimum(p, 1 - p))
    yield _check("quantile round trip", err < 1e-12, f"max rel err {err:.2e}")
    x = np.linspace(0.05, 30, 300)
    lo, hi = mills_interval(x)
    tail = normal_cdf(-x)
    yield _check("Mills sandwich", np.all((lo <= tail * (1 + 1e-13)) & (tail <= hi * (1 + 1e-13))))
    u = np.linspace(1e-6, 1 - 1e-6, 1000)
    vals = psi(u)
    yield _check("Psi increasing and below u", np.all(np.diff(vals) > 0) and np.all(vals[u < 0.5] < u[u < 0.5]))
    word = _k.philox4x32(np.uint64(0), np.uint64(0), np.uint64(0), np.uint64(0), np.uint64(0), np.uint64(0))
    yield _check("Philox known answer", tuple(int(w) for w in word) == (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8))


def solver():
    worst = 0.0
    for i in range(40):
        q = sample_goe(4, derive_stream(7, i))
        worst = max(worst, abs(solve_enumerate(q).value - grid_oracle(q, resolution=40)))
    yield _check("enumeration matches grid oracle (n=4)", worst < 1e-6, f"max gap {worst:.1e}")
    rng = np.random.default_rng(3)
    bad = 0
    for _ in range(2000):
        m, a, c = np.sort(rng.normal(size=3))
        b = rng.normal() * 2
        tau = two_point_threshold(m, a, c)
        if abs(b - tau) > 1e-9 and (edge_min(a, b, c)[1] < m) != (b < tau):
            bad += 1
    yield _check("two-point threshold equivalence", bad == 0, f"{bad} mismatches")
    ok = True
    for i in range(20):
        q = np.asarray(sample_goe(5, derive_stream(11, i)))
        res = solve_enumerate(q)
        cand = kkt_candidate(q, res.support)
        ok &= cand is not None and abs(cand.multiplier - res.value) < 1e-12
        ok &= abs(res.x.sum() - 1) < 1e-12 and np.all(res.x >= 0)
    yield _check("optimizer is a feasible KKT candidate", ok)


def events():
    bad = 0
    row = np.empty(N_EDGE)
    for i in range(300):
        q = sample_goe(12, derive_stream(5, i))
        rep = classify_edges(order_instance(q))
        bad += (rep.i_s + rep.i_a + rep.i_b) != rep.any_edge
        edge_stats_from_stream(np.uint64(5), np.uint64(i), 12, np.empty(12), np.empty(12, dtype=np.int64),
                               np.empty(12), row)
        bad += not (row[0] == rep.any_edge and abs(row[10] - rep.cond_total) <= 1e-15)
    yield _check("edge classes partition, fused path agrees", bad == 0, f"{bad} bad samples")
    rng = np.random.default_rng(2)
    u = np.sort(rng.uniform(1e-6, 1 - 1e-6, size=(500, 3)), axis=1)
    mono = all(pair_prob_p(a, b, c) <= psi(a) * (1 + 1e-12) for a, b, c in u)
    yield _check("p(u,v,w) <= Psi(u)", mono)


def quadrature():
    for n in (1, 10, 1000):
        err = abs(terms.normal_vs_min(n, 1.0).value - 1.0 / (n + 1))
        yield _check(f"normal_vs_min({n}, 1) = 1/(n+1)", err < 1e-10, f"err {err:.1e}")
        err = abs(terms.beta_log(n, 0, 0).value - 1.0)
        yield _check(f"beta_log({n}, 0, 0) = 1", err < 1e-10, f"err {err:.1e}")
    g = terms.g_at(0.01, 0.01).value
    yield _check("G(u, u) = Psi(u)", abs(g - psi(0.01)) < 1e-9 * psi(0.01))
    yield _check("Chen-Peng k=2 value", abs(terms.chen_peng_bound(10, 2, 1.0) - (math.log(10) + 0.5)) < 1e-12)
    alpha = np.linspace(1e-3, 1 - 1e-3, 1000)
    yield _check("bulk exponent gap", all(terms.bulk_exponent(a) > 2 + a for a in alpha))


def montecarlo():
    one = run_census(ExperimentConfig(n=8, samples=3000, seed=9, mode="edges"))
    parts = [run_census(ExperimentConfig(n=8, samples=1000, seed=9, mode="edges", start=s))
             for s in (0, 1000, 2000)]
    merged = merge(parts)
    same = all(merged.count(f) == one.count(f) for f in ("any_edge", "i_s", "i_a", "i_b"))
    gap = max(abs(merged.mean(f) - one.mean(f)) for f in one.fields)
    yield _check("shard merge reproduces full run", same and gap < 1e-15, f"mean gap {gap:.1e}")
    ex = run_census(ExperimentConfig(n=6, samples=2000, seed=4, mode="exact"))
    sandwich = ex.count("kappa_eq2") <= ex.count("any_edge") <= ex.count("kappa_gt1")
    yield _check("support sandwich", sandwich)
    yield _check("row-average condition on every kappa > 1", ex.count("row_avg_ok") == ex.count("kappa_gt1"))


SUITES = {"toolbox": toolbox, "solver": solver, "events": events, "quadrature": quadrature,
          "montecarlo": montecarlo}


def run_suite(name):
    names = list(SUITES) if name == "all" else [name]
    for suite in names:
        for name_, passed, detail in SUITES[suite]():
            yield f"{suite}: {name_}", passed, detail
