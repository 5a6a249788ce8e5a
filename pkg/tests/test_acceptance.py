"""End-to-end acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
Parts of criteria 7 and 9 cannot hold as stated; those parts are strict xfails
and the criterion line reports FAIL.
Criteria 6, 7, 9 and 10 run large censuses and take minutes to half an hour
on a single core.
"""

import functools
import json
import math

import numpy as np
import pytest

from stqp_goe import terms
from stqp_goe.cli import main
from stqp_goe.events import classify_edges
from stqp_goe.goe import order_instance, sample_goe
from stqp_goe.montecarlo import ExperimentConfig, run_census
from stqp_goe.report import build_row
from stqp_goe.rng import derive_stream
from stqp_goe.solver import edge_min, grid_oracle, solve_enumerate, two_point_threshold

pytestmark = pytest.mark.acceptance

GRID = (1, 10, 1000, 10**6)


def within(mean, se, target, k=4.0, extra=0.0):
    return abs(mean - target) <= k * se + extra


def test_c01_exchangeability(capsys, acceptance_record):
    worst = 0.0
    for n in GRID:
        assert main(["quad", "--term", "nvm", "--n", str(n), "--a", "1"]) == 0
        out = json.loads(capsys.readouterr().out)
        worst = max(worst, abs(out["value"] - 1 / (n + 1)))
    assert acceptance_record(1, worst <= 1e-10, f"max |nvm - 1/(n+1)| = {worst:.1e}")


def test_c02_beta_log(acceptance_record):
    worst = 0.0
    for n in GRID:
        worst = max(worst, abs(terms.beta_log(n, 0, 0).value - 1),
                    abs(terms.beta_log(n, 1, 0).value - 1 / (n + 1)))
    assert acceptance_record(2, worst <= 1e-10, f"max identity error {worst:.1e}")


def test_c03_threshold_equivalence(acceptance_record):
    rng = np.random.default_rng(20261019)
    bad = checked = 0
    for _ in range(10**5):
        m, a, c = np.sort(rng.normal(size=3))
        b = rng.normal(scale=2.0)
        tau = two_point_threshold(m, a, c)
        if abs(b - tau) <= 1e-9:
            continue
        checked += 1
        bad += (edge_min(a, b, c)[1] < m) != (b < tau)
    assert acceptance_record(3, bad == 0, f"{bad} mismatches in {checked} tuples")


@pytest.mark.slow
def test_c04_solver_vs_grid(acceptance_record):
    worst = 0.0
    for i in range(1000):
        q = sample_goe(5, derive_stream(404, i))
        worst = max(worst, abs(solve_enumerate(q).value - grid_oracle(q)))
    assert acceptance_record(4, worst <= 1e-6, f"max gap {worst:.1e} over 1000 instances")


@pytest.mark.slow
def test_c05_sandwich_partition(acceptance_record):
    seed, samples = 505, 10**5
    rep = run_census(ExperimentConfig(n=8, samples=samples, seed=seed, mode="exact"))
    eq2, edge, gt1 = rep.count("kappa_eq2"), rep.count("any_edge"), rep.count("kappa_gt1")
    sandwich = eq2 <= edge <= gt1
    row_avg = rep.count("row_avg_ok") == gt1
    # the census only keeps sums, so the per-sample partition is replayed on the same streams
    broken = 0
    for i in range(samples):
        r = classify_edges(order_instance(sample_goe(8, derive_stream(seed, i))))
        broken += (r.i_s + r.i_a + r.i_b) != r.any_edge
    ok = sandwich and row_avg and broken == 0 and rep.count("i_s") + rep.count("i_a") + rep.count("i_b") == edge
    assert acceptance_record(5, ok, f"#k=2 {eq2} <= #edge {edge} <= #k>1 {gt1}; "
                                    f"row-average {rep.count('row_avg_ok')}/{gt1}; partition breaks {broken}")


def _compare(rep, field, target, extra=0.0):
    mean, se = rep.mean(field), rep.std_error(field)
    return within(mean, se, target, extra=extra), f"{field} {(mean - target) / se:+.2f} se"


@pytest.mark.slow
def test_c06_decomposition_small_n(acceptance_record):
    rep = run_census(ExperimentConfig(n=6, samples=10**7, seed=606, mode="edges"))
    checks = [_compare(rep, "cond_s", terms.s_term(6).value),
              _compare(rep, "cond_a", terms.a_term_exact(6).value),
              _compare(rep, "sum_p3", terms.s3_term(6).value)]
    assert acceptance_record(6, all(ok for ok, _ in checks), "; ".join(d for _, d in checks))


@functools.lru_cache(maxsize=None)
def _census_200():
    return run_census(ExperimentConfig(n=200, samples=4 * 10**5, seed=707, mode="edges"))


B_ALLOWANCE = 10 / (200**2 * math.log(200))


@pytest.mark.slow
def test_c07_headline_scale(acceptance_record):
    rep = _census_200()
    s3 = terms.s3_term(200).value
    s_ok, s_txt = _compare(rep, "cond_s", terms.s_term(200).value)
    a_ok, a_txt = _compare(rep, "cond_a", terms.a_term_exact(200).value)
    b_ok, b_txt = _compare(rep, "cond_b", s3, extra=B_ALLOWANCE)
    p3_ok, p3_txt = _compare(rep, "sum_p3", s3)
    acceptance_record(7, s_ok and a_ok and b_ok,
                      f"{s_txt}; {a_txt}; {b_txt} (allowance {B_ALLOWANCE:.1e}); {p3_txt}")
    # cond_b carries the saturated product, about half of E S3 at this n; its unbiased
    # counterpart sum_p3 and the ordering cond_b <= sum_p3 are what can hold here
    assert s_ok and a_ok and p3_ok
    assert rep.mean("cond_b") <= rep.mean("sum_p3")


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="at n=200 the sum_p3 mass sits on rare samples where the product saturates, "
                                       "so mean(cond_b) is about 0.52 E S3, far outside the allowance")
def test_c07_cond_b_linearization():
    ok, _ = _compare(_census_200(), "cond_b", terms.s3_term(200).value, extra=B_ALLOWANCE)
    assert ok


@pytest.mark.slow
def test_c08_constant_trends(acceptance_record):
    rows = [build_row(n)[0] for n in (10**3, 10**4, 10**5, 10**6)]
    rs = [r.ratio_s for r in rows]
    ra = [r.ratio_a for r in rows]
    rb = [r.ratio_b for r in rows]

    def toward_one(seq):
        gaps = [abs(x - 1) for x in seq]
        return all(a > b for a, b in zip(gaps, gaps[1:]))

    big = 10**6
    s = terms.s_term(big).value
    refined_gap = abs(s - terms.s_refined(big)) / s
    ok = (all(a < b for a, b in zip(rs, rs[1:])) and abs(rs[-1] - 1) <= 0.15 and refined_gap <= 0.05
          and toward_one(ra) and toward_one(rb) and 0.5 <= ra[-1] <= 1.5 and 0.5 <= rb[-1] <= 1.5)
    fmt = lambda seq: ",".join(f"{x:.4f}" for x in seq)
    assert acceptance_record(8, ok, f"ratio_s {fmt(rs)}; ratio_a {fmt(ra)}; ratio_b {fmt(rb)}; "
                                    f"refined gap {refined_gap:.4f}")


PNK_SUM = sum(24 / ((k + 2) * (k + 3)) for k in range(2, 10**4 + 1))


@pytest.mark.slow
def test_c09_one_row(acceptance_record):
    pair = max(abs(terms.p_nk(n, 1).value - terms.normal_vs_min(n, math.sqrt(2)).value) for n in (10, 200, 10**4))
    rep = run_census(ExperimentConfig(n=200, samples=4 * 10**5, seed=909, mode="one_row", k=2))
    target = terms.p_nk(200, 2).value
    mean, se = rep.mean("cond_e"), rep.std_error("cond_e")
    const = terms.pnk_constant(2)
    sum_ok = abs(PNK_SUM - 6) <= 1e-3
    ok = (pair <= 1e-10 and within(mean, se, target) and rep.total("violations") == 0
          and abs(const - 3.00795) <= 1e-5 and sum_ok)
    acceptance_record(9, ok, f"pair gap {pair:.1e}; one-row {(mean - target) / se:+.2f} se; "
                             f"violations {int(rep.total('violations'))}; constant {const:.6f}; "
                             f"truncated sum {PNK_SUM:.5f} (needs 6 +- 1e-3)")
    # everything except the truncated sum must hold
    assert pair <= 1e-10 and within(mean, se, target) and rep.total("violations") == 0
    assert abs(const - 3.00795) <= 1e-5


@pytest.mark.xfail(strict=True, reason="the partial sum to 10^4 is 6 - 24/10003 = 5.99760, outside 6 +- 1e-3")
def test_c09_truncated_sum():
    assert abs(PNK_SUM - 6) <= 1e-3


@pytest.mark.slow
def test_c10_bound_dominance(acceptance_record):
    rep = run_census(ExperimentConfig(n=12, samples=10**6, seed=1010, mode="exact"))
    total = rep.samples
    p3 = rep.kappa_hist.get(3, 0) / total
    p2 = rep.kappa_hist.get(2, 0) / total
    union = terms.row_union_bound(12, 3)
    eta = next((e for e in np.linspace(0.05, 2.0, 40) if p2 <= terms.chen_peng_bound(12, 2, e)), None)
    ok = p3 <= union and eta is not None
    assert acceptance_record(10, ok, f"P(k=3) {p3:.3e} <= {union:.3f}; P(k=2) {p2:.3e} dominated at eta={eta}")


def test_c11_worker_invariance(acceptance_record):
    reports = [run_census(ExperimentConfig(n=20, samples=50_000, seed=1111, mode="edges", workers=w))
               for w in (1, 2, 4)]
    same = all(r.sums == reports[0].sums and r.sumsq == reports[0].sumsq for r in reports)
    assert acceptance_record(11, same, "1, 2 and 4 workers give identical sums")
