import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stqp_goe.gauss import (SQRT_PI, log_normal_cdf, mills_interval, normal_cdf, normal_pdf,
                            normal_quantile, psi, psi_refined, quantile_gap, tail_scale)

mp.mp.dps = 50


def mp_cdf(x):
    return mp.ncdf(mp.mpf(x))


def mp_quantile(p):
    p = mp.mpf(p)
    if p > 0.5:
        return -mp_quantile(1 - p)
    # Newton on log Phi from the leading tail guess; robust down to 1e-300
    x0 = -mp.sqrt(-2 * mp.log(p)) if p < 0.1 else mp.mpf(0)
    return mp.findroot(lambda x: mp.log(mp.ncdf(x)) - mp.log(p), x0)


def mp_psi(u):
    return mp_cdf(mp.sqrt(2) * mp_quantile(u))


class TestNormalCdf:
    def test_center(self):
        assert normal_cdf(0.0) == 0.5

    def test_known_values(self):
        assert normal_cdf(1.96) == pytest.approx(0.9750021049, abs=1e-10)
        assert normal_cdf(-8.0) == pytest.approx(6.2209605742717841e-16, rel=1e-10)

    @pytest.mark.parametrize("x", [-37.5, -30.0, -20.0, -10.0, -3.0, -0.5, 0.7, 2.5, 6.0])
    def test_against_mpmath(self, x):
        assert normal_cdf(x) == pytest.approx(float(mp_cdf(x)), rel=1e-13)

    @pytest.mark.parametrize("x", [-1000.0, -300.0, -40.0, -5.0, 0.0, 3.0])
    def test_log_cdf_deep_tail(self, x):
        assert log_normal_cdf(x) == pytest.approx(float(mp.log(mp_cdf(x))), rel=1e-12)

    def test_pdf(self):
        assert normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
        assert normal_pdf(-3.0) == normal_pdf(3.0)

    def test_array_shape_kept(self):
        out = normal_cdf(np.zeros((2, 3)))
        assert out.shape == (2, 3) and np.all(out == 0.5)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            normal_cdf(float("nan"))

    @given(st.floats(-30, 30), st.floats(-30, 30))
    def test_monotone(self, a, b):
        lo, hi = min(a, b), max(a, b)
        assert normal_cdf(lo) <= normal_cdf(hi)


class TestQuantile:
    def test_center(self):
        assert normal_quantile(0.5) == 0.0

    def test_known_values(self):
        assert normal_quantile(0.9750021049) == pytest.approx(1.96, abs=1e-9)
        assert normal_quantile(1e-10) == pytest.approx(-6.3613, abs=1e-4)
        assert normal_quantile(1e-10) == pytest.approx(float(mp_quantile(1e-10)), rel=1e-14)

    @pytest.mark.parametrize("p", [1e-300, 1e-100, 1e-20, 1e-5, 0.02425, 0.3, 0.97575, 1 - 1e-12])
    def test_against_mpmath(self, p):
        assert normal_quantile(p) == pytest.approx(float(mp_quantile(p)), rel=1e-13)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            normal_quantile(p)

    @given(st.floats(1e-300, 1 - 1e-15))
    def test_round_trip(self, p):
        back = float(normal_cdf(normal_quantile(p)))
        assert abs(back - p) <= 1e-12 * min(p, 1 - p) + 1e-300


class TestMills:
    def test_x2(self):
        lo, hi = mills_interval(2.0)
        dens = math.exp(-2.0) / math.sqrt(2 * math.pi)
        assert lo == pytest.approx(0.4 * dens, rel=1e-14)
        assert hi == pytest.approx(0.5 * dens, rel=1e-14)
        assert lo == pytest.approx(0.0215958, abs=1e-6)
        assert hi == pytest.approx(0.0269955, abs=1e-7)
        assert lo < 0.0227501 < hi

    def test_x10_width(self):
        lo, hi = mills_interval(10.0)
        assert hi / lo == pytest.approx(1.01, rel=1e-12)
        assert (hi - lo) / normal_cdf(-10.0) <= 0.02

    def test_small_x_still_brackets(self):
        lo, hi = mills_interval(0.5)
        assert lo < normal_cdf(-0.5) < hi
        assert hi == pytest.approx(0.70413, abs=1e-5)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            mills_interval(0.0)

    @given(st.floats(0.01, 35))
    def test_sandwich(self, x):
        lo, hi = mills_interval(x)
        tail = float(mp_cdf(-x))
        assert lo <= tail * (1 + 1e-12) and tail <= hi * (1 + 1e-12)


class TestPsi:
    def test_half(self):
        assert psi(0.5) == pytest.approx(0.5, abs=1e-15)

    def test_oracle_value(self):
        # 5.0102110185e-4 by the 50-digit composition; see the ledger for the 5.009e-4 slip
        assert psi(0.01) == pytest.approx(float(mp_psi(0.01)), rel=1e-13)
        assert psi(0.01) == pytest.approx(5.0102110185e-4, abs=1e-12)

    @pytest.mark.parametrize("u", [1e-200, 1e-30, 1e-8, 0.2, 0.9])
    def test_against_mpmath(self, u):
        assert psi(u) == pytest.approx(float(mp_psi(u)), rel=1e-12)

    def test_leading_asymptote(self):
        u = 1e-8
        ratio = psi(u) / (math.sqrt(2 * math.pi) * u * u * math.sqrt(math.log(1 / u)))
        assert abs(ratio - 1) <= 0.15

    def test_upper_envelope(self):
        u = np.logspace(-150, math.log10(0.5), 2000)
        c = np.max(psi(u) / (u * u * np.sqrt(np.log(1 / u))))
        assert c <= 3.0

    @given(st.floats(1e-12, 1 - 1e-12), st.floats(1e-12, 1 - 1e-12))
    def test_monotone(self, a, b):
        lo, hi = min(a, b), max(a, b)
        assert psi(lo) <= psi(hi)


class TestPsiRefined:
    @pytest.mark.parametrize("u", [1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 1e-50])
    def test_remainder_envelope(self, u):
        # the dropped terms are O(s^-4) relative; s^4 * rel climbs to 13/4 from below
        s = -float(mp_quantile(u))
        rel = abs(psi_refined(u) / float(mp_psi(u)) - 1)
        assert rel <= 3.25 / s**4

    def test_ratio_tends_to_one_monotonically(self):
        grid = [1e-4, 1e-6, 1e-8, 1e-10]
        gaps = [abs(psi(u) / psi_refined(u) - 1) for u in grid]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_formula(self):
        s = -normal_quantile(1e-3)
        assert psi_refined(1e-3) == pytest.approx(SQRT_PI * 1e-6 * (s + 1.5 / s), rel=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            psi_refined(0.5)


class TestTailScale:
    def test_n2(self):
        t = tail_scale(2, 1)
        assert t.s == 0.0 and t.big_l == pytest.approx(math.log(2)) and t.ell == pytest.approx(1 + math.log(2))

    def test_log_scale(self):
        t = tail_scale(10**6, 1)
        assert t.s**2 / (2 * math.log(1e6)) == pytest.approx(1, abs=0.25)
        assert 1e12 * math.exp(-t.s**2) / t.s**2 == pytest.approx(2 * math.pi, rel=0.15)

    def test_ell_is_positive_part(self):
        assert tail_scale(10, 5).ell == pytest.approx(1 + math.log(2))
        assert tail_scale(10, 9.5).big_l > 0 and tail_scale(10, 9.5).ell > 1

    @pytest.mark.parametrize("x", [0.0, 10.0, -1.0])
    def test_domain(self, x):
        with pytest.raises(ValueError):
            tail_scale(10, x)


class TestQuantileGap:
    def test_equal(self):
        assert quantile_gap(0.01, 0.01).h == 0.0

    def test_boundary_regime(self):
        n = 1e8
        s = -normal_quantile(1 / n)
        g = quantile_gap(1 / n, (1 + 1 / s**2) / n)
        assert s**3 * g.h == pytest.approx(1.0, abs=0.2)

    def test_far_regime(self):
        n = 1e6
        g = quantile_gap(1 / n, 10 / n)
        assert g.s * g.h >= 0.6 * math.log(10)

    @pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
    def test_near_region_bound(self, x):
        n = 1e6
        s = -normal_quantile(x / n)
        for beta in np.linspace(1e-6, s * s / 2, 60):
            g = quantile_gap(x / n, x * (1 + beta / s**2) / n)
            assert 0.2 <= g.h / (beta / s**3) <= 5

    def test_order_enforced(self):
        with pytest.raises(ValueError):
            quantile_gap(0.2, 0.1)

    @settings(max_examples=50)
    @given(st.floats(1e-12, 0.99), st.floats(1e-12, 0.99))
    def test_gap_nonnegative(self, a, b):
        u, v = min(a, b), max(a, b)
        g = quantile_gap(u, v)
        assert g.h >= 0 and g.s == pytest.approx(-normal_quantile(u))
