"""Special-function oracles: high-precision references computed in-test."""

import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from manymac.special_math import (
    QuantileRange,
    alpha,
    alpha_quantile,
    entropy,
    q_func,
    q_inv,
    q_inv_tail_approx,
    reg_inc_beta,
)


def mp_ln_q(x):
    """High-precision ln Q(x) via the normal CDF of -x.

    320 digits so that 1 - Q(-x) keeps its distance from 1 even at x = -35.
    """
    with mpmath.workdps(320):
        return float(mpmath.log(mpmath.ncdf(-mpmath.mpf(x))))


class TestQFunc:
    def test_median(self):
        assert q_func(0.0) == pytest.approx(math.log(0.5), abs=1e-15)

    def test_monotone_to_minus_inf(self):
        xs = np.linspace(0.0, 60.0, 400)
        vals = q_func(xs)
        assert np.all(np.diff(vals) < 0)
        assert vals[-1] < -1000.0

    def test_tenth_quantile(self):
        # Q(1.2816) ~ 0.1
        assert q_func(1.2816) == pytest.approx(math.log(0.1), rel=1e-4)

    @pytest.mark.parametrize("x", [1.0, 5.0, 10.0, 20.0, 30.0, 40.0])
    def test_high_precision_tail(self, x):
        assert q_func(x) == pytest.approx(mp_ln_q(x), rel=1e-12)

    def test_negative_arguments(self):
        for x in (-0.5, -3.0, -10.0, -35.0):
            assert q_func(x) == pytest.approx(mp_ln_q(x), rel=1e-10, abs=1e-295)


class TestQInv:
    def test_median(self):
        assert q_inv(math.log(0.5)) == 0.0

    def test_deep_tail_matches_bisection_oracle(self):
        ln_p = -100.0 * math.log(2.0)
        lo, hi = 0.0, 45.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if q_func(mid) > ln_p:
                lo = mid
            else:
                hi = mid
        assert q_inv(ln_p) == pytest.approx(0.5 * (lo + hi), abs=1e-10)
        assert q_inv(ln_p) == pytest.approx(11.4845404, abs=1e-6)

    def test_one_in_thousand(self):
        assert q_inv(math.log(1e-3)) == pytest.approx(3.0902323061678136, abs=1e-10)

    def test_roundtrip(self):
        for x in np.linspace(-8.0, 38.0, 300):
            assert q_inv(q_func(x)) == pytest.approx(x, abs=1e-9, rel=1e-9)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            q_inv(0.1)
        with pytest.raises(ValueError):
            q_inv(-math.inf)
        with pytest.raises(ValueError):
            q_inv(0.0)

    def test_tail_approximation_accuracy(self):
        # two-term tail inverse within 1% over delta in [1e-40, 1e-3]; measured
        # worst case is 1.04e-2 at the 1e-3 endpoint, interior stays below 7e-3
        deltas = np.logspace(-40, -3, 38)
        rels = []
        for d in deltas:
            exact = q_inv(math.log(d))
            appr = q_inv_tail_approx(math.log(d))
            rels.append(abs(appr - exact) / exact)
        assert max(rels[:-1]) <= 1e-2
        assert rels[-1] <= 1.05e-2


class TestEntropy:
    def test_fair_coin(self):
        assert entropy(0.5, base="bits") == pytest.approx(1.0, abs=1e-15)

    def test_zero_convention(self):
        assert entropy(0.0) == 0.0
        assert entropy(1.0) == 0.0

    def test_tenth(self):
        p = 0.1
        direct = -(p * math.log2(p) + (1 - p) * math.log2(1 - p))
        assert entropy(p, base="bits") == pytest.approx(direct, abs=1e-14)
        assert entropy(p, base="bits") == pytest.approx(0.4690, abs=1e-4)

    def test_concave_on_grid(self):
        ps = np.linspace(0.0, 1.0, 101)
        for p in ps:
            for q in ps:
                mid = entropy((p + q) / 2.0)
                assert mid >= (entropy(p) + entropy(q)) / 2.0 - 1e-12

    def test_domain(self):
        with pytest.raises(ValueError):
            entropy(-0.1)
        with pytest.raises(ValueError):
            entropy(1.1)
        with pytest.raises(ValueError):
            entropy(0.5, base="trits")


class TestAlpha:
    def test_full_range_is_mean(self):
        assert alpha_quantile(QuantileRange(0.0, 1.0)) == pytest.approx(1.0, abs=1e-12)

    def test_empty_range(self):
        assert alpha_quantile(QuantileRange(0.3, 0.3)) == 0.0

    def test_against_quadrature(self):
        val, _ = integrate.quad(lambda g: -math.log(g), 0.5, 1.0, epsrel=1e-12)
        assert alpha_quantile(QuantileRange(0.5, 1.0)) == pytest.approx(val, abs=1e-12)
        assert val == pytest.approx(0.15343, abs=1e-5)

    def test_additivity(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a, b, c = np.sort(rng.random(3))
            lhs = alpha(a, b) + alpha(b, c)
            assert lhs == pytest.approx(alpha(a, c), abs=1e-12)

    def test_invalid_range(self):
        with pytest.raises(ValueError):
            QuantileRange(0.7, 0.3)
        with pytest.raises(ValueError):
            QuantileRange(-0.1, 0.5)


class TestRegIncBeta:
    def test_uniform_case(self):
        assert reg_inc_beta(0.37, 1.0, 1.0) == pytest.approx(0.37, abs=1e-12)

    def test_boundaries(self):
        assert reg_inc_beta(0.0, 2.5, 3.5) == 0.0
        assert reg_inc_beta(1.0, 2.5, 3.5) == 1.0

    def test_symmetry_point(self):
        assert reg_inc_beta(0.5, 2.0, 2.0) == pytest.approx(0.5, abs=1e-12)

    def test_closed_form_2_2(self):
        # I_x(2,2) = x^2 (3 - 2x)
        for x in (0.1, 0.37, 0.81):
            assert reg_inc_beta(x, 2.0, 2.0) == pytest.approx(x * x * (3 - 2 * x), abs=1e-10)

    def test_domain(self):
        with pytest.raises(ValueError):
            reg_inc_beta(-0.1, 1.0, 1.0)
        with pytest.raises(ValueError):
            reg_inc_beta(0.5, 0.0, 1.0)
