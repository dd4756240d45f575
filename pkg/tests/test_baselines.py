"""Classical baselines: closed-form anchors, coupled-seed monotonicity,
and validation of the prefix-of-weakest subset reduction."""

import math
from itertools import combinations

import numpy as np
import pytest

from manymac.baselines import (
    ClassicalConfig,
    TIN_MODEL_TAG,
    _gain_matrix,
    joint_outage,
    prop1_converse,
    shamai_bettesh_asymptotic,
    shamai_bettesh_finite_k,
    tdma_classical,
    tin_energy,
)
from manymac.bounds import SystemConfig, converse_single_user


class TestTdma:
    def test_value_at_unit_spectral_efficiency(self):
        assert tdma_classical(1.0, 0.1) == pytest.approx(1.0 / 0.10536052, rel=1e-6)
        assert abs(tdma_classical(1.0, 0.1) - 9.491) <= 1e-3

    def test_small_s_limit(self):
        eps = 0.2
        assert tdma_classical(1e-9, eps) == pytest.approx(
            math.log(2.0) / (-math.log1p(-eps)), rel=1e-6
        )

    def test_vacuous_reliability(self):
        # energy falls like 1/(-ln(1-eps)) as eps -> 1
        seq = [tdma_classical(1.0, 1.0 - 10.0 ** (-j)) for j in (2, 6, 10, 15)]
        assert all(b < a for a, b in zip(seq, seq[1:]))
        assert seq[-1] == pytest.approx(1.0 / (15.0 * math.log(10.0)), rel=1e-2)

    def test_domain(self):
        with pytest.raises(ValueError):
            tdma_classical(0.0, 0.1)
        with pytest.raises(ValueError):
            tdma_classical(1.0, 1.0)


class TestTin:
    def test_vanishing_interference_matches_single_user(self):
        tin = tin_energy(SystemConfig(100, 1e-9, 0.1))
        su = converse_single_user(SystemConfig(100, 1e-9, 0.1))
        assert tin.feasible
        assert tin.ebno_linear == pytest.approx(su.ebno_linear, rel=1e-4)
        assert tin.witness["tin-model"] == TIN_MODEL_TAG

    def test_monotone_in_mu(self):
        vals = [
            tin_energy(SystemConfig(100, mu, 0.1)).ebno_linear
            for mu in (1e-6, 1e-5, 1e-4, 1e-3)
        ]
        assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))

    def test_divergence_at_strict_targets(self):
        assert tin_energy(SystemConfig(100, 1e-7, 1e-3)).feasible
        assert not tin_energy(SystemConfig(100, 1e-3, 1e-3)).feasible


class TestJointOutage:
    def test_single_user_closed_form(self):
        ccfg = ClassicalConfig(users=1, rate_per_user=1.0, ptot=2.0, trials=20000, seed=9)
        est = joint_outage(ccfg)
        exact = 1.0 - math.exp(-(2.0**1.0 - 1.0) / 2.0)
        assert abs(est.value - exact) <= 3.0 * est.stderr

    def test_zero_rate(self):
        ccfg = ClassicalConfig(users=4, rate_per_user=0.0, ptot=2.0, trials=500, seed=9)
        assert joint_outage(ccfg).value == 0.0

    def test_monotone_in_rate_coupled_seeds(self):
        vals = [
            joint_outage(
                ClassicalConfig(users=4, rate_per_user=r, ptot=4.0, trials=4000, seed=77)
            ).value
            for r in (0.2, 0.5, 1.0, 2.0)
        ]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_prefix_reduction_equals_brute_force(self):
        # all-subsets check for K = 5, validating the sorted-prefix shortcut
        ccfg = ClassicalConfig(users=5, rate_per_user=0.7, ptot=6.0, trials=400, seed=123)
        p = ccfg.ptot / ccfg.users
        gains = _gain_matrix(ccfg)
        brute = np.zeros(ccfg.trials, dtype=bool)
        for i in range(ccfg.trials):
            out = False
            for size in range(1, 6):
                for sub in combinations(range(5), size):
                    if math.log2(1.0 + p * gains[i, list(sub)].sum()) <= size * 0.7:
                        out = True
            brute[i] = out
        est = joint_outage(ccfg)
        assert est.value == pytest.approx(brute.mean(), abs=1e-12)

    def test_precision_flag(self):
        ccfg = ClassicalConfig(users=2, rate_per_user=1.0, ptot=2.0, trials=500, seed=1)
        assert joint_outage(ccfg, target_stderr=1e-6).flagged


class TestShamaiBettesh:
    def test_single_user_closed_form(self):
        ccfg = ClassicalConfig(users=1, rate_per_user=1.0, ptot=2.0, trials=20000, seed=5)
        est = shamai_bettesh_finite_k(ccfg)
        exact = 1.0 - math.exp(-(2.0**1.0 - 1.0) / 2.0)
        assert abs(est.value - exact) <= 3.0 * est.stderr

    def test_zero_rate_all_decoded(self):
        ccfg = ClassicalConfig(users=8, rate_per_user=0.0, ptot=4.0, trials=300, seed=5)
        assert shamai_bettesh_finite_k(ccfg).value == 0.0

    def test_multiuser_diversity(self):
        # PUPE decreases with K at fixed S = K*R and P_tot
        s, ptot = 1.0, 8.0
        vals, errs = [], []
        for k in (2, 10, 50):
            ccfg = ClassicalConfig(users=k, rate_per_user=s / k, ptot=ptot, trials=4000, seed=13)
            est = shamai_bettesh_finite_k(ccfg)
            vals.append(est.value)
            errs.append(est.stderr)
        assert vals[1] <= vals[0] + 3.0 * (errs[0] + errs[1])
        assert vals[2] <= vals[1] + 3.0 * (errs[1] + errs[2])

    def test_finite_k_approaches_asymptotic(self):
        s, ptot = 1.0, 8.0
        asym = shamai_bettesh_asymptotic(s, ptot)
        for k, tol in ((50, 0.05), (200, 0.03)):
            ccfg = ClassicalConfig(users=k, rate_per_user=s / k, ptot=ptot, trials=3000, seed=21)
            est = shamai_bettesh_finite_k(ccfg)
            assert abs(est.value - asym) <= tol

    def test_asymptotic_limits(self):
        assert shamai_bettesh_asymptotic(1.0, 0.0) == 1.0
        vals = [shamai_bettesh_asymptotic(1.0, p) for p in (0.5, 2.0, 8.0, 32.0)]
        assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))


class TestProp1Converse:
    def test_second_term_value(self):
        # P = 1 per user, eps = 0.1: log2(1 - ln(0.9)) ~ 0.1445
        ccfg = ClassicalConfig(users=10, rate_per_user=1.0, ptot=10.0, trials=2000, seed=3)
        val = prop1_converse(ccfg, eps=0.1, theta=0.100001)
        assert val == pytest.approx(math.log2(1.0 - math.log1p(-0.1)), abs=1e-4)

    def test_blowup_near_eps(self):
        ccfg = ClassicalConfig(users=20, rate_per_user=1.0, ptot=20.0, trials=500, seed=3)
        near = prop1_converse(ccfg, eps=0.1, theta=0.1000001)
        second = math.log2(1.0 - math.log1p(-0.1))
        assert near == pytest.approx(second, abs=1e-5)

    def test_min_of_terms(self):
        ccfg = ClassicalConfig(users=20, rate_per_user=1.0, ptot=20.0, trials=2000, seed=3)
        val = prop1_converse(ccfg, eps=0.1, theta=0.5)
        p = 1.0
        gains = np.sort(_gain_matrix(ccfg), axis=1)
        weakest = gains[:, :10].sum(axis=1)
        first = float(np.mean(np.log2(1.0 + p * weakest))) / (20 * 0.4)
        second = math.log2(1.0 - p * math.log1p(-0.1))
        assert val <= first + 1e-12
        assert val <= second + 1e-12

    def test_domain(self):
        ccfg = ClassicalConfig(users=5, rate_per_user=1.0, ptot=5.0, trials=500, seed=3)
        with pytest.raises(ValueError):
            prop1_converse(ccfg, eps=0.2, theta=0.1)
