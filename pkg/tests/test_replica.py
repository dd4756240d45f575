"""Multiuser-efficiency minimizer and predicted-PUPE tests."""

import math

import numpy as np
import pytest

from manymac.replica import (
    RIGOR_TAG,
    AllOrNothing,
    ReplicaPoint,
    all_or_nothing_limit,
    multiuser_efficiency,
    replica_pupe,
)
from manymac.scalar_channel import SectionSize, mi_bernoulli_scaled

M100 = SectionSize(100)


def objective(mu, b2, m, eta):
    return mu * mi_bernoulli_scaled(1.0 / (eta * b2), m) + 0.5 * (eta - 1.0 - math.log(eta))


class TestMultiuserEfficiency:
    def test_vanishing_density_gives_unity(self):
        b2 = 2.0 * 2.0 * 100.0  # 3 dB at k=100
        eta = multiuser_efficiency(1e-8, b2, M100)
        assert eta == pytest.approx(1.0, abs=1e-4)

    def test_range(self):
        for mu in (1e-4, 0.006, 0.05):
            for db in (-1.0, 0.5, 2.0, 6.0):
                eta = multiuser_efficiency(mu, 2.0 * 10 ** (db / 10.0) * 100.0, M100)
                assert 0.0 < eta <= 1.0

    def test_grid_dominance(self):
        mu, b2 = 0.006, 2.0 * 10 ** (0.05) * 100.0
        eta = multiuser_efficiency(mu, b2, M100)
        best = objective(mu, b2, M100, eta)
        for e in np.logspace(-6, 0, 64):
            assert best <= objective(mu, b2, M100, float(e)) + 1e-9

    def test_penalty_nonnegative_zero_only_at_one(self):
        etas = np.logspace(-6, 0, 200)
        pen = 0.5 * (etas - 1.0 - np.log(etas))
        assert np.all(pen >= 0.0)
        assert 0.5 * (1.0 - 1.0 - math.log(1.0)) == 0.0
        assert np.all(pen[etas < 1.0 - 1e-9] > 0.0)

    def test_step_between_zero_and_one_db_at_mu_006(self):
        low = multiuser_efficiency(0.006, 2.0 * 10 ** (0.0) * 100.0, M100)
        high = multiuser_efficiency(0.006, 2.0 * 10 ** (0.1) * 100.0, M100)
        assert low < 0.5
        assert high > 0.9


class TestReplicaPupe:
    def test_point_invariants(self):
        pt = replica_pupe(1e-3, 2.0, M100)
        assert isinstance(pt, ReplicaPoint)
        assert pt.b2 == pytest.approx(2.0 * 2.0 * 100.0)
        assert pt.sigma2_eff == pytest.approx(1.0 / (pt.eta_star * pt.b2), rel=1e-12)
        assert 0.0 <= pt.pe <= 1.0

    def test_flat_envelope_small_mu(self):
        pt = replica_pupe(1e-4, 10 ** (0.6), M100)  # 6 dB, far past the step
        assert pt.pe < 1e-3

    def test_monotone_in_ebno(self):
        pes = [replica_pupe(0.006, 10 ** (db / 10.0), M100).pe for db in (-0.5, 0.0, 0.5, 1.0, 2.0)]
        assert all(b <= a + 1e-9 for a, b in zip(pes, pes[1:]))

    def test_rigor_tag_exists(self):
        assert RIGOR_TAG == "replica-prediction"


class TestAllOrNothing:
    def test_label_mapping(self):
        assert all_or_nothing_limit(0.25).label == "One"
        assert all_or_nothing_limit(0.75).label == "Zero"
        assert all_or_nothing_limit(0.5).label == "Boundary"

    def test_probe_values(self):
        rep = all_or_nothing_limit(0.45, probe_m=M100)
        assert isinstance(rep, AllOrNothing)
        assert rep.probe_pe == pytest.approx(0.2136523, abs=2e-6)
        assert all_or_nothing_limit(0.25).probe_pe is None

    def test_domain(self):
        with pytest.raises(ValueError):
            all_or_nothing_limit(0.0)
