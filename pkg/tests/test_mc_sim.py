"""Simulator tests: energy accounting, seed determinism, decoder behavior
in extreme regimes, and the projection-ratio distribution."""

import math

import numpy as np
import pytest

from manymac.bounds import se_fixed_point
from manymac.mc_sim import (
    ResourceError,
    amp_run,
    beta_law_check,
    projection_decode_bruteforce,
    sample_system,
)
from manymac.scalar_channel import SectionSize


class TestSampleSystem:
    def test_received_energy(self):
        vals = []
        for s in range(100):
            inst = sample_system(512, 0.25, 2, 4.0, s)
            vals.append(float(np.vdot(inst.observation, inst.observation).real) / 512)
        mean = np.mean(vals)
        band = 3.0 * np.std(vals, ddof=1) / math.sqrt(len(vals))
        assert abs(mean - 5.0) <= band

    def test_seed_determinism(self):
        a = sample_system(128, 0.25, 2, 2.0, 99)
        b = sample_system(128, 0.25, 2, 2.0, 99)
        assert np.array_equal(a.matrix, b.matrix)
        assert np.array_equal(a.support, b.support)
        assert np.array_equal(a.observation, b.observation)

    def test_zero_power_is_pure_noise(self):
        inst = sample_system(4096, 0.01, 1, 0.0, 3)
        assert float(np.vdot(inst.observation, inst.observation).real) / 4096 == pytest.approx(
            1.0, rel=0.1
        )

    def test_column_energy_matches_per_user_power(self):
        inst = sample_system(512, 0.25, 2, 4.0, 7)
        n_p = inst.ptot / inst.mu  # n * P
        norms = np.sum(np.abs(inst.matrix) ** 2, axis=0)
        assert np.mean(norms) == pytest.approx(n_p, rel=0.05)

    def test_resource_cap(self):
        with pytest.raises(ResourceError):
            sample_system(8192, 0.5, 10, 1.0, 0)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            sample_system(32, 0.25, 2, 1.0, 0)
        with pytest.raises(ValueError):
            sample_system(128, 0.25, 20, 1.0, 0)


class TestAmpRun:
    def test_high_snr_recovers(self):
        pupes = [
            amp_run(sample_system(512, 0.1, 2, 1e3, 100 + s), t_max=10).pupe_emp for s in range(5)
        ]
        assert np.mean(pupes) <= 0.01

    def test_tiny_power_fails(self):
        pupes = [
            amp_run(sample_system(512, 0.1, 2, 1e-3, 200 + s), t_max=10).pupe_emp for s in range(5)
        ]
        assert np.mean(pupes) >= 0.9

    def test_tracks_state_evolution(self):
        mu, ptot = 0.25, 40.0
        trace = se_fixed_point(mu, ptot, SectionSize(2))
        se = list(trace.sigma2_seq) + [trace.sigma2_inf] * 12
        emp = np.mean(
            [amp_run(sample_system(1024, mu, 2, ptot, 300 + s), t_max=10).sigma2_emp for s in range(8)],
            axis=0,
        )
        for t in range(len(emp)):
            assert abs(emp[t] - se[t]) / se[t] <= 0.05

    def test_onsager_removal_breaks_tracking(self):
        mu, ptot = 0.25, 40.0
        trace = se_fixed_point(mu, ptot, SectionSize(2))
        se = list(trace.sigma2_seq) + [trace.sigma2_inf] * 12
        emp = np.mean(
            [
                amp_run(sample_system(1024, mu, 2, ptot, 300 + s), t_max=6, onsager=False).sigma2_emp
                for s in range(8)
            ],
            axis=0,
        )
        devs = [abs(emp[t] - se[t]) / se[t] for t in range(min(6, len(emp)))]
        assert max(devs) > 0.15

    @pytest.mark.parametrize(
        "k,mu,ptot",
        [(2, 0.1, 30.0), (2, 0.25, 40.0), (3, 0.1, 40.0), (3, 0.25, 60.0)],
    )
    def test_pupe_matches_prediction(self, k, mu, ptot):
        trace = se_fixed_point(mu, ptot, SectionSize(k))
        pupes = np.array(
            [
                amp_run(sample_system(1024, mu, k, ptot, 500 + s), t_max=12).pupe_emp
                for s in range(20)
            ]
        )
        stderr = pupes.std(ddof=1) / math.sqrt(len(pupes))
        assert abs(pupes.mean() - trace.pupe_pred) <= max(0.02, 3.0 * stderr)

    def test_record_schema(self):
        inst = sample_system(128, 0.25, 2, 2.0, 5)
        res = amp_run(inst, t_max=4)
        rec = res.to_record(inst)
        assert set(rec) == {"seed", "n", "K", "M", "ptot", "iters", "sigma2_emp", "pupe_emp"}
        assert rec["iters"] == 4
        assert len(rec["sigma2_emp"]) == res.iters + 1


class TestProjectionDecoder:
    def test_zero_noise_exact_recovery(self):
        rng = np.random.default_rng(41)
        k, n, m = 3, 24, 4
        books = (rng.standard_normal((k, n, m)) + 1j * rng.standard_normal((k, n, m))) / np.sqrt(2)
        truth = (2, 0, 3)
        gains = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2)
        y = sum(gains[i] * books[i][:, truth[i]] for i in range(k))
        assert projection_decode_bruteforce(books, y) == truth

    def test_single_user_is_matched_filter(self):
        rng = np.random.default_rng(43)
        n, m = 16, 8
        books = (rng.standard_normal((1, n, m)) + 1j * rng.standard_normal((1, n, m))) / np.sqrt(2)
        y = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        got = projection_decode_bruteforce(books, y)[0]
        cols = books[0] / np.linalg.norm(books[0], axis=0)
        want = int(np.argmax(np.abs(cols.conj().T @ y) ** 2))
        assert got == want

    def test_pupe_reproducible(self):
        def experiment():
            errors = 0
            k, n, m, ptot, trials = 2, 16, 4, 20.0, 300
            for trial in range(trials):
                rng = np.random.default_rng(np.random.SeedSequence(entropy=777, spawn_key=(trial,)))
                scale = math.sqrt(ptot / k / 2.0)
                books = scale * (
                    rng.standard_normal((k, n, m)) + 1j * rng.standard_normal((k, n, m))
                )
                truth = tuple(rng.integers(0, m, size=k))
                gains = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2)
                noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
                y = sum(gains[i] * books[i][:, truth[i]] for i in range(k)) + noise
                got = projection_decode_bruteforce(books, y)
                errors += sum(g != t for g, t in zip(got, truth))
            return errors / (k * trials)

        assert experiment() == experiment()

    def test_monotone_in_power_coupled_seeds(self):
        def pupe(ptot):
            k, n, m, trials = 2, 12, 2, 250
            errors = 0
            for trial in range(trials):
                rng = np.random.default_rng(np.random.SeedSequence(entropy=55, spawn_key=(trial,)))
                books = math.sqrt(ptot / k / 2.0) * (
                    rng.standard_normal((k, n, m)) + 1j * rng.standard_normal((k, n, m))
                )
                truth = tuple(rng.integers(0, m, size=k))
                gains = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2)
                noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
                y = sum(gains[i] * books[i][:, truth[i]] for i in range(k)) + noise
                got = projection_decode_bruteforce(books, y)
                errors += sum(g != t for g, t in zip(got, truth))
            return errors / (k * trials)

        vals = [pupe(p) for p in (0.5, 4.0, 32.0)]
        assert vals[0] >= vals[1] >= vals[2]

    def test_search_cap(self):
        books = np.zeros((8, 16, 8), dtype=complex)
        with pytest.raises(ResourceError):
            projection_decode_bruteforce(books, np.zeros(16, dtype=complex))


class TestBetaLaw:
    def test_claimed_law_accepted(self):
        rep = beta_law_check(64, 16, 4, 2000, seed=4242)
        assert rep.pvalue > 0.01
        assert rep.shape_a == 4.0 and rep.shape_b == 48.0

    def test_misspecified_law_rejected(self):
        rep = beta_law_check(64, 16, 4, 2000, seed=4242, shape_a=5.0, shape_b=48.0)
        assert rep.pvalue < 0.01

    def test_domain(self):
        with pytest.raises(ValueError):
            beta_law_check(64, 16, 0, 2000, seed=1)
        with pytest.raises(ValueError):
            beta_law_check(64, 16, 4, 100, seed=1)
