"""Desk-scale Monte Carlo laboratory.

The simulator works in the column-normalized convention: the stored
codebook matrix carries per-entry variance P_tot/(K) per column entry
(column energy ~ n*P), and the AMP iteration divides it out, running with
unit-variance non-zeros and noise variance mu/P_tot.  In those units the
measured residual energy ||R||^2/n is directly comparable to the
state-evolution sequence, which is where the 5%-tracking experiments live.

Everything is reproducible: (master seed, parameters) fully determine
every output, and per-trial seeds derive from (seed, trial index) so the
results cannot depend on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import NamedTuple

import numpy as np
from scipy import stats

from manymac.scalar_channel import (
    ScalarNoise,
    SectionSize,
    denoiser_deriv_vec,
    denoiser_eta_vec,
    threshold_star,
)
from manymac.special_math import reg_inc_beta

MATRIX_ENTRY_CAP = 1 << 25
BRUTE_FORCE_CAP = 10**6
DIVERGENCE_FACTOR = 1e6


class ResourceError(RuntimeError):
    """Requested simulation exceeds the configured resource caps."""


@dataclass
class ChannelInstance:
    """One realization of Y = A U + Z with block-sparse U.

    matrix holds the concatenated codebooks (n x K*M); section i owns
    columns [i*M, (i+1)*M) and its active column is support[i], scaled by
    the fading gain gains[i].
    """

    n: int
    users: int
    m_small: int
    ptot: float
    matrix: np.ndarray
    support: np.ndarray
    gains: np.ndarray
    observation: np.ndarray
    seed: int

    @property
    def mu(self) -> float:
        return self.users / self.n


@dataclass
class AmpRunResult:
    """Per-iteration residual energies (state-evolution units) and final PUPE."""

    sigma2_emp: list[float]
    pupe_emp: float
    threshold_used: float
    iters: int
    seed: int
    diverged: bool = False

    def to_record(self, inst: ChannelInstance) -> dict:
        return {
            "seed": self.seed,
            "n": inst.n,
            "K": inst.users,
            "M": inst.m_small,
            "ptot": inst.ptot,
            "iters": self.iters,
            "sigma2_emp": self.sigma2_emp,
            "pupe_emp": self.pupe_emp,
        }


class BetaLawReport(NamedTuple):
    statistic: float
    pvalue: float
    trials: int
    shape_a: float
    shape_b: float


def sample_system(n: int, mu: float, k: int, ptot: float, seed: int) -> ChannelInstance:
    """Draw one channel instance; deterministic given the seed.

    Codebook entries iid CN(0, P_tot/K) scaled so column energy ~ n*P;
    gains iid CN(0,1); noise iid CN(0,1).  Draw order is fixed (matrix,
    support, gains, noise) as part of the reproducibility contract.
    """
    if n < 64:
        raise ValueError("n must be >= 64")
    if k > 10:
        raise ValueError("simulation path restricted to k <= 10")
    users = int(mu * n)
    if users < 1:
        raise ValueError("mu*n must be >= 1")
    m = 1 << k
    if n * users * m > MATRIX_ENTRY_CAP:
        raise ResourceError(
            f"matrix of {n * users * m} entries exceeds cap {MATRIX_ENTRY_CAP}"
        )
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    entry_std = math.sqrt(ptot / users / 2.0)
    matrix = entry_std * (
        rng.standard_normal((n, users * m)) + 1j * rng.standard_normal((n, users * m))
    )
    support = rng.integers(0, m, size=users)
    gains = (rng.standard_normal(users) + 1j * rng.standard_normal(users)) / math.sqrt(2.0)
    noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    u = np.zeros(users * m, dtype=complex)
    u[np.arange(users) * m + support] = gains
    observation = matrix @ u + noise
    return ChannelInstance(
        n=n,
        users=users,
        m_small=m,
        ptot=ptot,
        matrix=matrix,
        support=support,
        gains=gains,
        observation=observation,
        seed=seed,
    )


def amp_run(inst: ChannelInstance, t_max: int, onsager: bool = True) -> AmpRunResult:
    """Scalar AMP with the Bernoulli-Gaussian denoiser and adaptive threshold.

    Runs in signal-normalized units (amplitude sqrt(P_tot/mu) divided out of
    the matrix and observation), so the residual energies land directly in
    state-evolution units.  The support estimate thresholds |U_hat|^2 at the
    optimal-miss threshold for the current residual variance; a section
    counts as an error unless its recovered support is exactly its true
    column.  onsager=False drops the memory-correction term (negative
    control; the iteration then stops tracking state evolution).
    """
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    if inst.ptot <= 0.0:
        raise ValueError("decoding needs ptot > 0")
    mu = inst.mu
    kappa = math.sqrt(inst.ptot / mu)
    m = SectionSize(int(round(math.log2(inst.m_small))))
    ln_m1 = m.ln_m_minus_1
    a_norm = inst.matrix / kappa
    y_norm = inst.observation / kappa
    n = inst.n
    km = a_norm.shape[1]

    u = np.zeros(km, dtype=complex)
    r = y_norm.copy()
    sigma2_emp = [float(np.vdot(r, r).real / n)]
    sigma2_hat = mu / inst.ptot + mu  # deterministic start of the recursion
    diverged = False
    iters = 0
    for _ in range(t_max):
        pseudo = a_norm.conj().T @ r + u
        u = denoiser_eta_vec(pseudo, sigma2_hat, ln_m1)
        r_new = y_norm - a_norm @ u
        if onsager:
            correction = mu * inst.m_small * float(
                np.mean(denoiser_deriv_vec(pseudo, sigma2_hat, ln_m1).real)
            )
            r_new = r_new + correction * r
        r = r_new
        iters += 1
        s2 = float(np.vdot(r, r).real / n)
        sigma2_emp.append(s2)
        sigma2_hat = s2
        if s2 > DIVERGENCE_FACTOR * sigma2_emp[0]:
            diverged = True
            break

    u_hat = a_norm.conj().T @ r + u
    theta = threshold_star(ScalarNoise(sigma2_hat), m)
    above = (np.abs(u_hat) ** 2 > theta).reshape(inst.users, inst.m_small)
    correct_on = above[np.arange(inst.users), inst.support]
    # a section decodes iff exactly its true column crosses the threshold
    section_err = ~(correct_on & (above.sum(axis=1) == 1))
    return AmpRunResult(
        sigma2_emp=sigma2_emp,
        pupe_emp=float(section_err.mean()),
        threshold_used=float(theta),
        iters=iters,
        seed=inst.seed,
        diverged=diverged,
    )


def projection_decode_bruteforce(codebooks: np.ndarray, observation: np.ndarray):
    """Exact maximizer of the projection energy over all codeword tuples.

    codebooks: (K, n, M) complex array; observation: (n,).  Enumerates all
    M^K tuples in lexicographic order and returns the tuple of column
    indices maximizing ||P_span Y||^2 (ties resolve to the earliest tuple).
    """
    codebooks = np.asarray(codebooks)
    k, n, m = codebooks.shape
    if m**k > BRUTE_FORCE_CAP:
        raise ResourceError(f"search space M^K = {m**k} exceeds {BRUTE_FORCE_CAP}")
    if k >= n:
        raise ValueError("need K < n for the projection to be informative")
    tuples = np.array(list(product(range(m), repeat=k)), dtype=int)
    best_idx = 0
    best_val = -math.inf
    chunk = 4096
    for start in range(0, len(tuples), chunk):
        block = tuples[start : start + chunk]
        mats = np.empty((len(block), n, k), dtype=complex)
        for j in range(k):
            mats[:, :, j] = codebooks[j][:, block[:, j]].T
        q, _ = np.linalg.qr(mats)
        energies = np.sum(np.abs(np.einsum("tnk,n->tk", q.conj(), observation)) ** 2, axis=1)
        i = int(np.argmax(energies))
        if energies[i] > best_val:
            best_val = float(energies[i])
            best_idx = start + i
    return tuple(int(x) for x in tuples[best_idx])


def beta_law_check(
    n: int,
    big_k: int,
    t: int,
    trials: int,
    seed: int,
    shape_a: float | None = None,
    shape_b: float | None = None,
) -> BetaLawReport:
    """Kolmogorov-Smirnov test of the projection-ratio statistic.

    The squared projection of a random direction in C^{n-K1+t} onto a fixed
    t-dimensional subspace is the chi-square ratio
    sum_{i<=t} |Z_i|^2 / sum_{i<=n-K1+t} |Z_i|^2 and should follow
    Beta(t, n-K1).  The sample is tested against Beta(shape_a, shape_b),
    defaulting to the claimed parameters; passing shifted shapes turns this
    into a misspecification control.
    """
    if t < 1:
        raise ValueError("t must be >= 1 (empty projection has no law)")
    if not t <= big_k < n:
        raise ValueError("need 1 <= t <= K1 < n")
    if trials < 500:
        raise ValueError("at least 500 trials required")
    dim = n - big_k + t
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    z = rng.standard_normal((trials, dim)) ** 2 + rng.standard_normal((trials, dim)) ** 2
    ratios = z[:, :t].sum(axis=1) / z.sum(axis=1)
    a = float(shape_a) if shape_a is not None else float(t)
    b = float(shape_b) if shape_b is not None else float(n - big_k)
    xs = np.sort(ratios)
    cdf = np.array([reg_inc_beta(float(x), a, b) for x in xs])
    i = np.arange(1, trials + 1)
    d_plus = np.max(i / trials - cdf)
    d_minus = np.max(cdf - (i - 1) / trials)
    stat = float(max(d_plus, d_minus))
    pvalue = float(stats.kstwo.sf(stat, trials))
    return BetaLawReport(stat, pvalue, trials, a, b)
