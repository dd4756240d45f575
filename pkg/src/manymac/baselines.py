"""Classical-regime reference curves and suboptimal-scheme baselines.

All Monte Carlo estimators draw their per-trial randomness from seeds
derived as (master seed, trial index), report standard errors, and reduce
in fixed trial order, so results never depend on how work is scheduled.

The symmetric-rate subset reduction used throughout: among subsets of a
candidate decoding set, the binding rate constraint for each size t is the
one holding the t weakest gains, so only prefixes of the gain order need
checking.  A brute-force all-subsets check validates this for small K in
the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from manymac.bounds import BoundEvaluation, SystemConfig, _su_fading_pe
from manymac.special_math import alpha

TIN_MODEL_TAG = "su-gaussian-interference"


@dataclass(frozen=True)
class ClassicalConfig:
    """K users at symmetric rate R bits per complex dof, total power ptot."""

    users: int
    rate_per_user: float
    ptot: float
    trials: int
    seed: int

    def __post_init__(self):
        if self.users < 1:
            raise ValueError("users must be >= 1")
        if self.rate_per_user < 0.0:
            raise ValueError("rate must be >= 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


class McEstimate(NamedTuple):
    value: float
    stderr: float
    flagged: bool


def _gain_matrix(ccfg: ClassicalConfig) -> np.ndarray:
    """|H|^2 draws, trials x K, unit-mean exponential, seeded per trial."""
    rows = np.empty((ccfg.trials, ccfg.users))
    for t in range(ccfg.trials):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=ccfg.seed, spawn_key=(t,)))
        rows[t] = rng.exponential(1.0, size=ccfg.users)
    return rows


def tdma_classical(s: float, eps: float) -> float:
    """Orthogonalization energy-per-bit: (2^S - 1)/S * 1/(-ln(1-eps))."""
    if s <= 0.0:
        raise ValueError("spectral efficiency must be > 0")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    return (2.0**s - 1.0) / s / (-math.log1p(-eps))


def tin_energy(cfg: SystemConfig, cap: float = 1e6) -> BoundEvaluation:
    """Treat-interference-as-noise baseline.

    Modeled as single-user k-bit detection over a Rayleigh gain with the
    aggregate received power S*E added to unit noise:
    feasible E satisfies 1 - E_G Q(Q^{-1}(2^-k) - sqrt(2kE G/(1+S E))) <= eps.
    The model choice is recorded in the witness as "tin-model".
    """
    k, s, eps = cfg.k, cfg.s, cfg.eps

    def pe(e: float) -> float:
        return _su_fading_pe(k * e / (1.0 + s * e), k)

    witness = {"tin-model": TIN_MODEL_TAG}
    if pe(cap) > eps:
        return BoundEvaluation.infeasible("tin", witness)
    lo, hi = 1e-9, cap
    if pe(lo) <= eps:
        hi = lo
    else:
        for _ in range(80):
            mid = math.sqrt(lo * hi)
            if pe(mid) <= eps:
                hi = mid
            else:
                lo = mid
    return BoundEvaluation.from_ptot("tin", hi * s, cfg.s, witness)


def joint_outage(ccfg: ClassicalConfig, target_stderr: float | None = None) -> McEstimate:
    """Monte Carlo joint-outage probability at symmetric rate R.

    Per draw the gains are sorted ascending; the union over all nonempty
    subsets is violated iff some prefix of the t weakest gains violates
    log2(1 + P * sum) <= t*R, so K checks per draw suffice.
    """
    if ccfg.users > 20:
        raise ValueError("joint_outage restricted to K <= 20")
    p_per_user = ccfg.ptot / ccfg.users
    gains = np.sort(_gain_matrix(ccfg), axis=1)
    csum = np.cumsum(gains, axis=1)
    t = np.arange(1, ccfg.users + 1)
    violated = np.log2(1.0 + p_per_user * csum) <= t * ccfg.rate_per_user
    outage = violated.any(axis=1).astype(float)
    value = float(outage.mean())
    stderr = float(outage.std(ddof=1) / math.sqrt(ccfg.trials)) if ccfg.trials > 1 else math.inf
    flagged = target_stderr is not None and stderr > target_stderr
    return McEstimate(value, stderr, flagged)


def _sb_decoded_fraction(gains_desc: np.ndarray, rate: float, p_per_user: float) -> int:
    """Largest d such that D = top-d gains passes every prefix-of-weakest check."""
    k = gains_desc.size
    total = gains_desc.sum()
    csum_top = np.cumsum(gains_desc)
    for d in range(k, 0, -1):
        denom = 1.0 + p_per_user * (total - csum_top[d - 1])
        # weakest-t within top-d: gains_desc[d-t:d]
        w = np.cumsum(gains_desc[:d][::-1])
        t = np.arange(1, d + 1)
        ok = t * rate < np.log2(1.0 + p_per_user * w / denom)
        if ok.all():
            return d
    return 0


def shamai_bettesh_finite_k(ccfg: ClassicalConfig) -> McEstimate:
    """Monte Carlo PUPE of the decode-the-strongest-feasible-set strategy.

    Per draw, take D = top-d gains for the largest d whose every subset
    rate constraint holds (prefix-of-weakest suffices at symmetric rate),
    treating dropped users as noise; PUPE = 1 - E[d*]/K.
    """
    if ccfg.users > 10**4:
        raise ValueError("shamai_bettesh_finite_k restricted to K <= 1e4")
    p_per_user = ccfg.ptot / ccfg.users
    gains = _gain_matrix(ccfg)
    fractions = np.empty(ccfg.trials)
    for i in range(ccfg.trials):
        desc = np.sort(gains[i])[::-1]
        fractions[i] = 1.0 - _sb_decoded_fraction(desc, ccfg.rate_per_user, p_per_user) / ccfg.users
    value = float(fractions.mean())
    stderr = float(fractions.std(ddof=1) / math.sqrt(ccfg.trials)) if ccfg.trials > 1 else math.inf
    return McEstimate(value, stderr, False)


def shamai_bettesh_asymptotic(s: float, ptot: float, n_theta: int = 1024, iters: int = 60) -> float:
    """K -> infinity limit of the decode-the-strongest PUPE at fixed S, P_tot.

    Returns 1 - nu*, with nu* the largest nu in [0, 1] such that
    theta*S <= log2(1 + P_tot*alpha(nu-theta, nu) / (1 + P_tot*alpha(nu, 1)))
    for all theta in (0, nu].  Feasibility is monotone in nu (smaller nu
    keeps stronger users and sheds interference), so bisection applies.
    """
    if s <= 0.0:
        raise ValueError("spectral efficiency must be > 0")
    if ptot < 0.0:
        raise ValueError("ptot must be >= 0")
    if ptot == 0.0:
        return 1.0

    frac = np.concatenate([np.logspace(-8, -1, n_theta // 4), np.linspace(0.1, 1.0, n_theta)])

    def feasible(nu: float) -> bool:
        if nu <= 0.0:
            return True
        th = nu * frac
        lhs = th * s
        rhs = np.log2(1.0 + ptot * alpha(nu - th, nu) / (1.0 + ptot * alpha(nu, 1.0)))
        return bool(np.all(lhs <= rhs + 1e-15))

    if feasible(1.0):
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return 1.0 - lo


def prop1_converse(ccfg: ClassicalConfig, eps: float, theta: float) -> float:
    """Symmetric-rate upper bound (bits/dof) from the two-term outer bound.

    min of (i) Monte Carlo  E[log2(1 + P * weakest theta*K sum)] / (K(theta-eps))
    and (ii) log2(1 - P ln(1-eps)); requires theta > eps.
    """
    if not eps < theta <= 1.0:
        raise ValueError("theta must lie in (eps, 1]")
    p_per_user = ccfg.ptot / ccfg.users
    t = max(int(round(theta * ccfg.users)), 1)
    gains = np.sort(_gain_matrix(ccfg), axis=1)
    weakest = gains[:, :t].sum(axis=1)
    first = float(np.mean(np.log2(1.0 + p_per_user * weakest))) / (ccfg.users * (theta - eps))
    second = math.log2(1.0 - p_per_user * math.log1p(-eps))
    return min(first, second)
