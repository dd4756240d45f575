"""Replica-symmetric predictions for the real-valued same-codebook model.

The observation is Y = A U + Z with A_{ij} ~ N(0, b^2/n) and U iid
Bernoulli(1/M); b^2 = 2 * (Eb/N0) * log2(M).  The predicted per-user error
composes two scalar quantities:

    eta* = argmin_{eta in (0,1]}  mu * M*I(1/(eta b^2)) + (eta - 1 - ln eta)/2
    pe   = eps*(sigma, M)  at  sigma^2 = 1/(eta* b^2)

The objective can hold two local minima near the transition, so the
minimizer runs a dense log grid first and refines every local basin.

These outputs are predictions of a non-rigorous method; every export is
tagged accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize

from manymac.scalar_channel import (
    SectionSize,
    eps_star_scalar,
    mi_bernoulli_scaled,
    mi_bernoulli_scaled_grid,
)

RIGOR_TAG = "replica-prediction"

ETA_GRID_POINTS = 2048
ETA_GRID_MIN = 1e-6
TIE_GAP = 1e-10


@dataclass(frozen=True)
class ReplicaPoint:
    """One (mu, Eb/N0) evaluation of the replica prediction."""

    mu: float
    ebno_linear: float
    b2: float
    eta_star: float
    sigma2_eff: float
    pe: float

    @property
    def ebno_db(self) -> float:
        return 10.0 * math.log10(self.ebno_linear)


class AllOrNothing(NamedTuple):
    label: str  # "One" | "Zero" | "Boundary"
    probe_pe: float | None


def _penalty(eta):
    return 0.5 * (eta - 1.0 - np.log(eta))


def multiuser_efficiency(mu: float, b2: float, m: SectionSize) -> float:
    """Global minimizer eta* of  mu*M*I(1/(eta b^2)) + (eta-1-ln eta)/2.

    Dense log-spaced grid over [1e-6, 1] with a fast fixed-rule quadrature
    locates every local basin; each basin is polished against the adaptive
    quadrature, and near-degenerate minima (objective gap < 1e-10) resolve
    to the larger eta.
    """
    if mu <= 0.0 or b2 <= 0.0:
        raise ValueError("mu and b2 must be positive")
    etas = np.logspace(math.log10(ETA_GRID_MIN), 0.0, ETA_GRID_POINTS)
    coarse = mu * mi_bernoulli_scaled_grid(1.0 / (etas * b2), m) + _penalty(etas)

    def objective(eta: float) -> float:
        return mu * mi_bernoulli_scaled(1.0 / (eta * b2), m) + float(_penalty(eta))

    # local minima on the grid (both endpoints may host one)
    lower = np.r_[True, coarse[1:] <= coarse[:-1]]
    upper = np.r_[coarse[:-1] <= coarse[1:], True]
    idx = np.nonzero(lower & upper)[0]

    candidates: list[tuple[float, float]] = []
    for i in idx:
        lo = etas[max(i - 1, 0)]
        hi = etas[min(i + 1, len(etas) - 1)]
        if hi > lo:
            res = optimize.minimize_scalar(
                objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13}
            )
            candidates.append((float(res.x), float(res.fun)))
        else:
            candidates.append((float(etas[i]), objective(float(etas[i]))))
    candidates.append((1.0, objective(1.0)))

    best_val = min(v for _, v in candidates)
    # ties toward larger eta
    eta_star = max(e for e, v in candidates if v <= best_val + TIE_GAP)
    return float(min(eta_star, 1.0))


def replica_pupe(mu: float, ebno: float, m: SectionSize) -> ReplicaPoint:
    """Full replica point: efficiency, effective noise, predicted PUPE."""
    if mu <= 0.0 or ebno <= 0.0:
        raise ValueError("mu and ebno must be positive")
    b2 = 2.0 * ebno * m.log2_m
    eta = multiuser_efficiency(mu, b2, m)
    sigma2 = 1.0 / (eta * b2)
    pe = eps_star_scalar(math.sqrt(sigma2), m).value
    return ReplicaPoint(mu=mu, ebno_linear=ebno, b2=b2, eta_star=eta, sigma2_eff=sigma2, pe=pe)


def all_or_nothing_limit(c: float, probe_m: SectionSize | None = None) -> AllOrNothing:
    """Threshold classifier at c = 1/2 for the huge-M limit of
    eps*(sigma^2 = c/ln M, M); c = 1/2 maps to Eb/N0 = -1.59 dB.

    Returns "One" for c < 1/2, "Zero" for c > 1/2, "Boundary" at c = 1/2.
    The optional finite-M probe reports eps*(sqrt(c/ln M), M) so callers
    can compare the classification against an actual root-find; the probe
    is decreasing in 1/sigma, so smaller c yields the smaller probe value.
    """
    if c <= 0.0:
        raise ValueError("c must be positive")
    if c < 0.5:
        label = "One"
    elif c > 0.5:
        label = "Zero"
    else:
        label = "Boundary"
    probe = None
    if probe_m is not None:
        probe = eps_star_scalar(math.sqrt(c / probe_m.ln_m), probe_m).value
    return AllOrNothing(label, probe)
