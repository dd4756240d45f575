"""The effective scalar observation V = X + sigma*W and everything around it.

Two distinct priors live here, and they never mix:

- complex path (used by the AMP achievability bound and the simulator):
  X ~ CN(0,1) w.p. 1/M, else 0.  Conditioned on X nonzero, |V|^2 is
  (1+tau)*Exp(1); conditioned on zero it is tau*Exp(1) (tau = sigma^2).
  All integrals reduce to one radial dimension r = |v|^2, which is what
  keeps M = 2^100 tractable.

- real path (used by the replica predictions): X ~ Ber(1/M), W ~ N(0,1).

Every 1/M weight and (M-1) factor is carried in logs; M is never
materialized as an integer above k = 30.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize

from manymac.special_math import LN2, q_inv

QUAD_RTOL = 1e-9
QUAD_ATOL = 1e-12


@dataclass(frozen=True)
class ScalarNoise:
    """Noise variance tau = sigma^2 of the scalar channel."""

    tau: float

    def __post_init__(self):
        if not self.tau >= 0.0:
            raise ValueError(f"noise variance must be >= 0, got {self.tau}")


@dataclass(frozen=True)
class SectionSize:
    """Section of M = 2^k coordinates; the exact integer only exists for k <= 30."""

    log2_m: int
    m_small: int | None = None

    def __post_init__(self):
        if self.log2_m < 1:
            raise ValueError("log2_m must be >= 1")
        if self.log2_m <= 30:
            object.__setattr__(self, "m_small", 1 << self.log2_m)
        elif self.m_small is not None:
            raise ValueError("m_small only representable for log2_m <= 30")

    @property
    def ln_m(self) -> float:
        return self.log2_m * LN2

    @property
    def ln_m_minus_1(self) -> float:
        # ln(2^k - 1) = k ln2 + ln(1 - 2^-k), stable for any k
        return self.log2_m * LN2 + math.log1p(-math.exp(-self.log2_m * LN2))


class EpsStar(NamedTuple):
    value: float
    saturated: bool


def _require_simulation_m(m: SectionSize) -> int:
    if m.m_small is None:
        raise ValueError("denoiser requires an exact M (simulation path, k <= 30)")
    return m.m_small


def _posterior_nonzero_logit(r, tau: float, ln_m1: float):
    """ln[ (f1/( (M-1) f0 ))(r) ] for r = |v|^2; positive when 'nonzero' wins."""
    return r / (tau * (1.0 + tau)) - math.log1p(tau) + math.log(tau) - ln_m1


def denoiser_eta(v: complex, noise: ScalarNoise, m: SectionSize) -> complex:
    """Posterior mean E[X | V=v] for the complex Bernoulli-Gaussian prior.

    eta(v, tau) = pi1(|v|^2) * v / (1+tau) with pi1 the posterior nonzero
    probability, evaluated through its logit so huge M never underflows.
    """
    _require_simulation_m(m)
    tau = noise.tau
    if tau == 0.0:
        raise ValueError("degenerate noise: denoiser undefined at tau = 0")
    r = abs(v) ** 2
    logit = _posterior_nonzero_logit(r, tau, m.ln_m_minus_1)
    pi1 = 0.5 * (1.0 + math.tanh(0.5 * logit))  # stable logistic
    return pi1 * v / (1.0 + tau)


def denoiser_eta_vec(v: np.ndarray, tau: float, ln_m1: float) -> np.ndarray:
    """Vectorized denoiser on complex arrays (simulation hot path)."""
    r = np.abs(v) ** 2
    logit = r / (tau * (1.0 + tau)) - math.log1p(tau) + math.log(tau) - ln_m1
    pi1 = _logistic(logit)
    return pi1 * v / (1.0 + tau)


def _logistic(x):
    # tanh form is overflow-free
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def denoiser_deriv(v: complex, noise: ScalarNoise, m: SectionSize) -> complex:
    """Wirtinger derivative (d/dv) of denoiser_eta; real-valued in closed form.

    With g = pi1(r), r = |v|^2:  eta' = [g + r g(1-g)/(tau(1+tau))]/(1+tau).
    """
    _require_simulation_m(m)
    tau = noise.tau
    if tau == 0.0:
        raise ValueError("degenerate noise: denoiser undefined at tau = 0")
    r = abs(v) ** 2
    logit = _posterior_nonzero_logit(r, tau, m.ln_m_minus_1)
    pi1 = 0.5 * (1.0 + math.tanh(0.5 * logit))
    return complex((pi1 + r * pi1 * (1.0 - pi1) / (tau * (1.0 + tau))) / (1.0 + tau))


def denoiser_deriv_vec(v: np.ndarray, tau: float, ln_m1: float) -> np.ndarray:
    r = np.abs(v) ** 2
    logit = r / (tau * (1.0 + tau)) - math.log1p(tau) + math.log(tau) - ln_m1
    pi1 = _logistic(logit)
    return (pi1 + r * pi1 * (1.0 - pi1) / (tau * (1.0 + tau))) / (1.0 + tau)


@lru_cache(maxsize=None)
def _m_mmse_cached(tau: float, log2_m: int) -> float:
    """M * mmse(tau) for the complex prior, as a radial integral.

    M*mmse = 1 - int_0^inf  f1(r)^2 / (f1(r) + (M-1) f0(r)) * r/(1+tau)^2 dr
    with f1, f0 the exponential densities of |V|^2 given nonzero / zero.
    The integrand crosses over at the detection threshold
    theta* = tau(1+tau) ln((1+tau)(M-1)/tau); splitting there keeps the
    adaptive rule honest.  Tail beyond
    r_max = (1+tau)(ln M + 50 + 10 ln(1+tau)) is below 1e-15 analytically.
    """
    if tau == 0.0:
        return 0.0
    k = log2_m
    ln_m1 = k * LN2 + math.log1p(-math.exp(-k * LN2))

    def integrand(r):
        ln_f1 = -math.log1p(tau) - r / (1.0 + tau)
        ln_f0 = -math.log(tau) - r / tau
        ln_den = np.logaddexp(ln_f1, ln_m1 + ln_f0)
        return math.exp(2.0 * ln_f1 - ln_den) * r / (1.0 + tau) ** 2

    r_max = (1.0 + tau) * (k * LN2 + 50.0 + 10.0 * math.log1p(tau))
    theta_s = tau * (1.0 + tau) * (math.log1p(tau) - math.log(tau) + ln_m1)
    split = min(theta_s, r_max)
    v1, _ = integrate.quad(integrand, 0.0, split, epsrel=QUAD_RTOL, epsabs=QUAD_ATOL, limit=300)
    v2, _ = integrate.quad(integrand, split, r_max, epsrel=QUAD_RTOL, epsabs=QUAD_ATOL, limit=300)
    val = 1.0 - (v1 + v2)
    return min(max(val, 0.0), 1.0)


def mmse_scaled(noise: ScalarNoise, m: SectionSize) -> float:
    """M * mmse(tau) in [0, 1]; cached on (tau, k), safe for concurrent use."""
    return _m_mmse_cached(noise.tau, m.log2_m)


def psi(noise: ScalarNoise, threshold: float, m: SectionSize) -> float:
    """Support-recovery error of the thresholding detector |V|^2 > theta.

    psi(tau, theta, M) = (1/M)(1 - e^{-theta/(1+tau)}) + (1 - 1/M) e^{-theta/tau}.
    At tau = 0 with theta > 0 the false-alarm term is the limit 0.
    """
    if threshold < 0.0:
        raise ValueError("threshold must be >= 0")
    tau = noise.tau
    inv_m = math.exp(-m.ln_m)
    one_minus_inv_m = math.exp(m.ln_m_minus_1 - m.ln_m)
    miss = -math.expm1(-threshold / (1.0 + tau)) * inv_m
    if tau == 0.0:
        false_alarm = 0.0 if threshold > 0.0 else one_minus_inv_m
    else:
        false_alarm = one_minus_inv_m * math.exp(-threshold / tau)
    return miss + false_alarm


def threshold_star(noise: ScalarNoise, m: SectionSize) -> float:
    """Minimizer theta* = tau(1+tau) ln((1+tau)(M-1)/tau) of psi over theta."""
    tau = noise.tau
    if tau <= 0.0:
        raise ValueError("threshold_star needs tau > 0")
    return tau * (1.0 + tau) * (math.log1p(tau) - math.log(tau) + m.ln_m_minus_1)


def pupe_star(noise: ScalarNoise, m: SectionSize) -> float:
    """M * inf_theta psi: the per-section error of the optimal threshold.

    pi*(tau, M) = 1 - (1/(1+tau)) * ((M-1)(1/tau + 1))^{-tau}, evaluated as
    1 - exp(-ln(1+tau) - tau[ln(M-1) + ln((1+tau)/tau)]).
    """
    tau = noise.tau
    if tau == 0.0:
        return 0.0
    expo = -math.log1p(tau) - tau * (m.ln_m_minus_1 + math.log1p(tau) - math.log(tau))
    return -math.expm1(expo)


def eps_star_scalar(sigma: float, m: SectionSize) -> EpsStar:
    """Miss probability eps* of the best detector with output rate 1/M.

    Unique root of the strictly decreasing map
        eps -> Q^{-1}(eps/(M-1)) + Q^{-1}(eps)
    matched to 1/sigma, found in log-eps.  If 1/sigma leaves the
    representable range the nearest boundary is returned with
    saturated=True rather than raising.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be > 0")
    target = 1.0 / sigma
    ln_m1 = m.ln_m_minus_1

    def gap(ln_eps: float) -> float:
        return q_inv(ln_eps - ln_m1) + q_inv(ln_eps) - target

    lo, hi = math.log(1e-300), math.log1p(-1e-12)
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo <= 0.0:  # even the tiniest eps undershoots: noise too small
        return EpsStar(math.exp(lo), True)
    if g_hi >= 0.0:  # even eps ~ 1 overshoots: noise too large
        return EpsStar(math.exp(hi), True)
    root = optimize.brentq(gap, lo, hi, xtol=1e-13, rtol=8.9e-16)
    return EpsStar(math.exp(root), False)


@lru_cache(maxsize=None)
def _m_mi_cached(sigma2: float, log2_m: int) -> float:
    """M * I(X; X + sigma W) in nats, real X ~ Ber(1/M).

    Stable split M*I = T1 + (M-1)*T2 against the conditional laws:
      T1 = E_{z}[ ln M - ln(1 + e^{G(z)}) ],   G(z) = ln(M-1) - (1+2sz)/(2s^2)
      T2 = -E_{z}[ ln(1 - 1/M + e^{L(z)}) ],   L(z) = z/s - 1/(2s^2) - ln M
    with z standard normal (v = 1 + s z under p1, v = s z under p0).
    Integrands kink at G = 0 resp. L = 0; quadrature splits there.
    """
    if sigma2 <= 0.0:
        raise ValueError("sigma2 must be > 0")
    k = log2_m
    ln_m = k * LN2
    ln_m1 = ln_m + math.log1p(-math.exp(-ln_m))
    m_minus_1 = math.exp(ln_m1)
    inv_m = math.exp(-ln_m)
    s = math.sqrt(sigma2)

    def phi(z):
        return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)

    def t1(z):
        g = ln_m1 - (1.0 + 2.0 * s * z) / (2.0 * sigma2)
        return phi(z) * (ln_m - np.logaddexp(0.0, g))

    def t2_scaled(z):
        # (M-1) folded into the integrand: the bare integral is ~1/M and
        # would sit below any absolute quadrature tolerance
        ell = z / s - 1.0 / (2.0 * sigma2) - ln_m
        if ell > 30.0:
            val = ell + math.log1p((1.0 - inv_m) * math.exp(-ell))
        else:
            val = math.log1p(math.exp(ell) - inv_m)
        return phi(z) * m_minus_1 * val

    lim = 48.0
    z1 = s * ln_m1 - 1.0 / (2.0 * s)
    z2 = s * ln_m + 1.0 / (2.0 * s)
    pts1 = [z1] if -lim < z1 < lim else None
    pts2 = [z2] if -lim < z2 < lim else None
    v1, _ = integrate.quad(t1, -lim, lim, points=pts1, epsrel=QUAD_RTOL, epsabs=QUAD_ATOL, limit=400)
    v2, _ = integrate.quad(
        t2_scaled, -lim, lim, points=pts2, epsrel=QUAD_RTOL, epsabs=QUAD_ATOL, limit=400
    )
    return max(v1 - v2, 0.0)


def mi_bernoulli_scaled(sigma2: float, m: SectionSize) -> float:
    """M * I(sigma^2) in nats for the real Bernoulli prior; cached on (sigma2, k)."""
    return _m_mi_cached(sigma2, m.log2_m)


def mi_bernoulli_scaled_grid(sigma2_grid: np.ndarray, m: SectionSize, nodes: int = 24) -> np.ndarray:
    """Fast vectorized M*I over a grid of sigma^2 values.

    Fixed composite Gauss-Legendre panels per grid point, split at each
    integrand's own crossover; meant for locating optimizer basins (about
    1e-8 relative), with the cached adaptive rule used for refinement.
    """
    sigma2_grid = np.asarray(sigma2_grid, dtype=float)
    k = m.log2_m
    ln_m = k * LN2
    ln_m1 = m.ln_m_minus_1
    m_minus_1 = math.exp(ln_m1)
    inv_m = math.exp(-ln_m)
    s = np.sqrt(sigma2_grid)[:, None]

    gl_x, gl_w = np.polynomial.legendre.leggauss(nodes)
    lim = 48.0
    z1 = np.clip(s * ln_m1 - 1.0 / (2.0 * s), -lim, lim)
    z2 = np.clip(s * ln_m + 1.0 / (2.0 * s), -lim, lim)

    def panels(zc):
        # per-row breakpoints around the logit crossover zc, plus fixed ones
        # holding the Gaussian mass
        w = np.minimum(6.0 * s, 3.0)
        bp = np.concatenate(
            [
                np.full_like(zc, -lim),
                np.full_like(zc, -8.0),
                np.full_like(zc, 0.0),
                np.full_like(zc, 8.0),
                np.clip(zc - 8.0 * w, -lim, lim),
                np.clip(zc - w, -lim, lim),
                np.clip(zc + w, -lim, lim),
                np.clip(zc + 8.0 * w, -lim, lim),
                np.full_like(zc, lim),
            ],
            axis=1,
        )
        bp.sort(axis=1)
        lo = bp[:, :-1]
        hi = bp[:, 1:]
        mid = 0.5 * (lo + hi)[..., None]
        half = 0.5 * (hi - lo)[..., None]
        z = mid + half * gl_x  # (rows, panels, nodes)
        wts = half * gl_w
        return z.reshape(len(zc), -1), wts.reshape(len(zc), -1)

    phi = lambda z: np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)

    zz, ww = panels(z1)
    g = ln_m1 - (1.0 + 2.0 * s * zz) / (2.0 * sigma2_grid[:, None])
    t1 = np.sum(ww * phi(zz) * (ln_m - np.logaddexp(0.0, g)), axis=1)

    zz, ww = panels(z2)
    ell = zz / s - 1.0 / (2.0 * sigma2_grid[:, None]) - ln_m
    big = ell > 30.0
    val = np.where(
        big,
        ell + np.log1p((1.0 - inv_m) * np.exp(np.where(big, -ell, 0.0))),
        np.log1p(np.exp(np.where(big, 0.0, ell)) - inv_m),
    )
    t2 = np.sum(ww * phi(zz) * val, axis=1)

    return np.maximum(t1 - m_minus_1 * t2, 0.0)
