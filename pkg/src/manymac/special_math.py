"""Numerically hardened scalar special functions shared by every bound.

Probabilities that underflow in linear domain (2^-k for k up to 100 and
beyond) are carried as natural logs throughout.  The convention: a "log
probability" is a plain float ``<= 0`` holding ln(p).

The Rayleigh order-statistics integral

    alpha(a, b) = integral_a^b F^{-1}(1 - g) dg = a*ln(a) - b*ln(b) + b - a

(with F the CDF of a unit-mean exponential and 0*ln(0) = 0) is the
deterministic limit of normalized sums of ordered fading powers; it is the
only fading-specific quantity in the repository, so other fading laws would
enter through this one function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

LN2 = math.log(2.0)

# LogProb: natural log of a probability, value <= 0, exp(value) in [0, 1].
LogProb = float

_SQRT2 = math.sqrt(2.0)
_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class QuantileRange:
    """Quantile window [a, b] of the ordered fading powers, 0 <= a <= b <= 1."""

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 <= self.a <= self.b <= 1.0):
            raise ValueError(f"invalid quantile range [{self.a}, {self.b}]")


def q_func(x):
    """ln Q(x) for the standard normal upper tail Q(x) = P[N(0,1) > x].

    Stable over the whole real line: for x >= 0 uses the scaled
    complementary error function (Q(x) = 0.5*erfcx(x/sqrt2)*exp(-x^2/2),
    so the log never overflows even for x ~ 40); for x < 0 uses
    ln(1 - Q(-x)) through log1p, where Q(-x) is tiny.

    Accepts scalars or arrays; returns the same shape.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0.0
    xp = x[pos]
    out[pos] = np.log(0.5 * special.erfcx(xp / _SQRT2)) - 0.5 * xp * xp
    xn = -x[~pos]
    ln_q_neg = np.log(0.5 * special.erfcx(xn / _SQRT2)) - 0.5 * xn * xn
    out[~pos] = np.log1p(-np.exp(ln_q_neg))
    if out.ndim == 0:
        return float(out)
    return out


def _ln_phi(x: float) -> float:
    return -0.5 * x * x - _LN_SQRT_2PI


def q_inv(ln_p: LogProb) -> float:
    """Inverse of q_func: x such that ln Q(x) = ln_p.

    Rational initial guess (asymptotic tail expansion on either side of the
    median) refined by Newton iterations on ln Q; if Newton fails to settle,
    falls back to bisection, which always converges since ln Q is strictly
    decreasing.
    """
    if not (ln_p <= 0.0) or ln_p == -math.inf or math.isnan(ln_p):
        raise ValueError(f"log-probability out of range: {ln_p}")
    if ln_p == 0.0:
        raise ValueError("probability 1 has no finite quantile")

    ln_half = -LN2
    if ln_p == ln_half:
        return 0.0

    # Initial guess. For tails use the two-term asymptotic inverse; near the
    # median expand Q(x) ~ 1/2 - x*phi(0).
    if ln_p < ln_half:
        t = -ln_p
        x0 = math.sqrt(max(2.0 * t - math.log(max(4.0 * math.pi * t, 1.0)), 0.0)) if t > 1.0 else 0.0
        if t <= 1.0:
            x0 = (0.5 - math.exp(ln_p)) * math.sqrt(2.0 * math.pi)
    else:
        # p in (1/2, 1): mirror through Q(x) = 1 - Q(-x).
        ln_q_mirror = math.log(-math.expm1(ln_p))
        return -q_inv(ln_q_mirror)

    x = x0
    lo, hi = -40.0, 42.0
    converged = False
    for _ in range(80):
        f = q_func(x) - ln_p
        if f > 0:
            lo = max(lo, x)
        else:
            hi = min(hi, x)
        # d/dx ln Q(x) = -phi(x)/Q(x)
        deriv = -math.exp(_ln_phi(x) - q_func(x))
        step = f / deriv
        x_new = x - step
        if not (lo <= x_new <= hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * max(1.0, abs(x_new)):
            x = x_new
            converged = True
            break
        x = x_new
    if not converged:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if q_func(mid) > ln_p:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * max(1.0, abs(hi)):
                break
        x = 0.5 * (lo + hi)
    return float(x)


def q_inv_tail_approx(ln_delta: LogProb) -> float:
    """Two-term asymptotic inverse of the Gaussian tail.

    For small delta, Q^{-1}(delta) ~ sqrt(2 ln(1/delta) - ln(4 pi ln(1/delta))).
    Accurate to ~1e-4 relative at delta = 1e-40, degrading to ~1% at 1e-3.
    """
    t = -ln_delta
    if t <= 1.0:
        raise ValueError("tail approximation needs delta < 1/e")
    return math.sqrt(2.0 * t - math.log(4.0 * math.pi * t))


def entropy(p: float, base: str = "nats") -> float:
    """Binary entropy h(p), with 0*ln(0) = 0 exactly.

    base="nats" gives h(p) = -p ln p - (1-p) ln(1-p); base="bits" divides
    by ln 2.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"entropy argument {p} outside [0, 1]")
    if base not in ("nats", "bits"):
        raise ValueError(f"unknown entropy base {base!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    h = -p * math.log(p) - (1.0 - p) * math.log1p(-p)
    return h / LN2 if base == "bits" else h


def binary_entropy_vec(p):
    """Vectorized h(p) in nats with the 0*ln(0) = 0 convention."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    inner = (p > 0.0) & (p < 1.0)
    pi = p[inner]
    out[inner] = -pi * np.log(pi) - (1.0 - pi) * np.log1p(-pi)
    return out


def _xlnx(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0.0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def alpha(a, b):
    """a*ln(a) - b*ln(b) + b - a, vectorized, with 0*ln(0) = 0.

    Equals integral_a^b (-ln g) dg, the mean power carried by the fading
    quantile window [a, b] under unit-mean exponential gains.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = _xlnx(a) - _xlnx(b) + b - a
    if out.ndim == 0:
        return float(out)
    return out


def alpha_quantile(r: QuantileRange) -> float:
    """Validated scalar wrapper around alpha for a QuantileRange."""
    return float(alpha(r.a, r.b))


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_x(a, b), the Beta(a, b) CDF."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"reg_inc_beta: x={x} outside [0, 1]")
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"reg_inc_beta: parameters must be positive, got a={a}, b={b}")
    return float(special.betainc(a, b, x))
