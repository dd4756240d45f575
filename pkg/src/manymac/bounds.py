"""Energy-per-bit bound evaluators for the linear scaling regime K = mu*n.

Achievability side:

- ``nocsi_energy``  : projection-decoder bound without channel knowledge.
  For a decoded fraction nu, misdecoded fraction theta and quantile offset
  xi, a chain of explicitly computable quantities
  (V_theta, c_theta, q_theta, delta1*, delta2*, f, f_hat) yields the total
  power P_tot,nu(theta, xi); the bound is sup over (theta, xi), and every
  fixed nu is itself a valid bound, so the evaluator minimizes over nu.
- ``csir_energy``   : nearest-codeword decoding with known gains;
  sup over theta of inf over the tilt rho in (0, 1].
- ``amp_energy``    : smallest energy whose state-evolution fixed point
  pushes the optimal-threshold section error below the target.

Converse side:

- ``converse_fano``        : mutual-information counting against the
  order-statistics power of the weakest user fractions.
- ``converse_single_user`` : any scheme must also solve the k-bit
  single-user fading problem at power P_tot/mu; depends on mu only through
  P_tot/mu, hence is mu-invariant in energy-per-bit.
- ``converse_iid``         : tighter bound valid for iid-codebook schemes
  only (Standard and entropy-power Epi variants).

Infeasibility is always a flagged +inf energy, never an exception, so
parameter sweeps are total functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from manymac.scalar_channel import ScalarNoise, SectionSize, mmse_scaled, pupe_star
from manymac.special_math import LN2, alpha, binary_entropy_vec, entropy, q_func, q_inv


@dataclass(frozen=True)
class SystemConfig:
    """Payload k bits, user density mu (users per complex dof), target PUPE eps."""

    k: int
    mu: float
    eps: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 < self.mu < 1.0:
            raise ValueError("mu must lie in (0, 1)")
        eps_max = -math.expm1(-self.k * LN2)  # 1 - 2^-k
        if not 0.0 < self.eps < eps_max:
            raise ValueError(f"eps must lie in (0, {eps_max})")

    @property
    def s(self) -> float:
        """Spectral efficiency S = mu*k bits per complex dof."""
        return self.mu * self.k

    @property
    def m(self) -> SectionSize:
        return SectionSize(self.k)


@dataclass(frozen=True)
class BoundEvaluation:
    """One bound's outcome: energy-per-bit, total power, optimizer witnesses."""

    kind: str
    ebno_linear: float
    ebno_db: float
    ptot: float
    witness: dict
    feasible: bool

    @classmethod
    def from_ptot(cls, kind: str, ptot: float, s: float, witness: dict) -> "BoundEvaluation":
        if not math.isfinite(ptot):
            return cls.infeasible(kind, witness)
        ebno = ptot / s
        db = 10.0 * math.log10(ebno) if ebno > 0.0 else -math.inf
        return cls(kind, ebno, db, ptot, witness, True)

    @classmethod
    def infeasible(cls, kind: str, witness: dict | None = None) -> "BoundEvaluation":
        return cls(kind, math.inf, math.inf, math.inf, witness or {}, False)


@dataclass(frozen=True)
class NoCsiIntermediates:
    """The computable chain behind the no-CSI projection bound."""

    nu: float
    eps_prime: float
    theta: float
    xi: float
    v_theta: float
    delta_star: float
    c_theta: float
    q_theta: float
    delta1_star: float
    delta2_star: float
    f: float
    f_hat: float


@dataclass
class SeTrace:
    """State-evolution sequence sigma_t^2 down to its fixed point."""

    sigma2_seq: list[float]
    sigma2_inf: float
    pupe_pred: float
    iters: int
    converged: bool


@dataclass(frozen=True)
class GridPolicy:
    """Grid sizes for the bound optimizers.

    theta gets log spacing near its lower endpoint where the bounds have a
    feasibility boundary, uniform spacing elsewhere; one level of x8 local
    refinement runs around the incumbent optimum.
    """

    n_nu: int = 64
    n_theta: int = 256
    n_xi: int = 128
    n_rho: int = 64
    refine: int = 8


DEFAULT_GRID = GridPolicy()
FAST_GRID = GridPolicy(n_nu=16, n_theta=128, n_xi=64, n_rho=32, refine=8)


def _nu_grid(eps: float, n: int) -> np.ndarray:
    # left-open (1-eps, 1], right endpoint included
    return 1.0 - eps + eps * np.arange(1, n + 1) / n


def _theta_grid(lower: float, n: int) -> np.ndarray:
    """Grid on (lower, 1]: log-spaced near the open left endpoint, uniform above."""
    span = 1.0 - lower
    n_log = n // 2
    frac = np.concatenate(
        [np.logspace(-6, np.log10(0.5), n_log), np.linspace(0.5, 1.0, n - n_log)]
    )
    return np.unique(lower + span * frac)


def delta2_star_root(q):
    """Root of -ln(1-x) - x = q on (0,1), via the Lambert W closed form.

    With w = 1-x the equation reads w - ln w = q + 1, i.e.
    w = -W0(-e^{-q-1}); the principal branch lands in (0, 1].
    """
    q = np.asarray(q, dtype=float)
    # the argument sits on the branch point -1/e at q=0; keep rounding inside
    arg = np.maximum(-np.exp(-q - 1.0), -1.0 / math.e + 5e-16)
    w = -special.lambertw(arg, k=0).real
    out = 1.0 - w
    return np.clip(out, 0.0, 1.0 - 1e-16)


def _nocsi_chain(nu: float, theta, mu: float, ln_m: float):
    """Vectorized chain over theta (any shape); returns dict of arrays."""
    th = np.asarray(theta, dtype=float)
    one_m_mununu = 1.0 - mu * nu
    a = 1.0 - nu * (1.0 - th)  # nu*theta + (1-nu)
    d_star = mu * binary_entropy_vec(a) / one_m_mununu
    vt_tilde = (
        d_star
        + th * mu * nu * ln_m / one_m_mununu
        + (1.0 - mu * nu * (1.0 - th)) / one_m_mununu
        * binary_entropy_vec(th * mu * nu / (1.0 - mu * nu * (1.0 - th)))
        + mu * a / one_m_mununu * binary_entropy_vec(th * nu / a)
    )
    v = np.exp(-vt_tilde)
    c = 2.0 * v / (1.0 - v)
    q = mu * binary_entropy_vec(a) / (1.0 - mu * nu * (1.0 - th))
    d1 = q * (1.0 + c) + np.sqrt(q * q * (c * c + 2.0 * c) + 2.0 * q * (1.0 + c))
    d2 = delta2_star_root(q)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        f = ((1.0 + d1 * (1.0 - v)) / v - 1.0) / (1.0 - d2)
    return {
        "v": v,
        "d_star": d_star,
        "c": c,
        "q": q,
        "d1": d1,
        "d2": d2,
        "f": f,
    }


def _nocsi_ptot_arrays(nu: float, theta, xi, mu: float, ln_m: float):
    """P_tot,nu over broadcastable theta/xi arrays; +inf where infeasible."""
    th = np.asarray(theta, dtype=float)
    x = np.asarray(xi, dtype=float)
    chain = _nocsi_chain(nu, th, mu, ln_m)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        f_hat = chain["f"] / alpha(x, x + nu * th)
        denom = 1.0 - f_hat * alpha(x + nu * th, x + 1.0 - nu * (1.0 - th))
        ptot = np.where(
            (denom > 0.0) & (chain["v"] > 0.0) & (chain["v"] < 1.0) & np.isfinite(f_hat),
            f_hat / denom,
            np.inf,
        )
    return ptot, chain, f_hat


def nocsi_ptot(nu: float, theta: float, xi: float, cfg: SystemConfig):
    """Scalar P_tot,nu(theta, xi) with the full intermediate chain.

    Raises on precondition violations; infeasibility of the bound itself
    (nonpositive denominator, V outside (0,1)) is returned as +inf.
    """
    eps_prime = cfg.eps - (1.0 - nu)
    if not (1.0 - cfg.eps < nu <= 1.0):
        raise ValueError("nu outside (1-eps, 1]")
    if not (eps_prime / nu < theta <= 1.0):
        raise ValueError("theta outside (eps'/nu, 1]")
    if not (0.0 <= xi <= nu * (1.0 - theta) + 1e-15):
        raise ValueError("xi outside [0, nu(1-theta)]")
    if cfg.mu * nu >= 1.0:
        raise ValueError("mu*nu must be < 1")
    ptot, chain, f_hat = _nocsi_ptot_arrays(nu, theta, xi, cfg.mu, cfg.m.ln_m)
    inter = NoCsiIntermediates(
        nu=nu,
        eps_prime=eps_prime,
        theta=theta,
        xi=xi,
        v_theta=float(chain["v"]),
        delta_star=float(chain["d_star"]),
        c_theta=float(chain["c"]),
        q_theta=float(chain["q"]),
        delta1_star=float(chain["d1"]),
        delta2_star=float(chain["d2"]),
        f=float(chain["f"]),
        f_hat=float(f_hat),
    )
    return float(ptot), inter


def _nocsi_sup_for_nu(nu: float, cfg: SystemConfig, grid: GridPolicy):
    """sup over (theta, xi) of P_tot,nu with one x8 local refinement."""
    eps_prime = cfg.eps - (1.0 - nu)
    t_lower = eps_prime / nu
    ln_m = cfg.m.ln_m
    mu = cfg.mu

    def eval_grid(thetas: np.ndarray, xi_frac: np.ndarray):
        th = thetas[:, None]
        xi = xi_frac[None, :] * (nu * (1.0 - th))
        ptot, _, _ = _nocsi_ptot_arrays(nu, th, xi, mu, ln_m)
        return ptot

    thetas = _theta_grid(t_lower, grid.n_theta)
    xi_frac = np.linspace(0.0, 1.0, grid.n_xi)
    ptot = eval_grid(thetas, xi_frac)
    if np.isinf(ptot).any():
        return math.inf, {"theta": math.nan, "xi": math.nan}
    i, j = np.unravel_index(np.argmax(ptot), ptot.shape)
    sup0 = ptot[i, j]

    # refine x8 around the incumbent in both axes
    t_lo = thetas[max(i - 1, 0)]
    t_hi = thetas[min(i + 1, len(thetas) - 1)]
    f_lo = xi_frac[max(j - 1, 0)]
    f_hi = xi_frac[min(j + 1, len(xi_frac) - 1)]
    thetas_r = np.linspace(t_lo, t_hi, 3 * grid.refine)
    xi_r = np.linspace(f_lo, f_hi, 3 * grid.refine)
    ptot_r = eval_grid(thetas_r, xi_r)
    if np.isinf(ptot_r).any():
        return math.inf, {"theta": math.nan, "xi": math.nan}
    ir, jr = np.unravel_index(np.argmax(ptot_r), ptot_r.shape)
    if ptot_r[ir, jr] >= sup0:
        sup = ptot_r[ir, jr]
        witness = {"theta": float(thetas_r[ir]), "xi": float(xi_r[jr] * nu * (1.0 - thetas_r[ir]))}
    else:
        sup = sup0
        witness = {"theta": float(thetas[i]), "xi": float(xi_frac[j] * nu * (1.0 - thetas[i]))}
    return float(sup), witness


def nocsi_energy(cfg: SystemConfig, grid: GridPolicy = DEFAULT_GRID) -> BoundEvaluation:
    """Projection-decoder achievability, no channel knowledge."""
    best = math.inf
    best_witness: dict = {}
    for nu in _nu_grid(cfg.eps, grid.n_nu):
        if cfg.mu * nu >= 1.0:
            continue
        sup, witness = _nocsi_sup_for_nu(float(nu), cfg, grid)
        if sup < best:
            best = sup
            best_witness = {"nu": float(nu), **witness}
    if not math.isfinite(best) or best <= 0.0:
        return BoundEvaluation.infeasible("nocsi")
    return BoundEvaluation.from_ptot("nocsi", best, cfg.s, best_witness)


def _csir_ptot_arrays(nu: float, theta, rho, mu: float, ln_m: float):
    """P_tot,nu(theta, rho) over broadcastable arrays; +inf where infeasible."""
    th = np.asarray(theta, dtype=float)
    r = np.asarray(rho, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        expo = mu * nu * (binary_entropy_vec(th) / r + th * ln_m)
        b = np.where(expo < 700.0, np.expm1(np.minimum(expo, 700.0)), np.inf)
        a_sig = alpha(nu * (1.0 - th), nu)
        a_int = float(alpha(nu, 1.0))
        denom = a_sig - b * a_int * (1.0 + r)
        ptot = np.where((denom > 0.0) & np.isfinite(b), (1.0 + r) * b / denom, np.inf)
    return ptot


def csir_ptot(theta: float, rho: float, nu: float, cfg: SystemConfig) -> float:
    """Scalar CSIR power at a given tilt rho; rho = 0 is the +inf limit."""
    eps_prime = cfg.eps - (1.0 - nu)
    if not (1.0 - cfg.eps < nu <= 1.0):
        raise ValueError("nu outside (1-eps, 1]")
    if not (eps_prime / nu < theta <= 1.0):
        raise ValueError("theta outside (eps'/nu, 1]")
    if not (0.0 <= rho <= 1.0):
        raise ValueError("rho outside [0, 1]")
    if rho == 0.0:
        # exponent h(theta)/rho -> +inf unless theta in {0,1}; theta=1 has h=0
        if entropy(theta) > 0.0:
            return math.inf
        rho = 1e-12
    return float(_csir_ptot_arrays(nu, theta, rho, cfg.mu, cfg.m.ln_m))


def csir_inf_rho(theta: float, nu: float, cfg: SystemConfig, n_rho: int = 64):
    """inf over rho in (0,1] for fixed (theta, nu): grid seed + golden section."""
    rhos = np.linspace(1e-9, 1.0, n_rho)
    vals = _csir_ptot_arrays(nu, theta, rhos, cfg.mu, cfg.m.ln_m)
    i = int(np.argmin(vals))
    if not np.isfinite(vals[i]):
        return math.inf, math.nan
    lo = rhos[max(i - 1, 0)]
    hi = rhos[min(i + 1, n_rho - 1)]
    f = lambda r: float(_csir_ptot_arrays(nu, theta, r, cfg.mu, cfg.m.ln_m))
    res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    if res.fun <= vals[i]:
        return float(res.fun), float(res.x)
    return float(vals[i]), float(rhos[i])


def csir_energy(cfg: SystemConfig, grid: GridPolicy = DEFAULT_GRID) -> BoundEvaluation:
    """Nearest-codeword achievability with receiver-side gain knowledge."""
    best = math.inf
    best_witness: dict = {}
    rhos = np.linspace(1e-9, 1.0, grid.n_rho)
    for nu in _nu_grid(cfg.eps, grid.n_nu):
        nu = float(nu)
        if cfg.mu * nu >= 1.0:
            continue
        eps_prime = cfg.eps - (1.0 - nu)
        thetas = _theta_grid(eps_prime / nu, grid.n_theta)
        vals = _csir_ptot_arrays(nu, thetas[:, None], rhos[None, :], cfg.mu, cfg.m.ln_m)
        per_theta = vals.min(axis=1)
        i = int(np.argmax(per_theta))
        sup = per_theta[i]
        if not np.isfinite(sup):
            continue  # this nu is infeasible at some theta
        # refine: golden-section in rho on a denser theta window around i
        t_lo = thetas[max(i - 1, 0)]
        t_hi = thetas[min(i + 1, len(thetas) - 1)]
        sup_ref = sup
        wit = {"theta": float(thetas[i]), "rho": float(rhos[int(np.argmin(vals[i]))])}
        for th in np.linspace(t_lo, t_hi, 3 * grid.refine):
            v, r = csir_inf_rho(float(th), nu, cfg, n_rho=grid.n_rho)
            if v > sup_ref:
                sup_ref = v
                wit = {"theta": float(th), "rho": r}
        if sup_ref < best:
            best = sup_ref
            best_witness = {"nu": nu, **wit}
    if not math.isfinite(best) or best <= 0.0:
        return BoundEvaluation.infeasible("csir")
    return BoundEvaluation.from_ptot("csir", best, cfg.s, best_witness)


def se_fixed_point(mu: float, ptot: float, m: SectionSize, max_iters: int = 10000) -> SeTrace:
    """Iterate sigma_t^2 = mu/P_tot + mu * M*mmse(sigma_{t-1}^2) from above.

    Starting at the uninformative point mu/P_tot + mu, the iteration is
    non-increasing and converges to the largest fixed point.  Stops when the
    relative step falls below 1e-10; non-convergence is flagged, not raised.
    """
    if mu <= 0.0 or ptot <= 0.0:
        raise ValueError("mu and ptot must be positive")
    s2 = mu / ptot + mu
    seq = [s2]
    converged = False
    for _ in range(max_iters):
        nxt = mu / ptot + mu * mmse_scaled(ScalarNoise(s2), m)
        seq.append(nxt)
        if abs(nxt - s2) <= 1e-10 * max(nxt, 1e-300):
            s2 = nxt
            converged = True
            break
        s2 = nxt
    return SeTrace(
        sigma2_seq=seq,
        sigma2_inf=s2,
        pupe_pred=pupe_star(ScalarNoise(s2), m),
        iters=len(seq) - 1,
        converged=converged,
    )


def _amp_feasible(mu: float, ptot: float, m: SectionSize, eps: float) -> bool:
    """True when the SE fixed point meets the PUPE target.

    Early exit: the trace is non-increasing and pupe_star is monotone in
    tau, so the target being met at any iterate implies it at the limit.
    """
    s2 = mu / ptot + mu
    for _ in range(10000):
        if pupe_star(ScalarNoise(s2), m) <= eps:
            return True
        nxt = mu / ptot + mu * mmse_scaled(ScalarNoise(s2), m)
        if abs(nxt - s2) <= 1e-10 * max(nxt, 1e-300):
            s2 = nxt
            break
        s2 = nxt
    return pupe_star(ScalarNoise(s2), m) <= eps


def amp_energy(
    cfg: SystemConfig,
    ptot_cap: float = 1e6,
    scan_points: int = 48,
) -> BoundEvaluation:
    """Minimal energy whose state-evolution PUPE meets the target.

    A coarse log scan first verifies the feasible set is an up-set in
    P_tot (it is whenever the largest fixed point is monotone; the scan
    guards the assumption); bisection then tightens between the last
    infeasible and first feasible scan points.
    """
    mu, m, eps, s = cfg.mu, cfg.m, cfg.eps, cfg.s
    ps = np.logspace(math.log10(1e-4), math.log10(ptot_cap), scan_points)
    flags = [_amp_feasible(mu, float(p), m, eps) for p in ps]
    if not any(flags):
        return BoundEvaluation.infeasible("amp", {"ptot_cap": ptot_cap})
    first = flags.index(True)
    monotone = all(flags[first:])
    if not monotone:
        # feasible set not an up-set on the scan: report the scan minimum
        idx = flags.index(True)
        trace = se_fixed_point(mu, float(ps[idx]), m)
        return BoundEvaluation.from_ptot(
            "amp",
            float(ps[idx]),
            s,
            {"sigma2_inf": trace.sigma2_inf, "monotone_scan": False},
        )
    if first == 0:
        lo, hi = ps[0] / 1e3, float(ps[0])
        if not _amp_feasible(mu, hi, m, eps):  # defensively re-verify
            return BoundEvaluation.infeasible("amp", {"ptot_cap": ptot_cap})
    else:
        lo, hi = float(ps[first - 1]), float(ps[first])
    for _ in range(64):
        mid = math.sqrt(lo * hi)
        if _amp_feasible(mu, mid, m, eps):
            hi = mid
        else:
            lo = mid
    trace = se_fixed_point(mu, hi, m)
    return BoundEvaluation.from_ptot(
        "amp",
        hi,
        s,
        {"sigma2_inf": trace.sigma2_inf, "pupe_pred": trace.pupe_pred, "monotone_scan": True},
    )


def su_gaussian_energy_total(k: int, eps: float) -> float:
    """Quantile-difference energy (1/2)(Q^{-1}(2^-k) - Q^{-1}(1-eps))^2.

    Read as the TOTAL energy of a k-bit single-user transmission over a
    non-fading Gaussian channel at error eps.  The same expression also
    circulates as if it were per-bit; the two readings differ by a factor
    k, so both are exposed under distinct names and only the per-bit form
    ``su_gaussian_ebno`` is meant for energy-per-bit comparisons.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    a = q_inv(-k * LN2)
    b = q_inv(math.log1p(-eps))
    return 0.5 * (a - b) ** 2


def su_gaussian_ebno(k: int, eps: float) -> float:
    """Per-bit reading of the single-user Gaussian reference energy."""
    return su_gaussian_energy_total(k, eps) / k


def _log2_m_minus_1(k: int) -> float:
    # log2(2^k - 1) = k + log2(1 - 2^-k)
    return k + math.log1p(-math.exp(-k * LN2)) / LN2


def converse_fano(cfg: SystemConfig, n_theta: int = 2048) -> BoundEvaluation:
    """Information-counting converse against ordered fading powers.

    For each misdecoded-fraction theta the rate deficit
    L(theta) = theta*S - eps*mu*log2(M-1) - mu*h2(eps) (bits) must be
    carried by log2(1 + P_tot * alpha(1-theta, 1)); the binding theta gives
    the power requirement.  Vacuous (all L <= 0) is a flagged zero bound.
    """
    s = cfg.s
    mu, eps = cfg.mu, cfg.eps
    lead = eps * mu * _log2_m_minus_1(cfg.k) + mu * entropy(eps, base="bits")
    thetas = np.linspace(1e-6, 1.0, n_theta)
    big_l = thetas * s - lead
    a = alpha(1.0 - thetas, np.ones_like(thetas))
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        ln_pow = big_l * LN2
        p_req = np.where((big_l > 0.0) & (a > 0.0), np.expm1(np.minimum(ln_pow, 700.0)) / a, 0.0)
        p_req = np.where(ln_pow >= 700.0, np.inf, p_req)
    i = int(np.argmax(p_req))
    if p_req[i] <= 0.0:
        return BoundEvaluation("converse_fano", 0.0, -math.inf, 0.0, {"vacuous": True}, True)
    # local refinement around the incumbent theta
    t_lo, t_hi = thetas[max(i - 1, 0)], thetas[min(i + 1, n_theta - 1)]

    def neg(th):
        l = th * s - lead
        av = float(alpha(1.0 - th, 1.0))
        if l <= 0.0 or av <= 0.0:
            return 0.0
        return -(math.expm1(min(l * LN2, 700.0)) / av)

    res = optimize.minimize_scalar(neg, bounds=(t_lo, t_hi), method="bounded", options={"xatol": 1e-12})
    p_star = max(float(p_req[i]), -float(res.fun))
    theta_star = float(res.x) if -res.fun >= p_req[i] else float(thetas[i])
    return BoundEvaluation.from_ptot("converse_fano", p_star, s, {"theta": theta_star})


def _su_fading_pe(k_ebno: float, k: int) -> float:
    """PUPE of k-bit single-user detection over a unit-mean Rayleigh power gain.

    pe = 1 - E_{G~Exp(1)} Q(Q^{-1}(2^-k) - sqrt(2 * k_ebno * G)), where
    k_ebno = P_tot/mu is the received energy (k bits at energy-per-bit
    k_ebno/k each).  Quadrature splits at the gain where the Q argument
    crosses zero.
    """
    q0 = q_inv(-k * LN2)

    def integrand(g):
        return math.exp(-g) * math.exp(q_func(q0 - math.sqrt(2.0 * k_ebno * g)))

    g0 = q0 * q0 / (2.0 * k_ebno)
    upper = max(60.0, min(4.0 * g0, 1e4))
    split = min(g0, upper)
    v1, _ = integrate.quad(integrand, 0.0, split, epsrel=1e-11, epsabs=1e-14, limit=400)
    v2, _ = integrate.quad(integrand, split, upper, epsrel=1e-11, epsabs=1e-14, limit=400)
    # tail beyond `upper`: integrand <= e^-g
    return 1.0 - (v1 + v2)


def converse_single_user(cfg: SystemConfig) -> BoundEvaluation:
    """Single-user fading converse; mu-invariant in energy-per-bit."""
    k, eps, s = cfg.k, cfg.eps, cfg.s

    def feasible(k_ebno: float) -> bool:
        return _su_fading_pe(k_ebno, k) <= eps

    lo, hi = 1e-9, 1e12
    if not feasible(hi):
        return BoundEvaluation.infeasible("converse_single_user")
    if feasible(lo):
        return BoundEvaluation.from_ptot("converse_single_user", lo * cfg.mu, s, {})
    for _ in range(80):
        mid = math.sqrt(lo * hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return BoundEvaluation.from_ptot("converse_single_user", hi * cfg.mu, s, {"k_ebno": hi})


def _iid_f(r: float, gamma: float) -> float:
    """Stable form of the quarter-square F(r, gamma); exact for tiny r.

    F = 4 gamma^2 r / (sqrt(gamma(sqrt r + 1)^2 + 1) + sqrt(gamma(sqrt r - 1)^2 + 1))^2,
    algebraically equal to the difference-of-square-roots form but immune
    to cancellation at r ~ 2^-100.
    """
    sr = math.sqrt(r)
    sa = math.sqrt(gamma * (sr + 1.0) ** 2 + 1.0)
    sb = math.sqrt(gamma * (sr - 1.0) ** 2 + 1.0)
    return 4.0 * gamma * gamma * r / (sa + sb) ** 2


def _iid_v(r: float, gamma: float) -> float:
    """V(r, gamma) = r ln(1+gamma-F) + ln(1+r gamma-F) - F/gamma."""
    f = _iid_f(r, gamma)
    return r * math.log1p(gamma - f) + math.log1p(r * gamma - f) - f / gamma


def _iid_v_lb(r: float, gamma: float) -> float:
    """Entropy-power lower-bound variant: ln(1 + gamma r (r/(r-1))^{r-1} / e)."""
    if r <= 1.0:
        raise ValueError("V_LB needs r > 1")
    factor = math.exp((r - 1.0) * (math.log(r) - math.log(r - 1.0)) - 1.0)
    return math.log1p(gamma * r * factor)


def converse_iid(
    cfg: SystemConfig,
    variant: str = "Standard",
    ptot_cap: float = 1e14,
    scan_points: int = 48,
) -> BoundEvaluation:
    """Converse for iid-codebook schemes (labeled as such in the witness).

    Requires ln M - eps ln(M-1) - h(eps) <= M V(1/(mu M), P) - V2(1/mu, P),
    with V2 either V (Standard) or the entropy-power form V_LB (Epi).  The
    right side is verified non-decreasing in P on a scan before bisecting;
    scan failures fall back to the scan minimum with a flag.
    """
    if variant not in ("Standard", "Epi"):
        raise ValueError(f"unknown variant {variant!r}")
    mu, k, s = cfg.mu, cfg.k, cfg.s
    m = cfg.m
    lhs = m.ln_m - cfg.eps * m.ln_m_minus_1 - entropy(cfg.eps)

    def rhs(p: float) -> float:
        first = _iid_v_scaled_mu(mu, k, p)
        if variant == "Standard":
            second = _iid_v(1.0 / mu, p)
        else:
            second = _iid_v_lb(1.0 / mu, p)
        return first - second

    ps = np.logspace(-6, math.log10(ptot_cap), scan_points)
    vals = np.array([rhs(float(p)) for p in ps])
    monotone = bool(np.all(np.diff(vals) >= -1e-9 * np.maximum(np.abs(vals[1:]), 1.0)))
    feas = vals >= lhs
    if not feas.any():
        return BoundEvaluation.infeasible("converse_iid_" + variant.lower(), {"iid_only": True})
    if not monotone:
        idx = int(np.argmax(feas))
        return BoundEvaluation.from_ptot(
            "converse_iid_" + variant.lower(),
            float(ps[idx]),
            s,
            {"iid_only": True, "monotone_scan": False},
        )
    idx = int(np.argmax(feas))
    if idx == 0:
        lo, hi = 1e-12, float(ps[0])
    else:
        lo, hi = float(ps[idx - 1]), float(ps[idx])
    for _ in range(80):
        mid = math.sqrt(lo * hi)
        if rhs(mid) >= lhs:
            hi = mid
        else:
            lo = mid
    return BoundEvaluation.from_ptot(
        "converse_iid_" + variant.lower(), hi, s, {"iid_only": True, "monotone_scan": True}
    )


def _iid_v_scaled_mu(mu: float, k: int, gamma: float) -> float:
    """M * V(1/(mu M), gamma) without materializing M.

    With r = 1/(mu M):  M*V = (1/mu) ln(1+gamma-F) + M ln1p(r gamma - F)
    - M F/gamma.  The piece r*gamma - F is a cancellation trap (two equal
    O(r gamma) floats whose true difference is O(r)); it is assembled from

        r gamma - F = r gamma * [2(1 + B/(sqrt(A^2+B) + A))] / (sa+sb)^2,
        A = gamma(1-r),  B = 2 gamma (1+r) + 1,

    which is exact algebra on (sa+sb)^2 - 4 gamma and has no subtraction.
    """
    ln_m = k * LN2
    r = math.exp(-ln_m) / mu
    sr = math.sqrt(r)
    sa = math.sqrt(gamma * (sr + 1.0) ** 2 + 1.0)
    sb = math.sqrt(gamma * (sr - 1.0) ** 2 + 1.0)
    ssq = (sa + sb) ** 2
    f = 4.0 * gamma * gamma * r / ssq
    inv_mu = 1.0 / mu
    a_lin = gamma * (1.0 - r)
    b_lin = 2.0 * gamma * (1.0 + r) + 1.0
    rg_minus_f = r * gamma * 2.0 * (1.0 + b_lin / (math.sqrt(a_lin * a_lin + b_lin) + a_lin)) / ssq
    term1 = inv_mu * math.log1p(gamma - f)
    term2 = math.exp(ln_m) * math.log1p(rg_minus_f)
    term3 = 4.0 * gamma * inv_mu / ssq
    return term1 + term2 - term3


def combined_converse(cfg: SystemConfig, include_iid: bool = False) -> BoundEvaluation:
    """Pointwise maximum of the always-valid converses.

    The iid-codebook bound only applies under the iid-codebook assumption
    and is excluded unless explicitly opted in; the witness names the
    active constituent.
    """
    parts = [converse_fano(cfg), converse_single_user(cfg)]
    if include_iid:
        parts.append(converse_iid(cfg, "Standard"))
    best = max(parts, key=lambda b: b.ebno_linear if b.feasible else -math.inf)
    witness = {"active": best.kind, **best.witness}
    return BoundEvaluation(
        kind="combined_converse",
        ebno_linear=best.ebno_linear,
        ebno_db=best.ebno_db,
        ptot=best.ptot,
        witness=witness,
        feasible=best.feasible,
    )
