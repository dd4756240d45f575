"""Energy-per-bit limits for the many-user quasi-static Rayleigh-fading MAC.

Library layout:

- ``special_math``   : hardened scalar special functions (log-domain Gaussian
  tail, entropies, the Rayleigh quantile integral, incomplete beta).
- ``scalar_channel`` : the effective scalar observation V = X + sigma*W, its
  Bayes denoiser, (scaled) MMSE, support-recovery error and the optimal
  miss probability of the constrained detector.
- ``bounds``         : achievability (projection decoder no-CSI / CSIR, scalar
  AMP via state evolution) and converse energy-per-bit evaluators.
- ``replica``        : multiuser-efficiency fixed point and predicted PUPE
  curves for the real-valued same-codebook model (non-rigorous predictions).
- ``baselines``      : classical-regime references (TDMA, TIN, joint outage,
  Shamai-Bettesh style PUPE bound, rate converse).
- ``mc_sim``         : desk-scale Monte Carlo laboratory (complex AMP decoding,
  brute-force projection decoding, Beta-law projection statistic test).
- ``cli``            : batch front-end producing CSV curve families plus
  rendered figures.
"""

from manymac.bounds import (
    BoundEvaluation,
    SystemConfig,
    amp_energy,
    combined_converse,
    converse_fano,
    converse_iid,
    converse_single_user,
    csir_energy,
    nocsi_energy,
    se_fixed_point,
)
from manymac.scalar_channel import SectionSize

__version__ = "0.1.0"

__all__ = [
    "BoundEvaluation",
    "SectionSize",
    "SystemConfig",
    "amp_energy",
    "combined_converse",
    "converse_fano",
    "converse_iid",
    "converse_single_user",
    "csir_energy",
    "nocsi_energy",
    "se_fixed_point",
]
