"""Figure rendering for the CLI report paths.

Every figure is written next to its delimited output with deterministic
bytes: fixed size, fixed dpi, pinned PNG metadata, no timestamps.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_PNG_META = {"Software": "manymac"}
_FIGSIZE = (6.4, 4.2)
_DPI = 120


def _save(fig, path: str) -> None:
    fig.savefig(path, dpi=_DPI, metadata=_PNG_META)
    plt.close(fig)


def _finite_pairs(xs, ys):
    pts = [(x, y) for x, y in zip(xs, ys) if math.isfinite(y)]
    if not pts:
        return [], []
    return zip(*pts)


def render_sweep(mus, series: dict[str, list[float]], k: int, eps: float, path: str) -> None:
    """mu (log axis) vs Eb/N0 in dB, one line per bound."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for label, ys in series.items():
        xs, vals = _finite_pairs(mus, ys)
        if xs:
            ax.semilogx(xs, vals, marker=".", label=label)
    ax.set_xlabel("user density mu")
    ax.set_ylabel("Eb/N0 [dB]")
    ax.set_title(f"k={k}, target PUPE {eps:g}")
    ax.grid(True, which="both", alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def render_replica(rows, path: str) -> None:
    """Two panels: predicted PUPE and multiuser efficiency vs Eb/N0."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    by_mu: dict[float, list] = {}
    for r in rows:
        by_mu.setdefault(r["mu"], []).append(r)
    for mu, pts in sorted(by_mu.items()):
        xs = [p["ebno_db"] for p in pts]
        ax1.semilogy(xs, [max(p["pe"], 1e-12) for p in pts], label=f"mu={mu:g}")
        ax2.plot(xs, [p["eta_star"] for p in pts], label=f"mu={mu:g}")
    ax1.set_xlabel("Eb/N0 [dB]")
    ax1.set_ylabel("predicted PUPE")
    ax2.set_xlabel("Eb/N0 [dB]")
    ax2.set_ylabel("multiuser efficiency")
    ax2.set_ylim(0.0, 1.05)
    for ax in (ax1, ax2):
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    fig.suptitle("replica predictions (non-rigorous)")
    fig.tight_layout()
    _save(fig, path)


def render_classical(rows, path: str) -> None:
    """Spectral efficiency vs minimal Eb/N0 frontier with the TDMA reference."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    xs = [r["s"] for r in rows]
    for key, label in (("strongest_users_db", "decode strongest users"), ("tdma_db", "TDMA")):
        good_x, good_y = _finite_pairs(xs, [r[key] for r in rows])
        if good_x:
            ax.plot(good_y, good_x, marker=".", label=label)
    ax.set_xlabel("Eb/N0 [dB]")
    ax.set_ylabel("spectral efficiency S [bits/dof]")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def render_simulate(trace_rows, pupe_emp: float, pupe_pred: float, path: str) -> None:
    """Residual-energy trajectory against the state-evolution sequence."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ts = [r["t"] for r in trace_rows]
    ax.semilogy(ts, [r["sigma2_emp_mean"] for r in trace_rows], marker="o", label="measured")
    ax.semilogy(ts, [r["sigma2_pred"] for r in trace_rows], marker="x", label="state evolution")
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual energy (state-evolution units)")
    ax.set_title(f"final PUPE {pupe_emp:.4f} vs predicted {pupe_pred:.4f}")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
