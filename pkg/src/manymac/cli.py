"""Batch front-end.

Subcommands: sweep, point, replica, simulate, classical.  Every command is
a pure function of (config file, flags, master seed): outputs are
byte-identical across reruns and across thread counts.  Numeric output is
fixed "%.6f" with the sentinel "inf" for infeasible entries.

Config files are flat ``key = value`` text; blank lines and ``#`` comments
are allowed; unknown keys are rejected with their line number.

Exit codes: 0 success, 2 usage error, 3 every requested result infeasible,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from manymac import baselines, bounds, mc_sim, plots, replica
from manymac.scalar_channel import SectionSize

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

THREADS_ENV = "MANYMAC_THREADS"

SWEEP_BOUNDS = {
    "amp": lambda cfg: bounds.amp_energy(cfg),
    "nocsi": lambda cfg: bounds.nocsi_energy(cfg),
    "csir": lambda cfg: bounds.csir_energy(cfg),
    "converse": lambda cfg: bounds.combined_converse(cfg),
    "converse_fano": lambda cfg: bounds.converse_fano(cfg),
    "converse_single_user": lambda cfg: bounds.converse_single_user(cfg),
    "converse_iid": lambda cfg: bounds.converse_iid(cfg, "Standard"),
    "tdma": lambda cfg: bounds.BoundEvaluation.from_ptot(
        "tdma", baselines.tdma_classical(cfg.s, cfg.eps) * cfg.s, cfg.s, {}
    ),
    "tin": lambda cfg: baselines.tin_energy(cfg),
}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class ParsedConfig:
    values: dict
    line_numbers: dict


def parse_config(path: str) -> ParsedConfig:
    """Flat key = value parser; unknown-key policing happens per command."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    values: dict[str, str] = {}
    numbers: dict[str, int] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise UsageError(f"{path}:{lineno}: empty key")
        values[key] = value
        numbers[key] = lineno
    return ParsedConfig(values, numbers)


def _take(conf: ParsedConfig, known: dict[str, bool], path: str) -> dict[str, str]:
    """Validate keys against `known` (name -> required) and return values."""
    for key in conf.values:
        if key not in known:
            raise UsageError(f"{path}:{conf.line_numbers.get(key, '?')}: unknown key {key!r}")
    for key, required in known.items():
        if required and key not in conf.values:
            raise UsageError(f"{path}: missing required key {key!r}")
    return dict(conf.values)


def _fmt(value: float) -> str:
    if not math.isfinite(value):
        return "inf"
    return f"{value:.6f}"


def _thread_count(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"bad {THREADS_ENV} value {env!r}") from exc
    return 1


def _pmap(fn, items, threads: int):
    """Order-preserving map over a worker pool; results keyed by index."""
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _figure_path(out: str) -> str:
    stem, _ = os.path.splitext(out)
    return stem + ".png"


@dataclass(frozen=True)
class CurveSeries:
    """One bound's sweep: (x, y_db, feasible, witness summary) tuples.

    x must be strictly increasing; infeasible points carry y = +inf, which
    serializes as the "inf" sentinel.
    """

    label: str
    points: list[tuple[float, float, bool, str]]

    def __post_init__(self):
        xs = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError(f"series {self.label!r}: x grid must be strictly increasing")

    @property
    def values_db(self) -> list[float]:
        return [p[1] for p in self.points]


@dataclass(frozen=True)
class SweepSpec:
    bounds: tuple[str, ...]
    k: int
    eps: float
    mu_min: float
    mu_max: float
    mu_points: int
    out: str
    seed: int
    threads: int

    def __post_init__(self):
        if not self.mu_min < self.mu_max:
            raise UsageError("mu grid needs mu_min < mu_max")
        if self.mu_points < 2:
            raise UsageError("mu grid needs at least 2 points")
        for name in self.bounds:
            if name not in SWEEP_BOUNDS:
                raise UsageError(
                    f"unknown bound {name!r}; valid: {', '.join(sorted(SWEEP_BOUNDS))}"
                )


def cmd_sweep(args) -> int:
    conf = parse_config(args.config)
    vals = _take(
        conf,
        {
            "bounds": True,
            "k": True,
            "eps": True,
            "mu_min": True,
            "mu_max": True,
            "mu_points": True,
            "out": False,
            "seed": False,
            "threads": False,
        },
        args.config,
    )
    spec = SweepSpec(
        bounds=tuple(b.strip() for b in vals["bounds"].split(",") if b.strip()),
        k=int(vals["k"]),
        eps=float(vals["eps"]),
        mu_min=float(vals["mu_min"]),
        mu_max=float(vals["mu_max"]),
        mu_points=int(vals["mu_points"]),
        out=args.out or vals.get("out", "sweep.csv"),
        seed=args.seed if args.seed is not None else int(vals.get("seed", "0")),
        threads=_thread_count(args),
    )
    mus = [float(m) for m in np.logspace(math.log10(spec.mu_min), math.log10(spec.mu_max), spec.mu_points)]

    def row(mu: float) -> list[bounds.BoundEvaluation]:
        cfg = bounds.SystemConfig(spec.k, mu, spec.eps)
        return [SWEEP_BOUNDS[name](cfg) for name in spec.bounds]

    rows = _pmap(row, mus, spec.threads)
    series = [
        CurveSeries(
            label=name,
            points=[
                (mu, r[i].ebno_db, r[i].feasible, r[i].witness.get("active", ""))
                for mu, r in zip(mus, rows)
            ],
        )
        for i, name in enumerate(spec.bounds)
    ]

    header = "mu," + ",".join(f"{s.label}_db" for s in series)
    lines = [header]
    for j, mu in enumerate(mus):
        lines.append(",".join([_fmt(mu)] + [_fmt(s.points[j][1]) for s in series]))
    _write_text(spec.out, "\n".join(lines) + "\n")
    plots.render_sweep(
        mus, {s.label: s.values_db for s in series}, spec.k, spec.eps, _figure_path(spec.out)
    )
    any_feasible = any(math.isfinite(v) for s in series for v in s.values_db)
    return EXIT_OK if any_feasible else EXIT_INFEASIBLE


def cmd_point(args) -> int:
    conf = parse_config(args.config)
    vals = _take(
        conf,
        {
            "bound": True,
            "k": True,
            "mu": True,
            "eps": False,
            "ebno_db": False,
            "out": False,
            "seed": False,
            "threads": False,
        },
        args.config,
    )
    kind = vals["bound"]
    k = int(vals["k"])
    mu = float(vals["mu"])
    record: dict
    if kind == "replica":
        if "ebno_db" not in vals:
            raise UsageError("replica point needs ebno_db")
        ebno = 10.0 ** (float(vals["ebno_db"]) / 10.0)
        pt = replica.replica_pupe(mu, ebno, SectionSize(k))
        record = {
            "kind": "replica",
            "mu": mu,
            "ebno_db": _fmt(pt.ebno_db),
            "eta_star": pt.eta_star,
            "sigma2_eff": pt.sigma2_eff,
            "pe": pt.pe,
            "feasible": True,
            "rigor": replica.RIGOR_TAG,
        }
        feasible = True
    else:
        if kind not in SWEEP_BOUNDS:
            raise UsageError(f"unknown bound {kind!r}; valid: replica, {', '.join(sorted(SWEEP_BOUNDS))}")
        if "eps" not in vals:
            raise UsageError(f"bound {kind!r} needs eps")
        cfg = bounds.SystemConfig(k, mu, float(vals["eps"]))
        ev = SWEEP_BOUNDS[kind](cfg)
        record = {
            "kind": ev.kind,
            "mu": mu,
            "eps": cfg.eps,
            "k": k,
            "ebno_db": _fmt(ev.ebno_db) if ev.feasible else "inf",
            "ebno_linear": ev.ebno_linear if ev.feasible else "inf",
            "ptot": ev.ptot if ev.feasible else "inf",
            "witness": ev.witness,
            "feasible": ev.feasible,
        }
        feasible = ev.feasible
    text = json.dumps(record, indent=2, sort_keys=True, default=float) + "\n"
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if feasible else EXIT_INFEASIBLE


def cmd_replica(args) -> int:
    conf = parse_config(args.config)
    vals = _take(
        conf,
        {
            "k": True,
            "mu_list": True,
            "ebno_min_db": True,
            "ebno_max_db": True,
            "ebno_step_db": True,
            "out": False,
            "seed": False,
            "threads": False,
        },
        args.config,
    )
    k = int(vals["k"])
    m = SectionSize(k)
    mus = [float(x) for x in vals["mu_list"].split(",") if x.strip()]
    lo, hi, step = (float(vals[key]) for key in ("ebno_min_db", "ebno_max_db", "ebno_step_db"))
    if step <= 0 or hi <= lo:
        raise UsageError("need ebno_min_db < ebno_max_db and ebno_step_db > 0")
    n_steps = int(round((hi - lo) / step))
    grid_db = [lo + i * step for i in range(n_steps + 1)]
    threads = _thread_count(args)
    out = args.out or vals.get("out", "replica.csv")

    tasks = [(mu, db) for mu in mus for db in grid_db]

    def job(task):
        mu, db = task
        pt = replica.replica_pupe(mu, 10.0 ** (db / 10.0), m)
        return {"mu": mu, "ebno_db": db, "pe": pt.pe, "eta_star": pt.eta_star}

    rows = _pmap(job, tasks, threads)
    lines = ["mu,ebno_db,pe,eta_star,rigor"]
    for r in rows:
        lines.append(
            ",".join(
                [_fmt(r["mu"]), _fmt(r["ebno_db"]), _fmt(r["pe"]), _fmt(r["eta_star"]), replica.RIGOR_TAG]
            )
        )
    _write_text(out, "\n".join(lines) + "\n")
    plots.render_replica(rows, _figure_path(out))
    return EXIT_OK


def cmd_simulate(args) -> int:
    conf = parse_config(args.config)
    vals = _take(
        conf,
        {
            "n": True,
            "mu": True,
            "k": True,
            "ptot": True,
            "runs": True,
            "t_max": False,
            "onsager": False,
            "out": False,
            "seed": False,
            "threads": False,
        },
        args.config,
    )
    n = int(vals["n"])
    mu = float(vals["mu"])
    k = int(vals["k"])
    ptot = float(vals["ptot"])
    runs = int(vals["runs"])
    t_max = int(vals.get("t_max", "12"))
    onsager = vals.get("onsager", "true").lower() != "false"
    seed = args.seed if args.seed is not None else int(vals.get("seed", "0"))
    threads = _thread_count(args)
    out = args.out or vals.get("out", "simulate.jsonl")

    # resource check before any allocation
    users = int(mu * n)
    if n * users * (1 << k) > mc_sim.MATRIX_ENTRY_CAP:
        raise mc_sim.ResourceError(
            f"requested matrix {n}x{users * (1 << k)} exceeds entry cap {mc_sim.MATRIX_ENTRY_CAP}"
        )

    def job(idx: int):
        inst = mc_sim.sample_system(n, mu, k, ptot, seed + idx)
        res = mc_sim.amp_run(inst, t_max, onsager=onsager)
        return res.to_record(inst)

    records = _pmap(job, list(range(runs)), threads)

    trace = bounds.se_fixed_point(users / n, ptot, SectionSize(k))
    se_seq = list(trace.sigma2_seq) + [trace.sigma2_inf] * max(
        0, (t_max + 1) - len(trace.sigma2_seq)
    )
    emp = np.mean([r["sigma2_emp"] for r in records], axis=0)
    pupes = np.array([r["pupe_emp"] for r in records])
    stderr = float(pupes.std(ddof=1) / math.sqrt(runs)) if runs > 1 else math.inf

    jsonl = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    _write_text(out, jsonl)

    summary = "pupe_emp_mean,pupe_pred,stderr,n_runs\n" + ",".join(
        [_fmt(float(pupes.mean())), _fmt(trace.pupe_pred), _fmt(stderr), str(runs)]
    ) + "\n"
    stem, _ = os.path.splitext(out)
    _write_text(stem + ".summary.csv", summary)

    trace_rows = []
    lines = ["t,sigma2_emp_mean,sigma2_pred,rel_dev"]
    for t, e in enumerate(emp):
        pred = se_seq[t] if t < len(se_seq) else se_seq[-1]
        rel = abs(e - pred) / pred if pred > 0 else math.inf
        trace_rows.append({"t": t, "sigma2_emp_mean": float(e), "sigma2_pred": pred})
        lines.append(",".join([str(t), _fmt(float(e)), _fmt(pred), _fmt(rel)]))
    _write_text(stem + ".trace.csv", "\n".join(lines) + "\n")
    plots.render_simulate(trace_rows, float(pupes.mean()), trace.pupe_pred, _figure_path(out))
    return EXIT_OK


def cmd_classical(args) -> int:
    conf = parse_config(args.config)
    vals = _take(
        conf,
        {
            "eps": True,
            "s_min": True,
            "s_max": True,
            "s_points": True,
            "out": False,
            "seed": False,
            "threads": False,
        },
        args.config,
    )
    eps = float(vals["eps"])
    s_grid = np.logspace(
        math.log10(float(vals["s_min"])), math.log10(float(vals["s_max"])), int(vals["s_points"])
    )
    threads = _thread_count(args)
    out = args.out or vals.get("out", "classical.csv")

    def min_energy_strongest(s: float) -> float:
        # smallest Eb/N0 whose decode-the-strongest PUPE meets eps
        def feasible(ebno: float) -> bool:
            return baselines.shamai_bettesh_asymptotic(s, ebno * s) <= eps

        lo, hi = 1e-6, 1e9
        if not feasible(hi):
            return math.inf
        if feasible(lo):
            return lo
        for _ in range(60):
            mid = math.sqrt(lo * hi)
            if feasible(mid):
                hi = mid
            else:
                lo = mid
        return hi

    def job(s: float) -> dict:
        e_sb = min_energy_strongest(s)
        e_tdma = baselines.tdma_classical(s, eps)
        return {
            "s": s,
            "strongest_users_db": 10.0 * math.log10(e_sb) if math.isfinite(e_sb) else math.inf,
            "tdma_db": 10.0 * math.log10(e_tdma),
        }

    rows = _pmap(job, [float(s) for s in s_grid], threads)
    lines = ["s,strongest_users_db,tdma_db"]
    for r in rows:
        lines.append(",".join([_fmt(r["s"]), _fmt(r["strongest_users_db"]), _fmt(r["tdma_db"])]))
    _write_text(out, "\n".join(lines) + "\n")
    plots.render_classical(rows, _figure_path(out))
    any_feasible = any(math.isfinite(r["strongest_users_db"]) for r in rows)
    return EXIT_OK if any_feasible else EXIT_INFEASIBLE


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manymac",
        description="Energy-per-bit bounds and simulations for the many-user fading MAC",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("sweep", cmd_sweep),
        ("point", cmd_point),
        ("replica", cmd_replica),
        ("simulate", cmd_simulate),
        ("classical", cmd_classical),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.set_defaults(handler=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, mc_sim.ResourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
