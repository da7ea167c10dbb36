"""Convergence studies, audits and report I/O."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import StudyConfig
from .euler_poisson import EPParams, ep_solve, make_state
from .expansion import build_background, compute_remainders, exp_quadratic_remainder, remainder_bound_check
from .grid import SpatialGrid, field_norms
from .kdv import (
    A_EXACT,
    KdVState,
    expansion_profile,
    kdv2_rhs,
    kdv2_solve,
    kdv_rhs,
    kdv_soliton,
    kdv_solve,
    sine_packet,
)

log = logging.getLogger("kdvlab.harness")

SCHEMA_VERSION = 1
FIELDS = ("R", "U", "Theta", "Pi")
DENSE_SPACING = 0.01


@dataclass(frozen=True)
class OrderFit:
    order: float
    pairwise: list[float]


def fit_order(errors, deltas) -> OrderFit:
    """Least-squares slope of log(error) against log(delta), plus local orders."""
    e = np.asarray(errors, dtype=float)
    d = np.asarray(deltas, dtype=float)
    if e.shape != d.shape or e.size < 3:
        raise ValueError("need at least 3 matching (error, delta) pairs")
    if np.any(~(e > 0)) or np.any(~(d > 0)):
        raise ValueError(f"errors and deltas must be positive, got errors={e.tolist()}")
    slope = np.polyfit(np.log(d), np.log(e), 1)[0]
    pairwise = np.log(e[:-1] / e[1:]) / np.log(d[:-1] / d[1:])
    return OrderFit(float(slope), [float(p) for p in pairwise])


# ---------------------------------------------------------------------------
# study

def initial_rho1(cfg: StudyConfig, grid: SpatialGrid, A=A_EXACT) -> np.ndarray:
    if cfg.initial_kind == "soliton":
        return kdv_soliton(grid, A, cfg.c, x0=cfg.x0)
    if cfg.initial_kind == "sine":
        return sine_packet(grid, cfg.amplitudes)
    return grid.zeros()


def kdv_reference(cfg: StudyConfig, grid: SpatialGrid, A=A_EXACT):
    """rho1 trajectory at the output times and, when requested, rho2 with rho2(0)=0."""
    r0 = initial_rho1(cfg, grid, A)
    outs = sorted({round(float(t), 12) for t in cfg.output_times} | {cfg.t_final})
    if not cfg.second_order:
        return kdv_solve(r0, grid, A, cfg.t_final, cfg.kdv_dt, outs), None
    # rho2 needs rho1 between outputs; sample densely, then keep the outputs
    dense = np.linspace(0.0, cfg.t_final, int(math.ceil(cfg.t_final / DENSE_SPACING)) + 1)[1:]
    times = sorted({round(float(t), 12) for t in dense} | set(outs))
    full = kdv_solve(r0, grid, A, cfg.t_final, cfg.kdv_dt, times)
    rho2 = kdv2_solve(full, grid.zeros(), grid, A, cfg.kdv_dt)
    keep = [0] + [i for i, s in enumerate(full) if i > 0 and round(s.time, 12) in set(outs)]
    return [full[i] for i in keep], [rho2[i] for i in keep]


def _targets(delta, r1: KdVState, r2, grid, A):
    if r2 is None:
        rho = r1.rho1
        return 1 + delta * rho, delta * A * rho, 1.5 + delta * rho, delta * rho
    bg = build_background(expansion_profile(r1.rho1, r2.rho2, grid, A), delta)
    return bg.rho_bar, bg.u_bar, bg.theta_bar, bg.phi_bar


def run_delta(delta: float, cfg: StudyConfig, n: int, rho1_traj, rho2_traj, A=A_EXACT) -> dict:
    """One Euler-Poisson run compared with the expansion; errors per output time."""
    grid = SpatialGrid(n, cfg.length)
    params = EPParams(delta=delta, A=A, dt=cfg.ep_dt, poisson_tol=cfg.poisson_tol, c_cfl=cfg.c_cfl,
                      hyperviscosity=cfg.hyperviscosity)
    r2 = None if rho2_traj is None else rho2_traj[0]
    R0, U0, Th0, _ = _targets(delta, rho1_traj[0], r2, grid, A)
    state0 = make_state(R0, U0, Th0, params, grid)
    run = ep_solve(state0, params, grid, cfg.t_final, [s.time for s in rho1_traj[1:]])
    rows = []
    for i, (s, r1) in enumerate(zip(run.states, rho1_traj)):
        if abs(s.time - r1.time) > 1e-12:
            raise RuntimeError(f"time mismatch at delta={delta}: {s.time} vs {r1.time}")
        tgt = _targets(delta, r1, None if rho2_traj is None else rho2_traj[i], grid, A)
        norms = [field_norms(f - ref, grid) for f, ref in zip((s.R, s.U, s.Theta, s.Pi), tgt)]
        rows.append({"t": s.time, **{name: {"l2": l2, "linf": li} for name, (l2, li) in zip(FIELDS, norms)}})
    sup = {name: {k: max(r[name][k] for r in rows) for k in ("l2", "linf")} for name in FIELDS}
    return {"delta": delta, "n": n, "dt": run.dt, "nu": run.nu, "filter_dissipation": run.filter_dissipation,
            "errors": rows, "sup": sup}


def _run_delta_job(args):
    return run_delta(*args)


@dataclass
class ConvergenceReport:
    config: StudyConfig
    runs: dict = field(default_factory=dict)  # n -> list of per-delta dicts
    orders: dict = field(default_factory=dict)  # n -> {field: {norm: OrderFit}}
    flags: list[str] = field(default_factory=list)
    passed: bool = False

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "schema_version": SCHEMA_VERSION,
            "provenance": {"config_hash": cfg.digest(), "code_version": __version__},
            "target": "second_order" if cfg.second_order else "first_order",
            "deltas": list(cfg.deltas),
            "runs": {str(n): runs for n, runs in self.runs.items()},
            "orders": {str(n): {f: {k: {"order": o.order, "pairwise": o.pairwise} for k, o in by.items()}
                                for f, by in per.items()} for n, per in self.orders.items()},
            "band": [cfg.second_order_min, None] if cfg.second_order else [cfg.order_min, cfg.order_max],
            "flags": self.flags,
            "passed": self.passed,
        }


def _accept(order: float, cfg: StudyConfig) -> bool:
    if cfg.second_order:
        return order >= cfg.second_order_min
    return cfg.order_min <= order <= cfg.order_max


def run_convergence_study(cfg: StudyConfig, jobs: int = 1) -> ConvergenceReport:
    """Delta sweep of Euler-Poisson against the KdV expansion at each resolution."""
    report = ConvergenceReport(cfg)
    passed = True
    for n in (cfg.n, *cfg.resolutions):
        grid = SpatialGrid(n, cfg.length)
        rho1, rho2 = kdv_reference(cfg, grid)
        tasks = [(d, cfg, n, rho1, rho2) for d in cfg.deltas]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                runs = list(pool.map(_run_delta_job, tasks))
        else:
            runs = [_run_delta_job(t) for t in tasks]
        report.runs[n] = runs
        worst = max(r["sup"][f][k] for r in runs for f in FIELDS for k in ("l2", "linf"))
        if worst < cfg.trivial_tol:
            report.flags.append(f"n={n}: trivially converged (max error {worst:.3e})")
            report.orders[n] = {}
            continue
        per = {}
        for f in FIELDS:
            per[f] = {}
            for k in ("l2", "linf"):
                fit = fit_order([r["sup"][f][k] for r in runs], cfg.deltas)
                per[f][k] = fit
                passed &= _accept(fit.order, cfg)
        report.orders[n] = per
        log.info("n=%d orders %s", n, {f: round(v["l2"].order, 3) for f, v in per.items()})
    report.passed = bool(passed)
    return report


# ---------------------------------------------------------------------------
# expansion audit

def remainder_sweep(cfg: StudyConfig, t: float = 0.0, rho2_scale: float = 0.3, k: int = 2):
    """Remainder H^k table over cfg.deltas using rho1 (and optional rho2) at time t."""
    grid = SpatialGrid(cfg.n, cfg.length)
    A = A_EXACT
    rho1 = initial_rho1(cfg, grid)
    if t > 0:
        rho1 = kdv_solve(rho1, grid, A, t, cfg.kdv_dt)[-1].rho1
    rho2 = rho2_scale * np.roll(rho1, grid.n // 4)
    prof = expansion_profile(rho1, rho2, grid, A)
    r1t = kdv_rhs(rho1, grid, A)
    r2t = kdv2_rhs(rho1, rho2, grid, A)
    rem = {d: compute_remainders(prof, r1t, r2t, d, grid, A) for d in cfg.deltas}
    return remainder_bound_check(rem, grid, k=k)


def r4_taylor_check(c: float = 0.5, deltas=(1e-2, 1e-3)) -> list[dict]:
    """R4 with constant phi1 = c, phi2 = 0 against its small-delta limit -c^3/6."""
    out = []
    for d in deltas:
        val = float(exp_quadratic_remainder(np.array([d * c]))[0] / d**3)
        ref = -c**3 / 6
        out.append({"delta": d, "R4": val, "limit": ref, "rel_err": abs(val - ref) / abs(ref)})
    return out


# ---------------------------------------------------------------------------
# serialization

def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(float(x), ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}"{k}": {dumps(v, indent, _level + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n")
    return path


def write_trajectory_csv(path, grid: SpatialGrid, times, fields) -> Path:
    """Long-format CSV with columns t, x, value."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "value"])
        for t, f in zip(times, fields):
            for x, v in zip(grid.nodes, f):
                w.writerow([format_float(t), format_float(x), format_float(v)])
    return path
