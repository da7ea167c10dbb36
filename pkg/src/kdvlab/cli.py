"""Command line entry point: ``kdvlab <subcommand> [config.toml]``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, StudyConfig, load_config
from .euler_poisson import EPParams, ep_solve, make_state, mass
from .expansion import background_residuals
from .grid import SpatialGrid
from .harness import (
    format_float,
    initial_rho1,
    kdv_reference,
    r4_taylor_check,
    remainder_sweep,
    run_convergence_study,
    write_json,
    write_trajectory_csv,
)
from .kdv import A_EXACT, cascade_residual, expansion_profile, kdv2_rhs, kdv_rhs
from .kinetic import MaxwellianParams, VelocityGrid, chi_basis, moments, p1_identity_check, project_p0, project_p1
from .landau import sigma_table, window_check

log = logging.getLogger("kdvlab")


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def cmd_kdv_run(cfg: StudyConfig, out: Path, args) -> bool:
    grid = SpatialGrid(cfg.n, cfg.length)
    rho1, rho2 = kdv_reference(cfg, grid)
    write_trajectory_csv(out / "kdv_rho1.csv", grid, [s.time for s in rho1], [s.rho1 for s in rho1])
    if rho2 is not None:
        write_trajectory_csv(out / "kdv_rho2.csv", grid, [s.time for s in rho2], [s.rho2 for s in rho2])
    m0 = np.sum(rho1[0].rho1) * grid.dx
    e0 = np.sum(rho1[0].rho1 ** 2) * grid.dx
    drift = {
        "mass_drift": max(abs(np.sum(s.rho1) * grid.dx - m0) for s in rho1),
        "l2_drift_rel": max(abs(np.sum(s.rho1**2) * grid.dx - e0) for s in rho1) / max(e0, 1e-300),
    }
    write_json(drift, out / "kdv_summary.json")
    print(f"kdv-run: mass drift {drift['mass_drift']:.2e}, rel L2 drift {drift['l2_drift_rel']:.2e}")
    return True


def cmd_ep_run(cfg: StudyConfig, out: Path, args) -> bool:
    grid = SpatialGrid(cfg.n, cfg.length)
    delta = args.delta if args.delta is not None else cfg.deltas[0]
    params = EPParams(delta=delta, A=A_EXACT, dt=cfg.ep_dt, poisson_tol=cfg.poisson_tol,
                      c_cfl=cfg.c_cfl, hyperviscosity=cfg.hyperviscosity)
    r1 = initial_rho1(cfg, grid)
    s0 = make_state(1 + delta * r1, delta * A_EXACT * r1, 1.5 + delta * r1, params, grid)
    run = ep_solve(s0, params, grid, cfg.t_final, cfg.output_times)
    times = [s.time for s in run]
    for name in ("R", "U", "Theta", "Pi"):
        write_trajectory_csv(out / f"ep_{name}.csv", grid, times, [getattr(s, name) for s in run])
    summary = {"delta": delta, "dt": run.dt, "nu": run.nu, "filter_dissipation": run.filter_dissipation,
               "mass_drift_rel": abs(mass(run[-1], grid) - mass(run[0], grid)) / mass(run[0], grid)}
    write_json(summary, out / "ep_summary.json")
    print(f"ep-run: delta={delta} dt={run.dt:.3e} mass drift {summary['mass_drift_rel']:.2e}")
    return True


def cmd_expansion_check(cfg: StudyConfig, out: Path, args) -> bool:
    grid = SpatialGrid(cfg.n, cfg.length)
    A = A_EXACT
    rho1 = initial_rho1(cfg, grid)
    rho2 = 0.3 * np.roll(rho1, grid.n // 4)
    prof = expansion_profile(rho1, rho2, grid, A)
    r1t, r2t = kdv_rhs(rho1, grid, A), kdv2_rhs(rho1, rho2, grid, A)
    c1 = cascade_residual(1, prof, r1t, r2t, grid, A)
    c2 = cascade_residual(2, prof, r1t, r2t, grid, A)
    bg = {d: [float(np.max(np.abs(r))) for r in background_residuals(prof, r1t, r2t, d, grid, A)]
          for d in cfg.deltas}
    taylor = r4_taylor_check()
    checks = {
        "cascade_order1": max(l2 for l2, _ in c1) < 1e-10,
        "cascade_order2": max(l2 for l2, _ in c2) < 1e-6,
        "background_identity": max(max(v) for v in bg.values()) < 1e-8,
        "r4_taylor_limit": all(r["rel_err"] < 0.01 for r in taylor),
    }
    result = {"cascade_order1": [list(p) for p in c1], "cascade_order2": [list(p) for p in c2],
              "background_residual_linf": {str(d): v for d, v in bg.items()}, "r4_taylor": taylor}
    if args.delta_sweep:
        table = remainder_sweep(cfg)
        result["remainder_table"] = table.records()
        result["remainder_spread"] = table.spread
        checks["remainder_uniform"] = table.passed
    result["checks"] = checks
    write_json(result, out / "expansion_check.json")
    for k, v in checks.items():
        print(f"{_status(v)}  {k}")
    return all(checks.values())


def cmd_converge(cfg: StudyConfig, out: Path, args) -> bool:
    report = run_convergence_study(cfg, jobs=args.jobs)
    write_json(report.to_dict(), out / "report.json")
    for n, per in report.orders.items():
        for f, by in per.items():
            print(f"n={n} {f:5s} order L2 {by['l2'].order:.3f}  Linf {by['linf'].order:.3f}")
    for flag in report.flags:
        print(flag)
    print(f"{_status(report.passed)}  convergence study -> {out / 'report.json'}")
    return report.passed


def cmd_kinetic_check(cfg: StudyConfig, out: Path, args) -> bool:
    vg = VelocityGrid(cfg.vmax, cfg.m)
    rng = np.random.default_rng(0)
    cases = [MaxwellianParams(1.0, (0, 0, 0), 1.5), MaxwellianParams(1.3, (0.2, -0.1, 0.0), 1.7),
             MaxwellianParams(1.4, (0.3, 0.0, -0.1), 1.8)]
    res = {}
    for i, p in enumerate(cases):
        b = chi_basis(p, vg)
        h = rng.standard_normal(vg.weights.shape) * np.exp(-0.25 * vg.speed**2)
        p0 = project_p0(h, p, vg)
        rho, mom, en = moments(project_p1(h, p, vg), vg)
        scale = float(np.max(np.abs(h)))
        res[f"case{i}"] = {
            "gram_err": float(np.max(np.abs(b.gram(vg) - np.eye(5)))),
            "p0_idempotence": float(np.max(np.abs(project_p0(p0, p, vg) - p0))) / scale,
            "p1_moments": float(max(abs(rho), np.max(np.abs(mom)), abs(en))) / scale,
            "burnett": [max(p1_identity_check(p, vg, j)) for j in (1, 2, 3)],
        }
    checks = {
        "gram": all(r["gram_err"] < 1e-8 for r in res.values()),
        "p0_idempotence": all(r["p0_idempotence"] < 1e-10 for r in res.values()),
        "p1_microscopic": all(r["p1_moments"] < 1e-10 for r in res.values()),
        "burnett_identities": all(max(r["burnett"]) < 1e-7 for r in res.values()),
    }
    if args.strict_window:
        win = {str(d): window_check(cfg.eps, d, cfg.C_tilde).passed for d in cfg.deltas}
        res["window"] = win
        checks["window"] = all(win.values())
    res["checks"] = checks
    write_json(res, out / "kinetic_check.json")
    for k, v in checks.items():
        print(f"{_status(v)}  {k}")
    return all(checks.values())


def cmd_sigma_table(cfg: StudyConfig, out: Path, args) -> bool:
    tab = sigma_table()
    path = out / "sigma_table.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["v", "lam_par", "lam_perp"])
        for row in zip(tab.r, tab.lam_par, tab.lam_perp):
            w.writerow([format_float(x) for x in row])
    print(f"sigma-table: {len(tab.r)} rows, refinement error {tab.max_refinement_error:.2e} -> {path}")
    return True


COMMANDS = {
    "kdv-run": cmd_kdv_run,
    "ep-run": cmd_ep_run,
    "expansion-check": cmd_expansion_check,
    "converge": cmd_converge,
    "kinetic-check": cmd_kinetic_check,
    "sigma-table": cmd_sigma_table,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kdvlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config_path", nargs="?", help="study TOML file")
        p.add_argument("--config", dest="config_flag", help="study TOML file (alternative to positional)")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--jobs", type=int, default=1, help="concurrent delta runs")
        p.add_argument("--strict-window", action="store_true", help="validate the (eps, delta) window")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "expansion-check":
            p.add_argument("--delta-sweep", action="store_true", help="tabulate remainder H^2 norms")
        if name == "ep-run":
            p.add_argument("--delta", type=float, help="amplitude (default: first study delta)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    path = args.config_flag or args.config_path
    try:
        cfg = load_config(path) if path else StudyConfig()
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return 2
    if not hasattr(args, "delta_sweep"):
        args.delta_sweep = False
    if not hasattr(args, "delta"):
        args.delta = None
    if args.strict_window and args.command != "kinetic-check":
        bad = [d for d in cfg.deltas if not window_check(cfg.eps, d, cfg.C_tilde).passed]
        if bad:
            print(f"FAIL  (eps={cfg.eps}) window violated for deltas {bad}", file=sys.stderr)
            return 1
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ok = COMMANDS[args.command](cfg, out, args)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
