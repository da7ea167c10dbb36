"""Run a convergence study from a TOML file and print the fitted orders.

    python scripts/run_convergence.py scripts/study.toml --jobs 3
"""
import argparse
import logging
from pathlib import Path

from kdvlab.config import load_config
from kdvlab.harness import FIELDS, run_convergence_study, write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config", nargs="?", default=Path(__file__).with_name("study.toml"))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    cfg = load_config(args.config)
    report = run_convergence_study(cfg, jobs=args.jobs)
    out = Path(args.out or cfg.out_dir)
    path = write_json(report.to_dict(), out / "report.json")
    for n, per in report.orders.items():
        print(f"n = {n}")
        print(f"  {'delta':>8s} " + " ".join(f"{f:>10s}" for f in FIELDS))
        for run in report.runs[n]:
            print(f"  {run['delta']:8.4f} " + " ".join(f"{run['sup'][f]['l2']:10.3e}" for f in FIELDS))
        print(f"  {'order':>8s} " + " ".join(f"{per[f]['l2'].order:10.3f}" for f in FIELDS))
    for flag in report.flags:
        print(flag)
    print(f"{'PASS' if report.passed else 'FAIL'}  report written to {path}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
