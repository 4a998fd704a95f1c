#!/usr/bin/env python3
"""Run the benchmark viscosity sweep and print the fitted exponents.

    python3 scripts/run_sweep.py [configs/benchmark.yaml] [--set key=value ...]
"""
import argparse
import sys
from pathlib import Path

import yaml

from katofsi.config import apply_overrides, from_dict
from katofsi.sweep import run_sweep

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config", nargs="?", default=str(ROOT / "configs" / "benchmark.yaml"))
    ap.add_argument("--set", action="append", default=[])
    args = ap.parse_args()
    raw = yaml.safe_load(Path(args.config).read_text())
    cfg = from_dict(apply_overrides(raw, args.set))
    res = run_sweep(cfg)
    for r in res.rows:
        print(f"nu={r.nu:<8g} strip={r.strip_deform:.4e} dist={r.energy_distance:.4e} "
              f"R2={r.R2_integral:.3e} R5={r.R5_integral:.3e} hardy={r.hardy_max:.3f}  {r.status}")
    if res.report is not None:
        for k, v in sorted(res.report.exponents.items()):
            print(f"  exponent {k:>16}: {v:+.3f}")
    print(f"written to {res.out_dir}")
    return 0 if all(r.ok for r in res.rows) else 1


if __name__ == "__main__":
    sys.exit(main())
