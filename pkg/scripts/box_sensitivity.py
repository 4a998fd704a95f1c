#!/usr/bin/env python3
"""Diagnostics at one viscosity for growing boxes at fixed cell size.

The periodic box stands in for the exterior domain, so this is how
far its truncation reaches into the reported numbers.
"""
import sys
from pathlib import Path

from katofsi.config import load_config, replace_grid
from katofsi.diagnostics import diagnose_run
from katofsi.sweep import euler_reference, simulate

ROOT = Path(__file__).resolve().parents[1]
nu = float(sys.argv[1]) if len(sys.argv) > 1 else 0.04
base = load_config(ROOT / "configs" / "benchmark.yaml")
h = base.grid.h
for L in (4.0, 5.0, 6.0):
    cfg = replace_grid(base, int(round(2 * L / h)), L)
    ref = euler_reference(cfg)
    row = diagnose_run(simulate(cfg, nu, None, ref), ref, cfg.geometry(), cfg.kato.c)
    print(f"L={L:3.1f} n={cfg.grid.n:4d}  strip_deform {row.strip_deform:.5e}  total {row.total_deform:.5e}  "
          f"energy_distance {row.energy_distance:.5e}  hardy {row.hardy_max:.3f}")
