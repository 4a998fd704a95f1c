#!/usr/bin/env python3
"""Fake-layer norms and their ν exponents at a fixed number of cells across the strip."""
from katofsi.experiments import CORRECTOR_BANDS, corrector_experiment

exp = corrector_experiment()
for n in exp.norms:
    print(f"nu={n.nu:<7g} sup={n.sup:.4e} H={n.h_norm:.4e} dtH={n.dt_h_norm:.4e} "
          f"grad={n.grad_strip:.4e} d*v={n.d_sup:.4e}")
for k, (target, tol) in CORRECTOR_BANDS.items():
    print(f"{k:>10}: {exp.exponents[k]:+.3f} (expected {target:+.1f})")
print(f"max divergence ratio {exp.max_divergence_ratio:.2e}")
