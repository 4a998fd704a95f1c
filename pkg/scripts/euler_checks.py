#!/usr/bin/env python3
"""Grid Euler solver against the boundary-element added mass and its own energy balance."""
from katofsi.experiments import euler_energy_convergence, falling_disk

fd = falling_disk()
print(f"falling disk n={fd.n}: a_y = {fd.accel:.5f}, oracle {fd.oracle:.5f}, rel error {fd.rel_error:.2e}")

for label, cfls in (("dt ~ h^2", (0.4, 0.2, 0.1)), ("fixed CFL", (0.4, 0.4, 0.4))):
    res, orders = euler_energy_convergence(cfls=cfls)
    print(f"{label:>10}: residual/work " + ", ".join(f"{r:.4f}" for r in res)
          + "  orders " + ", ".join(f"{p:.2f}" for p in orders))
