#!/usr/bin/env python3
"""R1 computed directly and in its rewritten form on a manufactured wall layer, per grid."""
import sys

from katofsi.experiments import r1_dual_check

grids = [int(x) for x in sys.argv[1:]] or [256, 512, 768]
for n in grids:
    chk = r1_dual_check(n)
    print(f"n={n:5d}  direct {chk.direct:+.6e}  dual {chk.dual:+.6e}  rel gap {chk.rel_gap:.2e}")
