"""
Two routes to the constant C
============================

The direct route multiplies three factors.  The fitted route divides the
exact tail by h(x) t^-alpha exp(-gamma t) and extrapolates in 1/sqrt(t).
The two are computed independently, so their agreement is a real check.
"""

import numpy as np

from weylexit import constant_direct, constant_extracted
from weylexit.constant import AsymptoticRegimeError

cases = [
    ((0, 1), (1, -1), np.geomspace(16, 512, 6)),
    ((0, 1, 2), (2, 0, 3), np.geomspace(10, 1000, 10)),
    ((0, 1, 2), (1, 0, -1), np.geomspace(400, 12800, 6)),
]
for x, a, grid in cases:
    d = constant_direct(a)
    e = constant_extracted(x, a, t_grid=grid)
    print(f"a={a}: direct {d.c_direct:.6f} (factors {d.a1:.4f} x {d.a2:.4f} x {d.a3:.4f}), "
          f"fitted {e.c_extracted:.6f}, rel. diff {e.c_extracted / d.c_direct - 1:+.2e}")

# a grid that starts before the asymptotic regime is refused, not fitted
try:
    constant_extracted((0, 5), (1, -1), t_grid=[0.01, 0.02, 0.05, 0.1, 1.0])
except AsymptoticRegimeError as exc:
    print("refused:", exc)
