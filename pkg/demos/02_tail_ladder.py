"""
From the exact tail to its large-time form
==========================================

For three particles with drifts (2, 0, 3) we compute the no-collision
probability three ways and watch them line up as t grows:

* the exact quadrature over the Weyl chamber,
* the intermediate approximation built from the Gaussian integral I,
* the leading term C h(x) t^-alpha exp(-gamma t).
"""

import math

from weylexit import asymptotic_law, constant_direct, proposition_tail, tail_exact
from weylexit.asymptotics import log_h

x, a = (0.0, 1.0, 2.0), (2, 0, 3)
law = asymptotic_law(a)
C = constant_direct(a).c_direct
_, lh = log_h(law.h, x)
alpha = float(law.alpha)

print(f"C = {C:.6f}, gamma = {law.gamma}, alpha = {law.alpha}")
print(f"{'t':>6} {'exact':>12} {'approx/exact':>13} {'leading/exact':>14}")
for t in (1, 4, 9, 16, 25, 100, 400):
    ex = tail_exact(x, a, t)
    pr = proposition_tail(x, a, t)
    lead = math.log(C) + lh - alpha * math.log(t) - law.gamma * t
    print(f"{t:6g} {ex.value:12.4e} {math.exp(pr.log - ex.log):13.6f} {math.exp(lead - ex.log):14.6f}")
