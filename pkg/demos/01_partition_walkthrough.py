"""
Stable partitions and what they predict
=======================================

Drifted particles on a line either drift apart or travel together.  The
stable partition says which groups stick, and the coalescing dynamics
(run the particles with no noise, merging them on contact) recover the
same groups from any ordered start.
"""

import numpy as np

from weylexit import asymptotic_law, coalescing_groups, stable_partition, strong_representation
from weylexit.partition import groups_to_boundaries

a = (3, 1, 2, 5, 1)
p = stable_partition(a)
sr = strong_representation(p)
print("drifts           ", a)
print("block ends       ", p.m)
print("block speeds     ", [str(v) for v in p.f_block])
print("strong block ends", sr.m_prime)

# deterministic dynamics from a few random ordered starts
rng = np.random.default_rng(0)
for _ in range(3):
    x = np.sort(rng.normal(scale=5, size=len(a)))
    groups = coalescing_groups(x, a)
    print("start", np.round(x, 2), "->", groups_to_boundaries(groups))

# the law that comes out of it: P(no collision by t) ~ C h(x) t^-alpha exp(-gamma t)
for drifts in [(0, 0, 0), (1, -1), (2, 0, 3), (0, 1)]:
    law = asymptotic_law(drifts)
    print(f"{str(drifts):10s} gamma={law.gamma:<6g} alpha={law.alpha}")
