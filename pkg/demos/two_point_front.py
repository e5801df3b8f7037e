"""
The front of a fully separable two-group instance
=================================================

Group 0 always has label 0 and group 1 always has label 1. Splitting the
groups costs nothing in accuracy but is maximally unfair; merging them is
perfectly fair and as bad as a coin flip. The front in between is a
straight line.
"""

import numpy as np

from mifpo import SolveConfig, oracle_min, sweep_front, two_point_instance

inst = two_point_instance(alpha0=0.5, k=2)
front = sweep_front(inst, np.linspace(0, 1, 6), SolveConfig(seed=0))

# solver against vertex enumeration, next to the closed form (1 - gamma) / 2
for p in front.points:
    exact, _ = oracle_min(inst, p.gamma)
    print(f"gamma {p.gamma:.1f}  solver {p.error:.6f}  oracle {exact:.6f}  line {(1 - p.gamma) / 2:.6f}")

print()
print(front.to_csv())
