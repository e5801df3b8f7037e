"""
Taking representations apart
============================

A random finite representation is split until every atom has at most one
parent per group, source points with equal label probability are merged,
and a single source pair is compressed onto a coarse grid. Each step is
checked against the quantities it is meant to keep.
"""

import numpy as np

from mifpo.reprlab import (
    compress_two_point,
    compression_bound,
    eval_rep,
    factorisation_residual,
    factorise,
    is_invertible,
    make_invertible_log,
    random_representation,
    random_two_point,
    two_point_cost,
)

rng = np.random.default_rng(3)
rep = random_representation(rng, 3, 3, 4)
out, log = make_invertible_log(rep)
print(f"invertible before {is_invertible(rep)}, after {is_invertible(out)} ({len(log)} splits, {out.n_atoms} atoms)")
for kind in ("min-error", "entropy"):
    (e, f), (e2, f2) = eval_rep(rep, kind), eval_rep(out, kind)
    print(f"  {kind:9s} error {e:.6f} -> {e2:.6f}   fairness {f:.6f} -> {f2:.6f}")

rep = random_representation(rng, 6, 5, 3, rho_collisions=True)
merged = factorise(rep)
print(f"factorise: {rep.s0_weights.size}+{rep.s1_weights.size} sources -> "
      f"{merged.s0_weights.size}+{merged.s1_weights.size}, residual {factorisation_residual(rep, merged):.1e}")

pair = random_two_point(rng, 100)
E, F = two_point_cost(pair)
for bins in (50, 5, 1):
    small = compress_two_point(pair, bins)
    E2, F2 = two_point_cost(small)
    print(f"bins {bins:2d}: atoms {small.w0.size:3d}  |dE| {abs(E2 - E):.2e} <= {compression_bound(pair, bins):.2e}"
          f"  F {F:.4f} -> {F2:.4f}")
