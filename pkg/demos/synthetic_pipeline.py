"""
From a labelled table to a Pareto front
=======================================

Draw a synthetic dataset, calibrate per-group scores on a training split,
quantize the held-out scores into histograms and sweep the fairness level.
The threshold classifiers computed on the same histograms sit on or above
the front.
"""

import numpy as np

from mifpo import SolveConfig, baseline_error, sweep_front
from mifpo.fairclass import sweep_group_thresholds
from mifpo.pipeline import SyntheticSpec, bayes_error, instance_from_dataset, synthetic_generate

spec = SyntheticSpec(alpha0=0.4)
ds = synthetic_generate(10000, seed=0, spec=spec)
inst, model, report = instance_from_dataset(ds, L=10, k=4, seed=0)

print(f"rows {ds.n}, group-0 share {ds.alpha0:.3f}, held-out ECE {report.ece:.4f}")
print(f"bins per group {inst.L0} / {inst.L1}")
print(f"identity-representation error {baseline_error(inst):.4f}, generator Bayes error {bayes_error(spec, 200000, 1):.4f}")

front = sweep_front(inst, np.linspace(0, 1, 11), SolveConfig(seed=0))
sweep = sweep_group_thresholds(inst)

# best classifier error at or below each fairness level, next to the front
for p in front.points:
    cls = min((q.error for q in sweep.points if q.sp_distance <= p.gamma + 1e-12), default=np.nan)
    print(f"gamma {p.gamma:.1f}  front {p.error:.4f}  best threshold rule {cls:.4f}")
