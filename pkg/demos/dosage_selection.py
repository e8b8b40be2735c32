"""
Picking the best drug by sequential elimination
===============================================

Sixteen drugs share a quadratic dose-response shape scaled by a random
factor. Each drug's merit is its best achievable (negated) blood-pressure
response, which we only observe through noisy trials at a chosen dose.
"""

import numpy as np

from sbos import ExperimentPlan, InstanceSpec, build_family, diagnostics, run_experiment
from sbos.harness import instance_stream

# Build the instance exactly as the harness will and look at its difficulty.
spec = InstanceSpec("dosage", 16, {"instance_seed": 0})
plan = ExperimentPlan("seo-sgd", spec, (8000, 16000, 32000), replications=100, base_seed=1)
family = build_family(spec, instance_stream(plan))
diag = diagnostics(family)
order = np.argsort(diag.gaps)
print("best drug:", diag.best)
print("three closest competitors (system, gap):",
      [(int(i) + 1, round(diag.gaps[i], 4)) for i in order[1:4]])
print(f"complexity H2 = {diag.h2:.1f}")

# Sequential elimination against uniform allocation at the same budgets.
# Budgets count function evaluations; each gradient sample costs two.
for policy in ("seo-sgd", "uniform-sgd"):
    plan = ExperimentPlan(policy, spec, (8000, 16000, 32000), replications=100, base_seed=1)
    for est in run_experiment(plan):
        print(f"{policy:<12} T={est.T:>6}  PCS={est.pcs:.2f} +- {est.stderr:.2f}")
