"""
When a fixed grid hides the best system
=======================================

Two systems agree at every point of a decision grid but the first has a
sharp peak between two grid points. An allocation rule that only samples the
grid cannot tell them apart, while gradient ascent inside each system finds
the peak.
"""

from sbos import ExperimentPlan, InstanceSpec, run_experiment
from sbos.problems import offgrid_instance

fam = offgrid_instance([round(0.1 * k, 10) for k in range(1, 11)])
print("grid:", fam.grid)
print("peak of system 1 at", fam[0].peak, "inside", fam.plateau)
print("true values:", [p.true_value() for p in fam])
print("means at grid point 0.1 / 0.2:", fam[0].mean(0.1), fam[1].mean(0.1), "/", fam[0].mean(0.2), fam[1].mean(0.2))

spec = InstanceSpec("offgrid", 4)
for policy in ("ocba", "seo-sgd"):
    est = run_experiment(ExperimentPlan(policy, spec, (2000,), replications=200, base_seed=3))[0]
    print(f"{policy:<8} PCS {est.pcs:.2f} +- {est.stderr:.2f}")
