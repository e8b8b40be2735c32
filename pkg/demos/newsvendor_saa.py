"""
Newsvendor products with sample average approximation
=====================================================

Each product has Poisson demand. With data in hand the best order quantity
is an empirical quantile, so the inner problem is solved exactly on every
sample. We compare the estimate against the exact Poisson value as data
accumulates, then run the selection policies.
"""

import numpy as np

from sbos import ExperimentPlan, InstanceSpec, run_experiment
from sbos.problems import NewsvendorInstance

inst = NewsvendorInstance.standard(16)
values = inst.true_values()
print("true values:", np.round(values, 2))
print("best product:", int(np.argmax(values)) + 1)

# SAA estimates of product 14 tighten around the exact value as n grows.
product = inst.problem(14)
rng = np.random.default_rng(0)
for n in (10, 100, 1000, 10000):
    est = [product.solve_saa(product.draw(rng, n)) for _ in range(200)]
    print(f"n={n:>5}  mean SAA value {np.mean(est):9.2f}  sd {np.std(est):7.2f}  (exact {product.true_value():.2f})")

# Selection: the top products are close, so PCS grows slowly with budget.
spec = InstanceSpec("newsvendor", 16)
for policy in ("seo-saa", "uniform-saa"):
    plan = ExperimentPlan(policy, spec, (2000, 8000, 32000), replications=200, base_seed=2)
    print(policy, [f"{e.pcs:.2f}" for e in run_experiment(plan)])
