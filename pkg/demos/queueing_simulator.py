"""
A two-station service system with pricing
=========================================

Customers arrive with a rate that peaks mid-horizon, join only if they
accept the price, may abandon the first queue, and then visit a second
station. Staffing splits K + 1 servers between the stations.
"""

import numpy as np

from sbos.problems import QueueingInstance, audit_log, queueing_sample, simulate_queueing

inst = QueueingInstance(K=4)
print("service log-means:", round(inst.mu1, 3), round(inst.mu2, 3))

# Arrivals thin with the price: the expected number of entrants is (1 - p) * 1000 / 3.
for p in (0.0, 0.5, 1.0):
    counts = [simulate_queueing(inst, 2, p, seed=s).entered for s in range(200)]
    print(f"p={p:.1f}  mean entrants {np.mean(counts):7.1f}  expected {(1 - p) * 1000 / 3:7.1f}")

# Reward as a function of staffing at a fixed price.
for x in range(1, 5):
    r = [simulate_queueing(inst, x, 0.5, seed=s).reward for s in range(50)]
    print(f"x={x}  servers {inst.servers(x)}  mean reward {np.mean(r):10.1f}")

# A gradient sample uses the same seed at p and p - 0.03.
value, grad = queueing_sample(inst, 2, 0.5, seed=7)
print(f"value {value:.1f}, finite-difference gradient {grad:.1f}")

# The event log of a small run passes the consistency audit.
small = QueueingInstance(K=3, horizon=200.0)
out = simulate_queueing(small, 2, 0.2, seed=3, log=True)
print("entered", out.entered, "completed", out.completed, "abandoned", out.abandoned,
      "audit problems:", audit_log(out.log, *small.servers(2)))
