"""Two-station FIFO service system with pricing, abandonment and time-varying arrivals.

Customers arrive on ``[0, H]`` from a Poisson process with rate
``lambda0 * t (H - t) / H^2``, accept the posted price ``p`` with probability
``1 - p``, and visit Station One (``x`` servers) then Station Two
(``K + 1 - x`` servers). Service requirements are correlated lognormals and
customers abandon Station One's queue once their gamma patience runs out.
The run ends when the last customer leaves.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from ..inner import FeasibleBox
from .base import GradientProblem

PRICE_BOX = FeasibleBox(0.0, 1.0)
OCBA_GRID = tuple(round(0.1 * k, 10) for k in range(1, 11))
FD_STEP = 0.03
START_PRICE = 0.5


@dataclass(frozen=True)
class QueueingInstance:
    """Parameters of the staffing/pricing system.

    ``mu1``, ``mu2`` and ``patience_shape`` default to ``log 10 + log K``,
    ``log 2 + log K`` and ``2 * mu1``. ``count_abandoned_wait`` decides whether
    customers who abandon contribute their patience to the total wait.
    """

    K: int
    lambda0: float = 1.0
    horizon: float = 2000.0
    mu1: float | None = None
    mu2: float | None = None
    sigma1: float = 1.0
    sigma2: float = 1.0
    rho: float = 0.5
    patience_shape: float | None = None
    patience_rate: float = 1.0
    wait_penalty: float = 1.0
    count_abandoned_wait: bool = True

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.mu1 is None:
            object.__setattr__(self, "mu1", math.log(10) + math.log(self.K))
        if self.mu2 is None:
            object.__setattr__(self, "mu2", math.log(2) + math.log(self.K))
        if self.patience_shape is None:
            object.__setattr__(self, "patience_shape", 2 * self.mu1)
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ValueError("service log-sds must be positive")
        if not abs(self.rho) < 1:
            raise ValueError("|rho| must be below 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.lambda0 < 0:
            raise ValueError("lambda0 must be non-negative")
        if self.wait_penalty < 0:
            raise ValueError("wait penalty must be non-negative")
        if not (self.patience_shape > 0 and self.patience_rate > 0):
            raise ValueError("patience distribution parameters must be positive")

    @property
    def gamma0(self) -> float:
        return 2.0 / self.horizon

    def rate(self, t):
        return self.lambda0 * t * (self.horizon - t) / self.horizon**2

    def servers(self, x: int) -> tuple[int, int]:
        if not (isinstance(x, (int, np.integer)) and 1 <= x <= self.K):
            raise ValueError(f"staffing x must be an integer in [1, {self.K}], got {x!r}")
        return int(x), self.K + 1 - int(x)

    def problem(self, x: int) -> "QueueingProblem":
        return QueueingProblem(self, x)

    def problems(self):
        return [self.problem(x) for x in range(1, self.K + 1)]


@dataclass(frozen=True)
class SimOutput:
    completed: int
    total_wait: float
    entered: int
    abandoned: int
    reward: float
    log: list | None = None


@dataclass(frozen=True)
class CustomerRecord:
    arrival: float
    abandoned: bool
    start1: float = math.nan
    end1: float = math.nan
    server1: int = -1
    start2: float = math.nan
    end2: float = math.nan
    server2: int = -1
    wait: float = 0.0


def _candidates(lambda0: float, horizon: float, rng: np.random.Generator):
    # homogeneous candidates at the envelope rate lambda0/4, the peak of t(H-t)/H^2 at t=H/2
    n = rng.poisson(lambda0 * horizon / 4)
    times = np.sort(rng.uniform(0.0, horizon, size=n))
    u_rate = rng.uniform(size=n)
    u_price = rng.uniform(size=n)
    return times, u_rate, u_price


def _keep(times, u_rate, u_price, horizon, acceptance_prob):
    ratio = 4.0 * times * (horizon - times) / horizon**2
    return (u_rate < ratio) & (u_price < acceptance_prob)


def nhpp_arrivals(lambda0: float, horizon: float, acceptance_prob: float, rng: np.random.Generator) -> np.ndarray:
    """Arrival times of customers who accept the price, by thinning."""
    if not 0 <= acceptance_prob <= 1:
        raise ValueError(f"acceptance probability must be in [0, 1], got {acceptance_prob}")
    if lambda0 < 0 or not horizon > 0:
        raise ValueError("need lambda0 >= 0 and horizon > 0")
    times, u_rate, u_price = _candidates(lambda0, horizon, rng)
    return times[_keep(times, u_rate, u_price, horizon, acceptance_prob)]


def run_tandem(arrivals, service1, service2, patience, servers1: int, servers2: int,
               count_abandoned_wait: bool = True, log: bool = False):
    """FIFO tandem recursion on explicit customer data.

    Returns ``(completed, abandoned, total_wait, records)``; ``records`` is
    ``None`` unless ``log`` is set. Station One serves customers in arrival
    order on the earliest free server; a customer whose wait would exceed
    their patience leaves at ``arrival + patience`` without taking a server.
    Station Two takes customers in order of their Station One departures.
    """
    free = [(0.0, s) for s in range(servers1)]
    heapq.heapify(free)
    wait = 0.0
    abandoned = 0
    served = []  # (departure1, index, start1, server1)
    n = len(arrivals)
    recs = [None] * n if log else None
    for k in range(n):
        a = arrivals[k]
        f, s = free[0]
        start = a if f < a else f
        if start - a > patience[k]:
            abandoned += 1
            if count_abandoned_wait:
                wait += patience[k]
            if log:
                recs[k] = CustomerRecord(a, True, wait=patience[k] if count_abandoned_wait else 0.0)
            continue
        end = start + service1[k]
        heapq.heapreplace(free, (end, s))
        wait += start - a
        served.append((end, k, start, s))

    served.sort()
    free = [(0.0, s) for s in range(servers2)]
    heapq.heapify(free)
    for d1, k, start1, s1 in served:
        f, s = free[0]
        start = d1 if f < d1 else f
        end = start + service2[k]
        heapq.heapreplace(free, (end, s))
        wait += start - d1
        if log:
            recs[k] = CustomerRecord(arrivals[k], False, start1, d1, s1, start, end, s,
                                     (start1 - arrivals[k]) + (start - d1))
    return len(served), abandoned, wait, recs


def simulate_queueing(instance: QueueingInstance, x: int, p: float, seed, log: bool = False) -> SimOutput:
    """One replication of the system with ``x`` Station One servers and price ``p``."""
    c1, c2 = instance.servers(x)
    if not 0 <= p <= 1:
        raise ValueError(f"price must be in [0, 1], got {p}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    H = instance.horizon
    times, u_rate, u_price = _candidates(instance.lambda0, H, rng)
    n = times.size
    # per-candidate attributes are drawn for every candidate so that runs at
    # different prices under one seed share customers
    z1 = rng.standard_normal(n)
    z2 = rng.standard_normal(n)
    pat = rng.gamma(instance.patience_shape, 1.0 / instance.patience_rate, size=n)
    keep = _keep(times, u_rate, u_price, H, 1.0 - p)
    y1 = instance.mu1 + instance.sigma1 * z1[keep]
    y2 = instance.mu2 + instance.sigma2 * (instance.rho * z1[keep] + math.sqrt(1 - instance.rho**2) * z2[keep])
    arrivals = times[keep]
    done, gone, wait, recs = run_tandem(arrivals.tolist(), np.exp(y1).tolist(), np.exp(y2).tolist(),
                                        pat[keep].tolist(), c1, c2, instance.count_abandoned_wait, log)
    reward = p * done - instance.wait_penalty * wait
    return SimOutput(done, wait, int(arrivals.size), gone, reward, recs)


def audit_log(records, servers1: int, servers2: int, tol: float = 1e-9) -> list[str]:
    """Consistency problems found in a simulation log; empty when the run is sound."""
    problems = []
    busy = {1: [[] for _ in range(servers1)], 2: [[] for _ in range(servers2)]}
    for k, r in enumerate(records):
        if r is None:
            problems.append(f"customer {k}: no record")
            continue
        if k and r.arrival < records[k - 1].arrival:
            problems.append(f"customer {k}: arrival out of order")
        if r.abandoned:
            continue
        if not (r.arrival <= r.start1 <= r.end1 <= r.start2 <= r.end2):
            problems.append(f"customer {k}: timestamps not non-decreasing")
        busy[1][r.server1].append((r.start1, r.end1, k))
        busy[2][r.server2].append((r.start2, r.end2, k))
    for station, per_server in busy.items():
        for s, spans in enumerate(per_server):
            spans.sort()
            for (s0, e0, k0), (s1, e1, k1) in zip(spans, spans[1:]):
                if s1 < e0 - tol:
                    problems.append(f"station {station} server {s}: customers {k0} and {k1} overlap")
    return problems


def queueing_sample(instance: QueueingInstance, x: int, p: float, delta: float = FD_STEP, seed=None):
    """``(value, gradient)`` from two runs at ``p`` and ``p - delta`` sharing one seed."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not delta <= p <= 1:
        raise ValueError(f"price must be in [{delta}, 1], got {p}")
    hi = simulate_queueing(instance, x, p, seed).reward
    lo = simulate_queueing(instance, x, p - delta, seed).reward
    return hi, (hi - lo) / delta


class QueueingProblem(GradientProblem):
    common_random_numbers = True
    evals_per_sample = 2

    def __init__(self, instance: QueueingInstance, x: int, fd_step: float = FD_STEP):
        instance.servers(x)
        self.instance = instance
        self.x = int(x)
        self.identity = int(x)
        self.box = PRICE_BOX
        self.fd_step = fd_step

    def evaluate(self, p: float, rng: np.random.Generator) -> float:
        return simulate_queueing(self.instance, self.x, p, int(rng.integers(2**63))).reward

    def __repr__(self):
        return f"QueueingProblem(x={self.x}, K={self.instance.K})"
