"""Data-driven newsvendor products with Poisson demand."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .base import DataProblem


def critical_ratio(price: float, cost: float) -> float:
    return (price - cost) / price


def empirical_objective(q: float, samples: np.ndarray, price: float, cost: float) -> float:
    """``price * mean(min(q, X)) - cost * q`` under the empirical distribution."""
    return price * float(np.mean(np.minimum(q, samples))) - cost * q


def saa_quantile(samples: np.ndarray, price: float, cost: float) -> float:
    """Smallest sample whose empirical CDF reaches the critical ratio."""
    ratio = critical_ratio(price, cost)
    if ratio <= 0:
        return 0.0
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    # smallest k with k / n >= ratio; the epsilon absorbs ratio * n landing a hair above an integer
    k = max(1, math.ceil(ratio * n - 1e-9))
    return float(xs[min(k, n) - 1])


def newsvendor_saa(samples: np.ndarray, price: float, cost: float) -> float:
    q = saa_quantile(samples, price, cost)
    return empirical_objective(q, np.asarray(samples, dtype=float), price, cost)


class NewsvendorProblem(DataProblem):
    def __init__(self, price: float, cost: float, rate: float, identity: int = 0):
        if not price > cost > 0:
            raise ValueError(f"need price > cost > 0, got price={price}, cost={cost}")
        if not rate > 0:
            raise ValueError(f"Poisson rate must be positive, got {rate}")
        self.price, self.cost, self.rate = float(price), float(cost), float(rate)
        self.identity = identity

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.poisson(self.rate, size=size).astype(float)

    def solve_saa(self, samples: np.ndarray) -> float:
        return newsvendor_saa(samples, self.price, self.cost)

    def optimal_order(self) -> int:
        return poisson_optimal_order(self.price, self.cost, self.rate)

    def true_value(self) -> float:
        return poisson_newsvendor_value(self.optimal_order(), self.price, self.cost, self.rate)

    def __repr__(self):
        return f"NewsvendorProblem(p={self.price}, c={self.cost}, lam={self.rate}, id={self.identity})"


def poisson_optimal_order(price: float, cost: float, rate: float) -> int:
    """Smallest integer ``q`` with Poisson CDF at least the critical ratio."""
    ratio = critical_ratio(price, cost)
    if ratio <= 0:
        return 0
    q = int(stats.poisson.ppf(ratio, rate))
    # ppf works in floating point; walk to the exact smallest integer
    while q > 0 and stats.poisson.cdf(q - 1, rate) >= ratio:
        q -= 1
    while stats.poisson.cdf(q, rate) < ratio:
        q += 1
    return q


def expected_sales(q: int, rate: float) -> float:
    """``E[min(q, X)] = sum_{k<q} P(X > k)`` for ``X ~ Poisson(rate)``."""
    if q <= 0:
        return 0.0
    return math.fsum(stats.poisson.sf(np.arange(q), rate))


def poisson_newsvendor_value(q: int, price: float, cost: float, rate: float) -> float:
    return price * expected_sales(q, rate) - cost * q


@dataclass(frozen=True)
class NewsvendorInstance:
    prices: tuple
    costs: tuple
    rates: tuple

    def __post_init__(self):
        if not len(self.prices) == len(self.costs) == len(self.rates):
            raise ValueError("prices, costs and rates must have equal length")
        for i, (p, c, lam) in enumerate(zip(self.prices, self.costs, self.rates), start=1):
            if not p > c > 0:
                raise ValueError(f"system {i}: need price > cost > 0")
            if not lam > 0:
                raise ValueError(f"system {i}: Poisson rate must be positive")

    @classmethod
    def standard(cls, K: int = 16) -> "NewsvendorInstance":
        """Products ``i = 1..K`` with ``p_i = i/2 + 5``, ``c_i = i/5 + 1``, ``lambda_i = 250 - 6i``."""
        idx = range(1, K + 1)
        return cls(tuple(0.5 * i + 5 for i in idx),
                   tuple(0.2 * i + 1 for i in idx),
                   tuple(250.0 - 6 * i for i in idx))

    @property
    def K(self) -> int:
        return len(self.prices)

    def problem(self, i: int) -> NewsvendorProblem:
        return NewsvendorProblem(self.prices[i - 1], self.costs[i - 1], self.rates[i - 1], identity=i)

    def problems(self):
        return [self.problem(i) for i in range(1, self.K + 1)]

    def true_values(self) -> np.ndarray:
        return np.array([newsvendor_true_value(self, i) for i in range(1, self.K + 1)])


def newsvendor_draw(instance: NewsvendorInstance, i: int, rng: np.random.Generator) -> int:
    return int(rng.poisson(instance.rates[i - 1]))


def newsvendor_true_value(instance: NewsvendorInstance, i: int) -> float:
    return instance.problem(i).true_value()
