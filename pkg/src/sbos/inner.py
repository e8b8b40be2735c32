"""Inner-layer estimation engines.

Projected constant-step stochastic gradient ascent with a running-average
value estimator, backward finite-difference gradients (optionally with common
random numbers), and the sample-average-approximation entry point used by
data-driven systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class FeasibleBox:
    """One-dimensional decision interval ``[lower, upper]``."""

    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"FeasibleBox needs lower < upper, got [{self.lower}, {self.upper}]")

    def clamp(self, x: float) -> float:
        return min(max(x, self.lower), self.upper)

    def __contains__(self, x) -> bool:
        return self.lower <= x <= self.upper

    @property
    def diameter(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class SgdState:
    iterate: float
    step: float
    value_sum: float = 0.0
    steps_taken: int = 0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step size must be positive, got {self.step}")


@dataclass(frozen=True)
class ValueEstimate:
    v_hat: float
    sample_count: int

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("a value estimate needs at least one sample")


@dataclass
class SampleStore:
    """Append-only store of i.i.d. draws for one data-driven system."""

    draws: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.draws)

    def extend(self, values) -> None:
        self.draws.extend(np.asarray(values).tolist())

    def as_array(self) -> np.ndarray:
        return np.asarray(self.draws)


@dataclass(frozen=True)
class SgdPhase:
    """Result of one SGD phase: estimate, last iterate, evaluations and the raw value log."""

    estimate: ValueEstimate
    final_iterate: float
    evaluations: int
    values: np.ndarray


def sgd_step(state: SgdState, gradient: float, box: FeasibleBox) -> SgdState:
    """Ascent step ``x + step * gradient`` followed by projection onto ``box``."""
    if not math.isfinite(gradient):
        raise FloatingPointError(f"non-finite gradient {gradient!r}")
    x = box.clamp(state.iterate + state.step * gradient)
    return replace(state, iterate=x, steps_taken=state.steps_taken + 1)


def step_size(gamma0: float, steps: int) -> float:
    """Constant step for a phase of ``steps`` iterations: ``gamma0 / sqrt(steps)``."""
    if steps < 1:
        raise ValueError("a phase needs at least one step")
    if not gamma0 > 0:
        raise ValueError(f"step coefficient must be positive, got {gamma0}")
    return gamma0 / math.sqrt(steps)


def run_sgd_phase(problem, start: float, steps: int, gamma0: float, rng: np.random.Generator) -> SgdPhase:
    """Run ``steps`` projected SGD iterations from ``start`` and average the observed values.

    Values are recorded at the pre-update iterate, so the estimate averages
    ``F(x_1), ..., F(x_T)`` and the returned iterate is ``x_{T+1}``.
    """
    box = problem.box
    lo, hi = box.lower, box.upper
    gamma = step_size(gamma0, steps)
    x = box.clamp(float(start))
    sample = problem.sample
    values = np.empty(steps)
    evals = 0
    # same update as sgd_step, unrolled to keep the hot loop free of allocations
    for t in range(steps):
        value, grad, used = sample(x, rng)
        if not math.isfinite(grad):
            raise FloatingPointError(f"non-finite gradient {grad!r} at x={x}")
        values[t] = value
        evals += used
        x += gamma * grad
        x = lo if x < lo else (hi if x > hi else x)
    v_hat = float(np.mean(values))
    return SgdPhase(ValueEstimate(v_hat, steps), x, evals, values)


def fd_gradient(problem, x: float, delta: float, common_random_numbers: bool, rng: np.random.Generator):
    """Backward finite difference ``(F(x) - F(x - delta)) / delta``.

    Returns ``(value_at_x, gradient, evaluations)`` where ``evaluations`` is 2.
    With ``common_random_numbers`` both evaluations are driven by the same
    sub-seed. If ``x - delta`` leaves the box it is clamped and the effective
    step recomputed; at the lower edge a forward difference is used instead.
    """
    if not delta > 0:
        raise ValueError(f"finite-difference step must be positive, got {delta}")
    lower, upper = problem.box.lower, problem.box.upper
    x = lower if x < lower else (upper if x > upper else x)
    hi, lo = x, x - delta
    if lo < lower:
        lo = lower
    if lo == hi:
        lo, hi = hi, min(hi + delta, upper)
    if common_random_numbers:
        seed = int(rng.integers(2**63))
        f_hi = problem.evaluate(hi, np.random.default_rng(seed))
        f_lo = problem.evaluate(lo, np.random.default_rng(seed))
    else:
        f_hi = problem.evaluate(hi, rng)
        f_lo = problem.evaluate(lo, rng)
    value = f_hi if hi == x else f_lo
    return value, (f_hi - f_lo) / (hi - lo), 2


def solve_saa(problem, store: SampleStore) -> ValueEstimate:
    """Exact maximum of the empirical objective, delegated to the problem's solver."""
    if store.count == 0:
        raise ValueError("cannot solve SAA on an empty sample store")
    return ValueEstimate(float(problem.solve_saa(store.as_array())), store.count)
