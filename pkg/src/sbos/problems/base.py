"""Contracts for one system's inner optimization problem."""

from __future__ import annotations

import abc

import numpy as np

from ..inner import FeasibleBox, fd_gradient

GRADIENT = "gradient"
DATA = "data"


class InnerProblem(abc.ABC):
    """Common surface of every system.

    ``mode`` is ``"gradient"`` for simulation-optimization systems, which
    expose :meth:`GradientProblem.sample`, or ``"data"`` for data-driven
    systems, which expose :meth:`DataProblem.draw` and
    :meth:`DataProblem.solve_saa`. ``true_value`` returns the optimal
    expected value when it is known in closed form and ``None`` otherwise.
    """

    mode: str
    identity: int = 0

    def true_value(self) -> float | None:
        return None


class GradientProblem(InnerProblem):
    """A system sampled through noisy function values and stochastic gradients.

    Subclasses implement :meth:`evaluate`. The default :meth:`sample` builds a
    backward finite-difference gradient with step ``fd_step``, costing two
    evaluations; problems with an analytic gradient override it and set
    ``evals_per_sample = 1``.
    """

    mode = GRADIENT
    box: FeasibleBox
    fd_step: float = 0.5
    common_random_numbers: bool = False
    evals_per_sample: int = 2

    @abc.abstractmethod
    def evaluate(self, x: float, rng: np.random.Generator) -> float:
        """One noisy observation ``F(x, xi)``."""

    def sample(self, x: float, rng: np.random.Generator):
        """Return ``(value, gradient, evaluations)`` at ``x``."""
        return fd_gradient(self, x, self.fd_step, self.common_random_numbers, rng)


class DataProblem(InnerProblem):
    """A system whose distribution is only reachable through i.i.d. draws."""

    mode = DATA

    @abc.abstractmethod
    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` fresh data points."""

    @abc.abstractmethod
    def solve_saa(self, samples: np.ndarray) -> float:
        """Optimal value of the empirical problem built from ``samples``."""
