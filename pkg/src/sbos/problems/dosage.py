"""Dose-finding among perturbed quadratic dose-response curves.

The "center" response is a fitted quadratic ``a q^2 + b q + c`` of blood
pressure change against dose (smaller is better); each drug scales the three
coefficients by ``1 + u_i`` with ``u_i ~ U[-0.1, 0.1]``. The maximized
objective is the negated response plus unit Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..inner import FeasibleBox
from .base import GradientProblem

A_STAR = 9 / 1250
B_STAR = -23 / 50
C_STAR = -5.0

DOSE_RANGE = (0.0, 50.0)
OCBA_GRID = tuple(float(q) for q in range(11, 41))
START_DOSE = 25.0
GAMMA0 = 1.0
FD_STEP = 0.5


def center_optimum() -> float:
    """Maximum of the negated center quadratic, ``b^2 / (4a) - c``."""
    return B_STAR**2 / (4 * A_STAR) - C_STAR


def optimal_dose() -> float:
    """Vertex abscissa ``-b / (2a)``; the same for every perturbed system."""
    return -B_STAR / (2 * A_STAR)


class DosageProblem(GradientProblem):
    common_random_numbers = False
    evals_per_sample = 2

    def __init__(self, coefficients, noise_sd: float = 1.0, box: FeasibleBox | None = None,
                 fd_step: float = FD_STEP, identity: int = 0):
        a, b, c = (float(v) for v in coefficients)
        if not a > 0:
            raise ValueError(f"dose-response curvature must be positive, got a={a}")
        self.a, self.b, self.c = a, b, c
        self.noise_sd = float(noise_sd)
        self.box = box or FeasibleBox(*DOSE_RANGE)
        self.fd_step = fd_step
        self.identity = identity

    def mean(self, q: float) -> float:
        return -(self.a * q * q + self.b * q + self.c)

    def evaluate(self, q: float, rng: np.random.Generator) -> float:
        if self.noise_sd > 0:
            return -(self.a * q * q + self.b * q + self.c) + self.noise_sd * rng.standard_normal()
        return self.mean(q)

    def true_value(self) -> float:
        return self.b**2 / (4 * self.a) - self.c

    def __repr__(self):
        return f"DosageProblem(a={self.a:.6g}, b={self.b:.6g}, c={self.c:.6g}, id={self.identity})"


@dataclass(frozen=True)
class DosageInstance:
    perturbations: tuple
    noise_sd: float = 1.0
    dose_range: tuple = DOSE_RANGE
    fd_step: float = FD_STEP
    grid: tuple = field(default=OCBA_GRID)

    def __post_init__(self):
        for u in self.perturbations:
            if not -1 < u:
                raise ValueError(f"perturbation {u} makes the curvature non-positive")

    @classmethod
    def random(cls, K: int, rng: np.random.Generator, spread: float = 0.1, **kwargs) -> "DosageInstance":
        u = rng.uniform(-spread, spread, size=K)
        return cls(tuple(float(v) for v in u), **kwargs)

    @property
    def K(self) -> int:
        return len(self.perturbations)

    def coefficients(self, i: int):
        """Coefficients ``(a_i, b_i, c_i)`` of system ``i`` (1-based)."""
        s = 1.0 + self.perturbations[i - 1]
        return s * A_STAR, s * B_STAR, s * C_STAR

    def problem(self, i: int) -> DosageProblem:
        return DosageProblem(self.coefficients(i), self.noise_sd, FeasibleBox(*self.dose_range),
                             self.fd_step, identity=i)

    def problems(self):
        return [self.problem(i) for i in range(1, self.K + 1)]

    def true_values(self) -> np.ndarray:
        return np.array([dosage_true_value(self, i) for i in range(1, self.K + 1)])


def dosage_true_value(instance: DosageInstance, i: int) -> float:
    a, b, c = instance.coefficients(i)
    if not a > 0:
        raise ValueError(f"system {i} has non-positive curvature a={a}")
    return b * b / (4 * a) - c


def dosage_sample(instance: DosageInstance, i: int, q: float, seed) -> tuple[float, float]:
    """``(value, gradient)`` for system ``i`` at dose ``q`` from one seeded draw."""
    value, grad, _ = instance.problem(i).sample(q, np.random.default_rng(seed))
    return value, grad
