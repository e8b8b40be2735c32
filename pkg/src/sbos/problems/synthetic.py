"""Calibration families with known optimal values.

``GaussianQuadratic`` systems have a concave quadratic mean, Gaussian value
noise and an unbiased noisy gradient, so the optimal value of each system is
known exactly. ``offgrid_instance`` builds the adversarial pair that agrees on
every point of a discretization grid but differs between two grid points.
"""

from __future__ import annotations

import math

import numpy as np

from ..inner import FeasibleBox
from .base import GradientProblem


class GaussianQuadratic(GradientProblem):
    """``F(x) = optimum - curvature (x - center)^2 + sd * Z`` with a noisy exact gradient."""

    evals_per_sample = 1

    def __init__(self, optimum: float, sd: float = 1.0, center: float = 0.0, curvature: float = 1.0,
                 box: FeasibleBox | None = None, identity: int = 0):
        if not curvature > 0:
            raise ValueError("curvature must be positive")
        if sd < 0:
            raise ValueError("noise sd must be non-negative")
        self.optimum = float(optimum)
        self.sd = float(sd)
        self.center = float(center)
        self.curvature = float(curvature)
        self.box = box or FeasibleBox(center - 5.0, center + 5.0)
        self.identity = identity

    def mean(self, x: float) -> float:
        return self.optimum - self.curvature * (x - self.center) ** 2

    def evaluate(self, x: float, rng: np.random.Generator) -> float:
        if self.sd == 0:
            return self.mean(x)
        return self.mean(x) + self.sd * rng.standard_normal()

    def sample(self, x: float, rng: np.random.Generator):
        grad = -2.0 * self.curvature * (x - self.center)
        if self.sd == 0:
            return self.mean(x), grad, 1
        z = rng.standard_normal(2)
        return self.mean(x) + self.sd * z[0], grad + self.sd * z[1], 1

    def true_value(self) -> float:
        return self.optimum

    def __repr__(self):
        return f"GaussianQuadratic(optimum={self.optimum}, sd={self.sd}, id={self.identity})"


def complexity_h2(gaps) -> float:
    """``max_{i>1} i / gap_i^2`` for gaps listed in rank order (entry 0 is the best system)."""
    gaps = list(gaps)
    if len(gaps) < 2:
        raise ValueError("complexity needs at least two systems")
    terms = []
    for rank, gap in enumerate(gaps[1:], start=2):
        if not gap > 0:
            raise ValueError(f"gap of rank-{rank} system must be positive, got {gap}")
        terms.append(rank / gap**2)
    return max(terms)


def synthetic_gaussian_family(K: int, gaps, sd: float = 1.0, best_value: float = 0.0,
                              curvature: float = 1.0, box: FeasibleBox | None = None):
    """``K`` quadratic systems with ``v_i = best_value - gaps[i-1]``.

    ``gaps`` has ``K`` entries; the first (the best system) is ignored and may
    be ``None``. The returned list carries ``gaps`` and ``h2`` attributes for
    diagnostics.
    """
    gaps = list(gaps)
    if len(gaps) != K:
        raise ValueError(f"expected {K} gaps, got {len(gaps)}")
    gaps[0] = 0.0
    for i, g in enumerate(gaps[1:], start=2):
        if g is None or not g > 0:
            raise ValueError(f"gap of system {i} must be positive, got {g}")
    family = SystemFamily(
        GaussianQuadratic(best_value - g, sd, curvature=curvature, box=box, identity=i)
        for i, g in enumerate(gaps, start=1)
    )
    family.gaps = tuple(float(g) for g in gaps)
    family.h2 = complexity_h2(sorted(family.gaps))
    return family


class SystemFamily(list):
    """List of problems with room for diagnostic attributes."""


class KinkProblem(GradientProblem):
    """Concave tent ``-slope |x - peak| - offset`` with an optional flat ``plateau = (lo, hi)``.

    On the plateau the mean is ``-slope * (hi - lo) / 2 - offset``, the tent's
    value at both plateau ends. Noise is additive so the stochastic gradient
    equals the mean's subgradient.
    """

    evals_per_sample = 1

    def __init__(self, peak: float, slope: float, sd: float, box: FeasibleBox,
                 offset: float = 0.0, plateau: tuple | None = None, identity: int = 0):
        self.peak, self.slope, self.sd = float(peak), float(slope), float(sd)
        self.offset = float(offset)
        self.plateau = plateau
        self.box = box
        self.identity = identity

    def _on_plateau(self, x: float) -> bool:
        return self.plateau is not None and self.plateau[0] < x < self.plateau[1]

    def mean(self, x: float) -> float:
        if self._on_plateau(x):
            drop = (self.plateau[1] - self.plateau[0]) / 2
            return -self.slope * drop - self.offset
        return -self.slope * abs(x - self.peak) - self.offset

    def subgradient(self, x: float) -> float:
        if self._on_plateau(x) or x == self.peak:
            return 0.0
        return -self.slope * math.copysign(1.0, x - self.peak)

    def evaluate(self, x: float, rng: np.random.Generator) -> float:
        return self.mean(x) + self.sd * rng.standard_normal()

    def sample(self, x: float, rng: np.random.Generator):
        return self.evaluate(x, rng), self.subgradient(x), 1

    def true_value(self) -> float:
        if self.plateau is not None:
            return self.mean((self.plateau[0] + self.plateau[1]) / 2)
        return self.mean(self.box.clamp(self.peak))


def offgrid_instance(grid, K: int = 4, slope: float = 10.0, sd: float = 1.0,
                    box: FeasibleBox | None = None, offset: float = 1.0):
    """Systems 1 and 2 coincide on every grid point; system 1 is strictly better.

    The widest interior gap ``(x_j, x_{j+1})`` of ``grid`` (first one on ties)
    hosts system 1's peak at its midpoint, while system 2 is flat there.
    Systems ``3..K`` are copies of system 1 shifted down by ``offset``.
    """
    grid = np.asarray(sorted(grid), dtype=float)
    if grid.size < 2:
        raise ValueError("grid needs at least two points")
    if K < 2:
        raise ValueError("the construction needs at least two systems")
    box = box or FeasibleBox(float(grid[0]), float(grid[-1]))
    j = int(np.argmax(np.round(np.diff(grid), 12)))
    lo, hi = float(grid[j]), float(grid[j + 1])
    peak = (lo + hi) / 2
    family = SystemFamily([KinkProblem(peak, slope, sd, box, identity=1),
                           KinkProblem(peak, slope, sd, box, plateau=(lo, hi), identity=2)])
    for i in range(3, K + 1):
        family.append(KinkProblem(peak, slope, sd, box, offset=offset * (i - 2), identity=i))
    family.grid = tuple(float(g) for g in grid)
    family.plateau = (lo, hi)
    return family
