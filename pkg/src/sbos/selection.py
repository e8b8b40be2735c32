"""Outer-layer selection policies with fixed-budget accounting.

Systems are numbered ``1..K`` in the order of the ``problems`` list. Every
policy returns a :class:`SelectionOutcome` whose ``evaluations_used`` counts
function evaluations (simulation regime) or collected data points
(data-driven regime).
"""

from __future__ import annotations

import math
import time
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .inner import SampleStore, run_sgd_phase, solve_saa
from .problems.base import DATA, GRADIENT


class ConfigurationError(ValueError):
    """A policy configuration that cannot be executed (budget too small, bad grid, ...)."""


class InvariantViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class SeoConfig:
    """Configuration shared by the sequential-elimination and uniform policies.

    ``total_budget`` counts function evaluations; the number of SGD samples
    available is ``total_budget // evals_per_sample``. ``evals_per_sample``
    defaults to the largest per-sample cost among the problems.
    ``initial_points`` is a scalar, a length-``K`` sequence, a mapping from
    system id to start point, or ``None`` for the centre of each box.
    """

    total_budget: int
    step_coefficient: float = 1.0
    initial_points: float | Sequence | Mapping | None = None
    evals_per_sample: int | None = None
    warm_start: bool = True

    def __post_init__(self):
        if self.total_budget < 0:
            raise ConfigurationError("total_budget must be non-negative")
        if not self.step_coefficient > 0:
            raise ConfigurationError("step_coefficient must be positive")
        if self.evals_per_sample is not None and self.evals_per_sample not in (1, 2):
            raise ConfigurationError("evals_per_sample must be 1 or 2")


@dataclass(frozen=True)
class OcbaConfig:
    total_budget: int
    grid: tuple
    initial_fraction: float = 0.2

    def __post_init__(self):
        grid = tuple(float(g) for g in self.grid)
        object.__setattr__(self, "grid", grid)
        if len(grid) < 2:
            raise ConfigurationError("OCBA grid needs at least two points")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("OCBA grid must be strictly increasing")
        if not 0 < self.initial_fraction < 1:
            raise ConfigurationError("initial_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class EliminationState:
    """Snapshot of one phase: who was active, the per-system budget, the estimates and who was dropped."""

    phase: int
    active: tuple
    phase_budget: int
    estimates: Mapping
    eliminated: tuple
    evaluations_used: int


@dataclass(frozen=True)
class SelectionOutcome:
    chosen: int
    phase_trace: tuple
    evaluations_used: int
    samples_used: int = 0
    details: Mapping = field(default_factory=dict)
    wall_time: float = field(default=0.0, compare=False)


def num_phases(K: int) -> int:
    """``floor(log2 K)`` computed exactly on integers."""
    if K < 1:
        raise ValueError("K must be positive")
    return K.bit_length() - 1


def phase_budget(T: int, L: int, active_count: int) -> int:
    """Per-system samples in a phase: ``floor(T / (L * active_count))``."""
    if L < 1 or active_count < 1:
        raise ValueError(f"phase_budget needs L >= 1 and active_count >= 1, got L={L}, active={active_count}")
    if T < 0:
        raise ValueError("budget must be non-negative")
    return T // (L * active_count)


def phase_schedule(T: int, K: int) -> tuple:
    """``(active_count, per_system_budget)`` for each phase of a ``K``-system run with ``T`` samples."""
    L = num_phases(K)
    sizes, n = [], K
    for _ in range(L):
        sizes.append((n, phase_budget(T, L, n)))
        n //= 2
    return tuple(sizes)


def halve(active, estimates) -> tuple:
    """Keep the top ``floor(|active| / 2)`` systems by estimate.

    Ties go to the lower system id; the survivors are returned in id order.
    """
    active = tuple(active)
    if len(active) < 2:
        raise ValueError("halving needs at least two active systems")
    missing = [i for i in active if i not in estimates]
    if missing:
        raise InvariantViolation(f"no estimate for active systems {missing}")
    ranked = sorted(active, key=lambda i: (-estimates[i], i))
    return tuple(sorted(ranked[: len(active) // 2]))


def argmax_lowest(estimates: Mapping) -> int:
    return min(estimates, key=lambda i: (-estimates[i], i))


def _start_points(problems, initial_points):
    K = len(problems)
    if initial_points is None:
        return {i: (p.box.lower + p.box.upper) / 2 for i, p in enumerate(problems, start=1)}
    if isinstance(initial_points, Mapping):
        return {i: float(initial_points[i]) for i in range(1, K + 1)}
    if isinstance(initial_points, (int, float)):
        return {i: float(initial_points) for i in range(1, K + 1)}
    pts = list(initial_points)
    if len(pts) != K:
        raise ConfigurationError(f"expected {K} initial points, got {len(pts)}")
    return {i: float(x) for i, x in enumerate(pts, start=1)}


def _check_mode(problems, mode):
    if len(problems) < 1:
        raise ValueError("need at least one system")
    bad = [i for i, p in enumerate(problems, start=1) if p.mode != mode]
    if bad:
        raise ConfigurationError(f"systems {bad} are not {mode}-mode problems")


def _sample_budget(problems, config: SeoConfig):
    need = max(getattr(p, "evals_per_sample", 1) for p in problems)
    eps = config.evals_per_sample if config.evals_per_sample is not None else need
    if eps < need:
        raise ConfigurationError(f"evals_per_sample={eps} but the problems need {need} evaluations per sample")
    return config.total_budget // eps


def _trivial(start):
    return SelectionOutcome(1, (), 0, 0, {}, time.perf_counter() - start)


def _eliminate(problems, config: SeoConfig, rng, estimate_phase):
    """Shared halving loop; ``estimate_phase(i, steps)`` returns ``(v_hat, evaluations, samples)``."""
    start = time.perf_counter()
    K = len(problems)
    if K == 1:
        return _trivial(start)
    L = num_phases(K)
    T = _sample_budget(problems, config)
    if T < L * K:
        raise ConfigurationError(
            f"budget of {T} samples cannot give each of {K} systems one sample in each of {L} phases")
    active = tuple(range(1, K + 1))
    trace = []
    evals = samples = 0
    for ell, (size, steps) in enumerate(phase_schedule(T, K), start=1):
        if len(active) != size:
            raise InvariantViolation(f"phase {ell} has {len(active)} active systems, expected {size}")
        estimates = {}
        for i in active:
            v_hat, used, drawn = estimate_phase(i, steps)
            estimates[i] = v_hat
            evals += used
            samples += drawn
        survivors = halve(active, estimates)
        dropped = tuple(i for i in active if i not in survivors)
        trace.append(EliminationState(ell, active, steps, estimates, dropped, evals))
        active = survivors
    if len(active) != 1:
        raise InvariantViolation(f"{len(active)} systems remain after {L} phases")
    if evals > config.total_budget:
        raise InvariantViolation(f"used {evals} evaluations with a budget of {config.total_budget}")
    return SelectionOutcome(active[0], tuple(trace), evals, samples, {}, time.perf_counter() - start)


def run_seo_sgd(problems, config: SeoConfig, rng: np.random.Generator) -> SelectionOutcome:
    """Sequential elimination with projected SGD as the inner engine.

    Phase ``l`` gives each active system ``floor(T / (L |A_l|))`` SGD steps
    with step ``gamma0 / sqrt(T_l)`` and scores it by the mean observed value;
    the bottom half is then dropped. With ``warm_start`` each survivor resumes
    from its last iterate.
    """
    _check_mode(problems, GRADIENT)
    points = _start_points(problems, config.initial_points)
    origin = dict(points)

    def phase(i, steps):
        res = run_sgd_phase(problems[i - 1], points[i] if config.warm_start else origin[i],
                            steps, config.step_coefficient, rng)
        points[i] = res.final_iterate
        return res.estimate.v_hat, res.evaluations, steps

    return _eliminate(problems, config, rng, phase)


def run_seo_saa(problems, config: SeoConfig, rng: np.random.Generator) -> SelectionOutcome:
    """Sequential elimination where each phase adds fresh data and re-solves the SAA problem."""
    _check_mode(problems, DATA)
    stores = {i: SampleStore() for i in range(1, len(problems) + 1)}

    def phase(i, steps):
        stores[i].extend(problems[i - 1].draw(rng, steps))
        return solve_saa(problems[i - 1], stores[i]).v_hat, steps, steps

    out = _eliminate(problems, config, rng, phase)
    if out.phase_trace:
        counts = {i: s.count for i, s in stores.items()}
        out = SelectionOutcome(out.chosen, out.phase_trace, out.evaluations_used, out.samples_used,
                               {"sample_counts": counts}, out.wall_time)
    return out


def run_uniform(problems, config: SeoConfig, rng: np.random.Generator) -> SelectionOutcome:
    """Give every system ``floor(T / K)`` samples with the SEO inner engine and pick the best estimate."""
    start = time.perf_counter()
    K = len(problems)
    mode = problems[0].mode if problems else GRADIENT
    _check_mode(problems, mode)
    if K == 1:
        return _trivial(start)
    n = _sample_budget(problems, config) // K
    if n < 1:
        raise ConfigurationError(f"budget too small to give each of {K} systems one sample")
    estimates = {}
    evals = 0
    if mode == GRADIENT:
        points = _start_points(problems, config.initial_points)
        for i, problem in enumerate(problems, start=1):
            res = run_sgd_phase(problem, points[i], n, config.step_coefficient, rng)
            estimates[i] = res.estimate.v_hat
            evals += res.evaluations
    else:
        for i, problem in enumerate(problems, start=1):
            store = SampleStore()
            store.extend(problem.draw(rng, n))
            estimates[i] = solve_saa(problem, store).v_hat
            evals += n
    chosen = argmax_lowest(estimates)
    dropped = tuple(i for i in estimates if i != chosen)
    trace = (EliminationState(1, tuple(range(1, K + 1)), n, estimates, dropped, evals),)
    if evals > config.total_budget:
        raise InvariantViolation(f"used {evals} evaluations with a budget of {config.total_budget}")
    return SelectionOutcome(chosen, trace, evals, n * K, {}, time.perf_counter() - start)


VARIANCE_FLOOR = 1e-12
GAP_FLOOR = 1e-12


def ocba_initial_count(T: int, K: int, d: int, alpha0: float) -> int:
    """``max(2, floor(alpha0 * T / K / d))`` replications per (system, grid point)."""
    return max(2, math.floor(alpha0 * T / K / d))


def ocba_ratios(means: np.ndarray, variances: np.ndarray):
    """Allocation weights for every cell and the index of the incumbent.

    Non-incumbent cells get ``S^2 / (mean_best - mean)^2``; the incumbent gets
    ``S_best * sqrt(sum beta^2 / S^2)`` over the others. Variances and gaps
    below ``1e-12`` are clamped.
    """
    flat_means = means.ravel()
    var = np.maximum(variances.ravel(), VARIANCE_FLOOR)
    b = int(np.argmax(flat_means))
    gap = np.maximum(np.abs(flat_means[b] - flat_means), GAP_FLOOR)
    beta = var / gap**2
    beta[b] = 0.0
    s = float(np.sum(beta**2 / var))
    beta[b] = math.sqrt(var[b]) * math.sqrt(s)
    return beta.reshape(means.shape), b


def run_ocba(problems, config: OcbaConfig, rng: np.random.Generator) -> SelectionOutcome:
    """OCBA on the discretized (system, decision) grid, one replication at a time until ``T``."""
    start = time.perf_counter()
    _check_mode(problems, GRADIENT)
    K, grid, T = len(problems), config.grid, config.total_budget
    d = len(grid)
    if T < 2 * K * d:
        raise ConfigurationError(f"OCBA needs T >= 2*K*d = {2 * K * d}, got {T}")
    n0 = ocba_initial_count(T, K, d, config.initial_fraction)
    counts = np.full((K, d), n0, dtype=np.int64)
    means = np.empty((K, d))
    m2 = np.empty((K, d))
    for i, problem in enumerate(problems):
        for j, x in enumerate(grid):
            obs = np.array([problem.evaluate(x, rng) for _ in range(n0)])
            means[i, j] = obs.mean()
            m2[i, j] = np.sum((obs - means[i, j]) ** 2)
    ell = n0 * K * d
    while ell < T:
        beta, _ = ocba_ratios(means, m2 / (counts - 1))
        i, j = np.unravel_index(int(np.argmax(beta / counts)), counts.shape)
        y = problems[i].evaluate(grid[j], rng)
        counts[i, j] += 1
        delta = y - means[i, j]
        means[i, j] += delta / counts[i, j]
        m2[i, j] += delta * (y - means[i, j])
        ell += 1
    if int(counts.sum()) != ell:
        raise InvariantViolation("allocation counts do not add up to the budget spent")
    b = int(np.argmax(means.ravel()))
    chosen = b // d + 1
    details = {"n0": n0, "counts": tuple(map(tuple, counts.tolist())),
               "best_decision": grid[b % d]}
    return SelectionOutcome(chosen, (), ell, ell, details, time.perf_counter() - start)


POLICIES = ("seo-sgd", "seo-saa", "uniform-sgd", "uniform-saa", "ocba")
POLICY_MODE = {"seo-sgd": GRADIENT, "uniform-sgd": GRADIENT, "ocba": GRADIENT,
               "seo-saa": DATA, "uniform-saa": DATA}


def select(policy: str, problems, config, rng: np.random.Generator) -> SelectionOutcome:
    """Dispatch on a policy name from :data:`POLICIES`."""
    if policy in ("seo-sgd",):
        return run_seo_sgd(problems, config, rng)
    if policy == "seo-saa":
        return run_seo_saa(problems, config, rng)
    if policy in ("uniform-sgd", "uniform-saa"):
        _check_mode(problems, POLICY_MODE[policy])
        return run_uniform(problems, config, rng)
    if policy == "ocba":
        return run_ocba(problems, config, rng)
    raise ValueError(f"unknown policy {policy!r}; choose from {', '.join(POLICIES)}")
