"""Replicated probability-of-correct-selection experiments.

An :class:`ExperimentPlan` names a policy, an instance family, a budget grid
and a replication count. Every replication draws from its own stream derived
from ``(base_seed, replication, role)``, so results do not depend on how the
replications are scheduled across worker threads.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import time
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .problems import (DosageInstance, NewsvendorInstance, QueueingInstance,
                       offgrid_instance, synthetic_gaussian_family)
from .problems import dosage, queueing
from .problems.synthetic import complexity_h2
from .selection import (POLICIES, POLICY_MODE, ConfigurationError, OcbaConfig, SeoConfig,
                        run_uniform, select)

log = logging.getLogger(__name__)

FAMILIES = ("dosage", "newsvendor", "queueing", "synthetic", "offgrid")


def derive_stream(base_seed: int, replication_index: int, role_tag: str) -> np.random.Generator:
    """Independent generator for one (replication, role) pair.

    The tag is hashed to 64 bits and fed with the seed and index into a
    :class:`numpy.random.SeedSequence`.
    """
    if base_seed < 0 or replication_index < 0:
        raise ValueError("seed and replication index must be non-negative")
    tag = int.from_bytes(hashlib.sha256(role_tag.encode()).digest()[:8], "little")
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), int(replication_index), tag]))


@dataclass
class Family:
    """Built systems plus what a policy needs to know about them."""

    name: str
    problems: list
    true_values: np.ndarray | None
    grid: tuple | None = None
    gamma0: float = 1.0
    initial_point: float | None = None
    reference_best: int | None = None

    @property
    def mode(self) -> str:
        return self.problems[0].mode

    @property
    def K(self) -> int:
        return len(self.problems)


@dataclass(frozen=True)
class InstanceSpec:
    family: str
    K: int
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.K < 2:
            raise ConfigurationError("an experiment needs K >= 2 systems")


def build_family(spec: InstanceSpec, rng: np.random.Generator | None = None) -> Family:
    """Instantiate the systems of ``spec``; ``rng`` draws random instance parameters (dosage)."""
    p = dict(spec.params)
    K = spec.K
    if spec.family == "dosage":
        if "perturbations" in p:
            u = tuple(float(v) for v in p["perturbations"])
            if len(u) != K:
                raise ConfigurationError(f"dosage: {len(u)} perturbations for K={K}")
            inst = DosageInstance(u, noise_sd=p.get("noise_sd", 1.0))
        else:
            if rng is None:
                rng = np.random.default_rng(p.get("instance_seed", 0))
            inst = DosageInstance.random(K, rng, spread=p.get("spread", 0.1), noise_sd=p.get("noise_sd", 1.0))
        return Family("dosage", inst.problems(), inst.true_values(), dosage.OCBA_GRID,
                      gamma0=dosage.GAMMA0, initial_point=dosage.START_DOSE)
    if spec.family == "newsvendor":
        if "rates" in p:
            inst = NewsvendorInstance(tuple(p["prices"]), tuple(p["costs"]), tuple(p["rates"]))
        else:
            inst = NewsvendorInstance.standard(K)
        if inst.K != K:
            raise ConfigurationError(f"newsvendor: instance has {inst.K} products for K={K}")
        return Family("newsvendor", inst.problems(), inst.true_values())
    if spec.family == "queueing":
        known = {k: p[k] for k in QueueingInstance.__dataclass_fields__ if k in p and k != "K"}
        inst = QueueingInstance(K=K, **known)
        return Family("queueing", inst.problems(), None, queueing.OCBA_GRID, gamma0=inst.gamma0,
                      initial_point=queueing.START_PRICE, reference_best=p.get("reference_best"))
    if spec.family == "synthetic":
        gaps = p.get("gaps")
        if gaps is None:
            gaps = [None] + [p.get("gap", 0.5)] * (K - 1)
        fam = synthetic_gaussian_family(K, gaps, sd=p.get("sd", 1.0), curvature=p.get("curvature", 1.0))
        box = fam[0].box
        grid = tuple(np.linspace(box.lower, box.upper, int(p.get("grid_points", 11))).tolist())
        return Family("synthetic", list(fam), np.array([q.true_value() for q in fam]), grid,
                      gamma0=p.get("gamma0", 1.0), initial_point=p.get("initial_point", 1.0))
    # offgrid
    grid = tuple(p.get("grid", queueing.OCBA_GRID))
    fam = offgrid_instance(grid, K, slope=p.get("slope", 10.0), sd=p.get("sd", 1.0), offset=p.get("offset", 1.0))
    return Family("offgrid", list(fam), np.array([q.true_value() for q in fam]), fam.grid,
                  gamma0=p.get("gamma0", 0.05), initial_point=p.get("initial_point"))


@dataclass(frozen=True)
class InstanceDiagnostics:
    values: tuple
    gaps: tuple
    h2: float
    best: int

    def rows(self):
        return [(i, v, g) for i, (v, g) in enumerate(zip(self.values, self.gaps), start=1)]


def diagnostics(family_or_values, min_gap: float = 1e-6) -> InstanceDiagnostics | None:
    """True values, gaps to the best and the complexity ``max_{i>1} i / gap_(i)^2``.

    Returns ``None`` when no true-value oracle exists. Raises
    :class:`ConfigurationError` when the best system is not unique by at least
    ``min_gap``.
    """
    values = family_or_values.true_values if isinstance(family_or_values, Family) else family_or_values
    if values is None:
        return None
    values = np.asarray(values, dtype=float)
    order = np.argsort(-values, kind="stable")
    top, runner = values[order[0]], values[order[1]]
    if not top - runner >= min_gap or top == runner:
        raise ConfigurationError(
            f"no unique best system: top two values {top:.10g} and {runner:.10g} differ by less than {min_gap}")
    gaps = top - values
    return InstanceDiagnostics(tuple(values.tolist()), tuple(gaps.tolist()),
                               float(complexity_h2(gaps[order])), int(order[0]) + 1)


@dataclass(frozen=True)
class PfsEstimate:
    T: int
    pcs: float
    stderr: float
    R: int
    mean_evaluations: float
    wall_time: float = field(default=0.0, compare=False)

    @property
    def pfs(self) -> float:
        return 1.0 - self.pcs


def pcs_estimate(T: int, correct, evaluations, wall_time: float = 0.0) -> PfsEstimate:
    correct = np.asarray(correct, dtype=bool)
    R = correct.size
    pcs = float(correct.mean())
    return PfsEstimate(T, pcs, math.sqrt(pcs * (1 - pcs) / R), R, float(np.mean(evaluations)), wall_time)


@dataclass(frozen=True)
class ExperimentPlan:
    """A policy run over a budget grid on one instance family.

    ``policy_config`` keys: ``gamma0``, ``initial_point``, ``warm_start``,
    ``evals_per_sample`` (SEO/uniform), ``alpha0`` and ``grid`` (OCBA),
    ``pilot_budget`` and ``pilots`` (reference best when no oracle exists).
    """

    policy: str
    instance: InstanceSpec
    budgets: tuple
    replications: int = 1000
    base_seed: int = 0
    policy_config: Mapping = field(default_factory=dict)
    regenerate_instance: bool = False
    min_gap: float = 1e-6

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ConfigurationError(f"unknown policy {self.policy!r}; choose from {', '.join(POLICIES)}")
        budgets = tuple(int(b) for b in self.budgets)
        object.__setattr__(self, "budgets", budgets)
        if not budgets:
            raise ConfigurationError("budget grid is empty")
        if any(b <= a for a, b in zip(budgets, budgets[1:])):
            raise ConfigurationError("budget grid must be strictly increasing")
        if self.replications < 1:
            raise ConfigurationError("replications must be at least 1")
        if self.base_seed < 0:
            raise ConfigurationError("base_seed must be non-negative")


def check_compatible(policy: str, family: Family) -> None:
    if POLICY_MODE[policy] != family.mode:
        raise ConfigurationError(f"policy {policy!r} cannot run on {family.mode}-mode family {family.name!r}")
    if policy == "ocba" and family.grid is None:
        raise ConfigurationError(f"family {family.name!r} has no decision grid for OCBA")


def policy_config(plan: ExperimentPlan, family: Family, T: int):
    c = dict(plan.policy_config)
    if plan.policy == "ocba":
        return OcbaConfig(T, tuple(c.get("grid", family.grid)), c.get("alpha0", 0.2))
    return SeoConfig(T, c.get("gamma0", family.gamma0), c.get("initial_point", family.initial_point),
                     c.get("evals_per_sample"), c.get("warm_start", True))


def pilot_reference_best(family: Family, budget: int, base_seed: int, pilots: int = 3, threads: int = 1) -> int:
    """Best system by massive-budget uniform allocation; all pilots must agree."""
    cfg = SeoConfig(budget, family.gamma0, family.initial_point)

    def one(k):
        return run_uniform(family.problems, cfg, derive_stream(base_seed, k, "pilot")).chosen

    picks = _map(one, range(pilots), threads)
    if len(set(picks)) != 1:
        raise ConfigurationError(f"pilot runs disagree on the best system: {picks}")
    return picks[0]


def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("SBOS_THREADS", "1"))
    if threads == 0:
        threads = os.cpu_count() or 1
    return max(1, threads)


def true_best(plan: ExperimentPlan, family: Family, threads: int = 1) -> int:
    diag = diagnostics(family, plan.min_gap)
    if diag is not None:
        return diag.best
    if family.reference_best is not None:
        return int(family.reference_best)
    budget = int(plan.policy_config.get("pilot_budget", 100 * max(plan.budgets)))
    best = pilot_reference_best(family, budget, plan.base_seed, int(plan.policy_config.get("pilots", 3)), threads)
    log.info("pilot reference best for %s: system %d", family.name, best)
    return best


def run_experiment(plan: ExperimentPlan, threads: int | None = 1) -> list[PfsEstimate]:
    """PCS with binomial standard error at every budget of the plan."""
    threads = resolve_threads(threads)
    if plan.regenerate_instance:
        family = None
        check_compatible(plan.policy, build_family(plan.instance, derive_stream(plan.base_seed, 0, "instance")))
    else:
        family = build_family(plan.instance, instance_stream(plan))
        check_compatible(plan.policy, family)
        best = true_best(plan, family, threads)

    results = []
    for T in plan.budgets:
        tag = f"{plan.policy}:T={T}"
        start = time.perf_counter()

        def replicate(r, T=T, tag=tag):
            fam, target = family, None
            if fam is None:
                fam = build_family(plan.instance, derive_stream(plan.base_seed, r, "instance"))
                target = true_best(plan, fam)
            cfg = policy_config(plan, fam, T)
            out = select(plan.policy, fam.problems, cfg, derive_stream(plan.base_seed, r, tag))
            return out.chosen == (best if target is None else target), out.evaluations_used

        outcomes = _map(replicate, range(plan.replications), threads)
        correct = [c for c, _ in outcomes]
        evals = [e for _, e in outcomes]
        results.append(pcs_estimate(T, correct, evals, time.perf_counter() - start))
    return results


def instance_stream(plan: ExperimentPlan):
    seed = plan.instance.params.get("instance_seed")
    if seed is not None:
        return np.random.default_rng(int(seed))
    return derive_stream(plan.base_seed, 0, "instance")
