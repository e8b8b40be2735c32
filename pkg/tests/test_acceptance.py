"""End-to-end acceptance checks, one test per criterion.

Each test attaches a one-line summary via ``record_property("detail", ...)``;
``conftest.py`` prints a PASS/FAIL line per criterion after the run.
Thresholds marked "frozen" came from pilot runs with base seeds different
from the ones used here.
"""

import math
import time
from decimal import Decimal, getcontext

import numpy as np
import pytest

from sbos.harness import ExperimentPlan, InstanceSpec, derive_stream, run_experiment
from sbos.inner import run_sgd_phase
from sbos.problems import (DosageInstance, GaussianQuadratic, NewsvendorInstance, NewsvendorProblem,
                           QueueingInstance, audit_log, simulate_queueing)
from sbos.problems.newsvendor import empirical_objective
from sbos.report import format_csv, result_rows
from sbos.selection import num_phases, phase_schedule

# frozen from pilots (seeds 901-903): SEO PCS at T=48000 was 0.762 +- 0.019 on the dosage
# instance and 1.000 on the off-grid instance; thresholds sit at least three standard errors below
DOSAGE_BUDGETS = (8000, 12000, 16000, 24000, 32000, 48000)
DOSAGE_SEO_FINAL_PCS = 0.70
OFFGRID_SEO_PCS = 0.90
OFFGRID_OCBA_MAX_PCS = 0.55


def test_criterion_1_budget_halving(record_property):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    checked = 0
    for K in range(2, 257):
        L = num_phases(K)
        for T in rng.integers(L * K, 200 * L * K, size=100):
            T = int(T)
            schedule = phase_schedule(T, K)
            assert len(schedule) == L
            size, used = K, 0
            for active, budget in schedule:
                assert active == size
                assert budget == T // (L * active)
                used += active * budget
                size //= 2
            assert size == 1
            assert used <= T
            checked += 1
    elapsed = time.perf_counter() - start
    record_property("detail", f"{checked} (K, T) pairs, {elapsed:.2f}s (limit 1s)")
    assert elapsed < 1.0


def test_criterion_2_sgd_rate(record_property):
    start = time.perf_counter()
    problem = GaussianQuadratic(0.0, sd=1.0)
    budgets = (100, 1000, 10000)
    medians = []
    for T in budgets:
        errors = [abs(run_sgd_phase(problem, 1.0, T, 1.0, derive_stream(7, r, f"rate:{T}")).estimate.v_hat)
                  for r in range(200)]
        medians.append(float(np.median(errors)))
    slope = float(np.polyfit(np.log(budgets), np.log(medians), 1)[0])
    elapsed = time.perf_counter() - start
    record_property("detail", f"medians {[round(m, 4) for m in medians]}, slope {slope:.3f} "
                              f"(target [-0.65, -0.35]), {elapsed:.1f}s")
    assert -0.65 <= slope <= -0.35
    assert elapsed < 30


def _decimal_newsvendor(price, cost, rate, q_max, support=2000):
    getcontext().prec = 50
    lam = Decimal(repr(rate))
    pmf, cdf, sales = (-lam).exp(), Decimal(0), Decimal(0)
    tail = []
    for k in range(support):
        cdf += pmf
        tail.append(1 - cdf)
        pmf = pmf * lam / (k + 1)
    p, c = Decimal(repr(price)), Decimal(repr(cost))
    values = [Decimal(0)]
    for q in range(1, q_max + 1):
        sales += tail[q - 1]
        values.append(p * sales - c * q)
    return values


def test_criterion_3_oracle_equivalence(record_property):
    start = time.perf_counter()
    rng = np.random.default_rng(33)
    grid = np.arange(0, 50_001) / 1000
    worst_dosage = 0.0
    for _ in range(100):
        inst = DosageInstance.random(1, rng, noise_sd=0.0)
        a, b, c = inst.coefficients(1)
        brute = float(np.max(-(a * grid * grid + b * grid + c)))
        worst_dosage = max(worst_dosage, abs(inst.true_values()[0] - brute))
    assert worst_dosage < 1e-6

    nv = NewsvendorInstance.standard()
    worst_nv = 0.0
    for i in range(1, 17):
        p, c, lam = nv.prices[i - 1], nv.costs[i - 1], nv.rates[i - 1]
        values = _decimal_newsvendor(p, c, lam, int(lam + 10 * math.sqrt(lam)))
        best = max(range(len(values)), key=values.__getitem__)
        assert nv.problem(i).optimal_order() == best
        worst_nv = max(worst_nv, abs(nv.problem(i).true_value() - float(values[best])))
    assert worst_nv < 1e-10

    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 21))
        x = rng.integers(0, 40, size=n).astype(float)
        price = float(rng.uniform(1.5, 10))
        cost = float(price * rng.uniform(0.05, 0.95))
        closed = NewsvendorProblem(price, cost, 1.0).solve_saa(x)
        exhaustive = max(empirical_objective(q, x, price, cost) for q in np.unique(np.append(x, 0.0)))
        mismatches += abs(closed - exhaustive) > 1e-9 * max(1.0, abs(exhaustive))
    elapsed = time.perf_counter() - start
    record_property("detail", f"dosage max err {worst_dosage:.1e}, newsvendor max err {worst_nv:.1e}, "
                              f"SAA mismatches {mismatches}/1000, {elapsed:.1f}s")
    assert mismatches == 0
    assert elapsed < 10


def test_criterion_4_queueing_statistics(record_property):
    start = time.perf_counter()
    inst = QueueingInstance(K=4)
    counts = np.array([simulate_queueing(inst, 2, 0.0, derive_stream(44, r, "entrants")).entered
                       for r in range(10_000)])
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    z = (counts.mean() - 1000 / 3) / se
    assert abs(z) < 3
    for r in range(10_000):
        assert simulate_queueing(inst, 2, 1.0, derive_stream(44, r, "closed")).entered == 0
    small = QueueingInstance(K=3, horizon=300.0, lambda0=1.5)
    failures = 0
    for r in range(100):
        x = 1 + r % 3
        out = simulate_queueing(small, x, 0.1, derive_stream(44, r, "audit"), log=True)
        problems = audit_log(out.log, *small.servers(x))
        failures += bool(problems) or out.entered != out.completed + out.abandoned
    elapsed = time.perf_counter() - start
    record_property("detail", f"mean entrants {counts.mean():.2f} (z = {z:+.2f} vs 333.33), "
                              f"audit failures {failures}/100, {elapsed:.0f}s")
    assert failures == 0
    assert elapsed < 120


def test_criterion_5_dosage_seo_vs_uniform(record_property):
    start = time.perf_counter()
    spec = InstanceSpec("dosage", 16, {"instance_seed": 0})
    seo = run_experiment(ExperimentPlan("seo-sgd", spec, DOSAGE_BUDGETS, 500, 5))
    uni = run_experiment(ExperimentPlan("uniform-sgd", spec, DOSAGE_BUDGETS, 500, 5))
    elapsed = time.perf_counter() - start
    within = all(s.pcs >= u.pcs - 2 * math.hypot(s.stderr, u.stderr) for s, u in zip(seo, uni))
    strictly = sum(s.pcs > u.pcs for s, u in zip(seo, uni))
    record_property("detail", "SEO " + " ".join(f"{s.pcs:.3f}" for s in seo)
                    + " | uniform " + " ".join(f"{u.pcs:.3f}" for u in uni)
                    + f" | strictly greater at {strictly}/6, final SEO >= {DOSAGE_SEO_FINAL_PCS}, "
                    + f"{elapsed:.0f}s")
    assert within
    assert strictly >= 3
    assert seo[-1].pcs >= DOSAGE_SEO_FINAL_PCS
    assert elapsed < 600


def test_criterion_6_offgrid_ocba(record_property):
    start = time.perf_counter()
    spec = InstanceSpec("offgrid", 4, {})
    ocba = run_experiment(ExperimentPlan("ocba", spec, (2000,), 1000, 6))[0]
    seo = run_experiment(ExperimentPlan("seo-sgd", spec, (2000,), 1000, 6))[0]
    elapsed = time.perf_counter() - start
    record_property("detail", f"OCBA PCS {ocba.pcs:.3f} (<= {OFFGRID_OCBA_MAX_PCS}), "
                              f"SEO PCS {seo.pcs:.3f} (>= {OFFGRID_SEO_PCS}), {elapsed:.0f}s")
    assert ocba.pcs <= OFFGRID_OCBA_MAX_PCS
    assert seo.pcs >= OFFGRID_SEO_PCS
    assert elapsed < 300


def test_criterion_7_pfs_decay(record_property):
    start = time.perf_counter()
    spec = InstanceSpec("synthetic", 8, {"gaps": [None, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]})
    est = run_experiment(ExperimentPlan("seo-sgd", spec, (200, 400, 800), 2000, 7))
    elapsed = time.perf_counter() - start
    ok = all(b.pfs <= a.pfs + 2 * math.hypot(a.stderr, b.stderr) for a, b in zip(est, est[1:]))
    record_property("detail", "PFS " + " -> ".join(f"{e.pfs:.4f}+-{e.stderr:.4f}" for e in est)
                    + f", {elapsed:.0f}s")
    assert ok
    assert elapsed < 300


PLANS = [
    ExperimentPlan("seo-sgd", InstanceSpec("dosage", 8, {"instance_seed": 3}), (800, 1600), 60, 8),
    ExperimentPlan("uniform-sgd", InstanceSpec("synthetic", 8), (100, 200), 60, 8),
    ExperimentPlan("ocba", InstanceSpec("offgrid", 4), (400,), 40, 8),
    ExperimentPlan("seo-saa", InstanceSpec("newsvendor", 16), (800, 1600), 60, 8),
    ExperimentPlan("uniform-saa", InstanceSpec("newsvendor", 16), (800,), 60, 8,
                   regenerate_instance=True),
]


def _csv_without_wall_time(plan, estimates):
    text = format_csv(result_rows("determinism", plan, estimates))
    return "\n".join(line.rsplit(",", 1)[0] for line in text.splitlines()).encode()


def test_criterion_8_determinism(record_property):
    identical = 0
    for plan in PLANS:
        serial = _csv_without_wall_time(plan, run_experiment(plan, threads=1))
        threaded = _csv_without_wall_time(plan, run_experiment(plan, threads=8))
        identical += serial == threaded
    record_property("detail", f"{identical}/{len(PLANS)} plans byte-identical (serial vs 8 threads)")
    assert identical == len(PLANS)


@pytest.mark.parametrize("plan", PLANS[:1])
def test_csv_has_wall_time_as_last_column(plan):
    text = format_csv(result_rows("x", plan, run_experiment(plan)))
    assert text.splitlines()[0].endswith(",wall_time_s")
