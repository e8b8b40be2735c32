import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sbos.inner import FeasibleBox
from sbos.problems import (DosageInstance, GaussianQuadratic, NewsvendorInstance, NewsvendorProblem,
                           QueueingInstance, audit_log, complexity_h2, dosage_sample, dosage_true_value,
                           offgrid_instance, newsvendor_draw, newsvendor_true_value, nhpp_arrivals,
                           queueing_sample, run_tandem, simulate_queueing, synthetic_gaussian_family)
from sbos.problems.dosage import A_STAR, B_STAR, center_optimum, optimal_dose
from sbos.problems.newsvendor import empirical_objective, saa_quantile


# -- dosage ---------------------------------------------------------------

def test_dosage_center_vertex():
    inst = DosageInstance((0.0,), noise_sd=0.0)
    assert dosage_true_value(inst, 1) == pytest.approx(12.347222, abs=1e-6)
    assert optimal_dose() == pytest.approx(575 / 18)
    assert inst.problem(1).mean(575 / 18) == pytest.approx(12.347222, abs=1e-6)
    assert center_optimum() == pytest.approx(12.347222, abs=1e-6)


def test_dosage_true_value_scales_linearly():
    inst = DosageInstance((0.1, 0.0, -0.1))
    assert dosage_true_value(inst, 1) == pytest.approx(13.581944, abs=1e-6)
    assert inst.true_values() == pytest.approx([13.5819444, 12.3472222, 11.1125], abs=1e-6)


def test_dosage_optimizer_independent_of_perturbation():
    for u in (-0.09, 0.0, 0.07):
        a, b, _ = DosageInstance((u,)).coefficients(1)
        assert -b / (2 * a) == pytest.approx(31.9444, abs=1e-4)


def test_dosage_rejects_non_positive_curvature():
    with pytest.raises(ValueError):
        DosageInstance((-1.0,))


def test_dosage_noiseless_backward_difference():
    inst = DosageInstance((0.0,), noise_sd=0.0)
    value, grad = dosage_sample(inst, 1, 25.0, seed=0)
    assert value == pytest.approx(-(A_STAR * 625 + B_STAR * 25 - 5))
    assert grad == pytest.approx(-(2 * A_STAR * 24.75 + B_STAR))
    assert grad == pytest.approx(0.1036, abs=1e-12)


def test_dosage_fd_mean_and_variance():
    inst = DosageInstance((0.0,))
    g = np.array([dosage_sample(inst, 1, 25.0, seed=s)[1] for s in range(20000)])
    se = g.std(ddof=1) / math.sqrt(g.size)
    assert abs(g.mean() - 0.1036) < 3 * se
    var_se = 8 * math.sqrt(2 / g.size)
    assert abs(g.var(ddof=1) - 8) < 4 * var_se


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.1, 0.1))
def test_dosage_oracle_matches_grid_search(u):
    inst = DosageInstance((u,), noise_sd=0.0)
    q = np.arange(0, 50_000 + 1) / 1000
    a, b, c = inst.coefficients(1)
    brute = float(np.max(-(a * q * q + b * q + c)))
    assert abs(dosage_true_value(inst, 1) - brute) < 1e-6


# -- newsvendor -----------------------------------------------------------

def test_newsvendor_small_oracle():
    inst = NewsvendorInstance((2.0,), (1.0,), (1.0,))
    assert inst.problem(1).optimal_order() == 1
    assert newsvendor_true_value(inst, 1) == pytest.approx(2 * (1 - math.exp(-1)) - 1, abs=1e-15)
    assert newsvendor_true_value(inst, 1) == pytest.approx(0.26424, abs=1e-5)


def test_newsvendor_degenerate_fractile():
    p = NewsvendorProblem(1.0 + 1e-12, 1.0, 3.0)
    assert p.optimal_order() == 0
    assert p.true_value() == 0.0


def test_newsvendor_draw_moments():
    inst = NewsvendorInstance.standard()
    rng = np.random.default_rng(4)
    x = np.array([newsvendor_draw(inst, 1, rng) for _ in range(10000)])
    assert inst.rates[0] == 244
    assert abs(x.mean() - 244) < 3 * math.sqrt(244 / x.size)
    # var of the sample variance for Poisson: (mu4 - sigma^4 (n-3)/(n-1)) / n, mu4 = lam(1 + 3 lam)
    lam, n = 244.0, x.size
    var_se = math.sqrt((lam * (1 + 3 * lam) - lam**2 * (n - 3) / (n - 1)) / n)
    assert abs(x.var(ddof=1) - lam) < 3 * var_se


def test_newsvendor_small_rate_gives_zero():
    rng = np.random.default_rng(0)
    p = NewsvendorProblem(2.0, 1.0, 1e-9)
    assert np.all(p.draw(rng, 1000) == 0)


def decimal_newsvendor_values(price, cost, rate, q_max, support=2000):
    """``p E[min(q, X)] - c q`` for ``q = 0..q_max`` in 50-digit decimal arithmetic."""
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


def test_newsvendor_standard_instance_oracle_vs_brute_force():
    inst = NewsvendorInstance.standard()
    for i in range(1, 17):
        p, c, lam = inst.prices[i - 1], inst.costs[i - 1], inst.rates[i - 1]
        values = decimal_newsvendor_values(p, c, lam, int(lam + 10 * math.sqrt(lam)))
        best = max(range(len(values)), key=values.__getitem__)
        assert inst.problem(i).optimal_order() == best
        assert abs(newsvendor_true_value(inst, i) - float(values[best])) < 1e-10


def test_newsvendor_oracle_vs_monte_carlo():
    inst = NewsvendorInstance.standard()
    rng = np.random.default_rng(12)
    for i in range(1, 17):
        pr = inst.problem(i)
        q = pr.optimal_order()
        x = rng.poisson(pr.rate, size=100_000)
        y = pr.price * np.minimum(q, x) - pr.cost * q
        se = y.std(ddof=1) / math.sqrt(y.size)
        assert abs(y.mean() - pr.true_value()) < 3 * se


def test_newsvendor_standard_best_is_system_14():
    vals = NewsvendorInstance.standard().true_values()
    assert int(np.argmax(vals)) + 1 == 14


samples = st.lists(st.integers(0, 30), min_size=1, max_size=25)


@settings(max_examples=200, deadline=None)
@given(samples, st.floats(1.5, 10), st.floats(0.05, 0.95))
def test_saa_closed_form_matches_exhaustive_search(xs, price, frac):
    cost = price * frac
    x = np.array(xs, dtype=float)
    pr = NewsvendorProblem(price, cost, 5.0)
    brute = max(empirical_objective(q, x, price, cost) for q in range(0, 31))
    assert pr.solve_saa(x) == pytest.approx(brute, abs=1e-9)
    assert saa_quantile(x, price, cost) in set(xs)


def test_saa_consistency():
    # |v_hat(1e4) - v| < |v_hat(1e2) - v| for at least 95 of 100 seed pairs
    inst = NewsvendorInstance.standard()
    pr = inst.problem(1)
    v = pr.true_value()
    wins = 0
    for s in range(100):
        small = pr.solve_saa(pr.draw(np.random.default_rng([s, 0]), 100))
        large = pr.solve_saa(pr.draw(np.random.default_rng([s, 1]), 10_000))
        wins += abs(large - v) < abs(small - v)
    assert wins >= 95


# -- queueing -------------------------------------------------------------

def test_queueing_defaults():
    inst = QueueingInstance(K=8)
    assert inst.lambda0 == 1.0 and inst.horizon == 2000.0
    assert inst.gamma0 == pytest.approx(1e-3)
    assert inst.mu1 == pytest.approx(math.log(80))
    assert inst.mu2 == pytest.approx(math.log(16))
    assert inst.servers(3) == (3, 6)
    with pytest.raises(ValueError):
        inst.servers(0)
    with pytest.raises(ValueError):
        inst.servers(9)


def test_queueing_no_arrivals():
    inst = QueueingInstance(K=4, lambda0=0.0)
    out = simulate_queueing(inst, 2, 0.3, seed=1)
    assert (out.completed, out.total_wait, out.reward, out.entered) == (0, 0.0, 0.0, 0)
    assert queueing_sample(inst, 2, 0.5, seed=1) == (0.0, 0.0)


def test_queueing_price_one_is_empty():
    inst = QueueingInstance(K=4)
    for s in range(20):
        out = simulate_queueing(inst, 2, 1.0, seed=s)
        assert out.entered == 0 and out.reward == 0.0


def test_single_entrant_no_contention():
    done, gone, wait, _ = run_tandem([3.0], [2.0], [5.0], [math.inf], 1, 1)
    assert (done, gone, wait) == (1, 0, 0.0)


def test_tandem_hand_worked_example():
    # one server per station; customer 2 waits 1 at station one, abandons customer 3 (patience 0.5)
    arrivals = [0.0, 1.0, 1.5]
    s1, s2 = [2.0, 1.0, 1.0], [0.5, 3.0, 1.0]
    done, gone, wait, recs = run_tandem(arrivals, s1, s2, [9.0, 9.0, 0.5], 1, 1, log=True)
    assert (done, gone) == (2, 1)
    # customer 1: 0 -> [0,2] -> [2,2.5]; customer 2: waits 1, [2,3] -> [3,6]; customer 3: leaves after 0.5
    assert wait == pytest.approx(1.0 + 0.5)
    assert recs[1].start2 == 3.0 and recs[1].end2 == 6.0
    assert audit_log(recs, 1, 1) == []
    _, _, wait_excl, _ = run_tandem(arrivals, s1, s2, [9.0, 9.0, 0.5], 1, 1, count_abandoned_wait=False)
    assert wait_excl == pytest.approx(1.0)


def test_queueing_crn_determinism():
    inst = QueueingInstance(K=4)
    assert simulate_queueing(inst, 2, 0.4, seed=9) == simulate_queueing(inst, 2, 0.4, seed=9)
    assert queueing_sample(inst, 2, 0.4, seed=9) == queueing_sample(inst, 2, 0.4, seed=9)


def test_queueing_crn_nests_entrants():
    inst = QueueingInstance(K=4)
    for s in range(10):
        hi = simulate_queueing(inst, 2, 0.5, seed=s)
        lo = simulate_queueing(inst, 2, 0.47, seed=s)
        assert lo.entered >= hi.entered


def test_queueing_conservation_audit():
    inst = QueueingInstance(K=3, horizon=200.0, lambda0=2.0)
    for s in range(30):
        x = 1 + s % 3
        out = simulate_queueing(inst, x, 0.2, seed=s, log=True)
        assert out.entered == out.completed + out.abandoned
        assert audit_log(out.log, *inst.servers(x)) == []


def test_thinning_envelope_never_exceeded():
    # the envelope rate is lambda0/4 = the peak of the arrival intensity
    inst = QueueingInstance(K=2)
    t = np.linspace(0, inst.horizon, 10001)
    assert inst.rate(t).max() == pytest.approx(inst.lambda0 / 4)


@pytest.mark.parametrize("p", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_thinning_mean_count(p):
    rng = np.random.default_rng(int(p * 100))
    counts = np.array([nhpp_arrivals(1.0, 2000.0, 1 - p, rng).size for _ in range(3000)])
    expected = (1 - p) * 2000 / 6
    if p == 1.0:
        assert counts.max() == 0
        return
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - expected) < 3 * se


def test_arrivals_sorted_within_horizon():
    a = nhpp_arrivals(1.0, 2000.0, 1.0, np.random.default_rng(3))
    assert np.all(np.diff(a) > 0) and a.min() >= 0 and a.max() <= 2000


def test_queueing_fd_matches_backward_difference_of_demand_term():
    # c = 0 and ample fast servers: reward = p * entrants, E = p(1-p) * 1000/3,
    # and the backward difference has mean (1 - 2p + delta) * 1000/3
    inst = QueueingInstance(K=1000, mu1=0.0, mu2=0.0, patience_shape=10.0, wait_penalty=0.0)
    p, delta = 0.5, 0.03
    g = np.array([queueing_sample(inst, 500, p, delta, seed=s)[1] for s in range(400)])
    target = (1 - 2 * p + delta) * 2000 / 6
    se = g.std(ddof=1) / math.sqrt(g.size)
    assert abs(g.mean() - target) < 3 * se


# -- synthetic ------------------------------------------------------------

def test_h2_example():
    fam = synthetic_gaussian_family(4, [None, 0.5, 0.5, 1.0], sd=1.0)
    assert fam.h2 == pytest.approx(12.0)
    assert [p.true_value() for p in fam] == [0.0, -0.5, -0.5, -1.0]


@given(st.lists(st.floats(0.01, 5), min_size=1, max_size=20))
def test_h2_brute_force(gaps):
    ranked = [0.0] + sorted(gaps)
    assert complexity_h2(ranked) == max(i / ranked[i - 1] ** 2 for i in range(2, len(ranked) + 1))


def test_synthetic_rejects_non_positive_gap():
    with pytest.raises(ValueError):
        synthetic_gaussian_family(3, [None, 0.5, 0.0], sd=1.0)


def test_gaussian_quadratic_oracle():
    p = GaussianQuadratic(2.0, sd=0.0, center=1.0, curvature=3.0)
    assert p.true_value() == p.mean(1.0) == 2.0
    value, grad, evals = p.sample(0.0, np.random.default_rng(0))
    assert (value, grad, evals) == (-1.0, 6.0, 1)


def test_offgrid_construction():
    grid = [round(0.1 * k, 10) for k in range(1, 11)]
    fam = offgrid_instance(grid)
    one, two = fam[0], fam[1]
    for x in grid:
        assert one.mean(x) == pytest.approx(two.mean(x), abs=1e-12)
    assert one.true_value() > two.true_value()
    assert one.true_value() == pytest.approx(0.0)
    assert two.true_value() == pytest.approx(-0.5)
    assert [p.true_value() for p in fam[2:]] == pytest.approx([-1.0, -2.0])


def test_offgrid_peak_sits_between_grid_points():
    fam = offgrid_instance([0.0, 1.0, 3.0, 4.0], K=2, box=FeasibleBox(0.0, 4.0))
    assert fam.plateau == (1.0, 3.0)
    assert fam[0].peak == 2.0
