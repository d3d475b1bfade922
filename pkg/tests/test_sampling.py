from itertools import product

import numpy as np
import pytest

from dsfm.core import Decomposition
from dsfm.generators import gen_karate
from dsfm.oracles import EdgeCut
from dsfm.sampling import (PlanError, greedy_balanced_partition, lower_bound, sample_group,
                           theta_monte_carlo, theta_uniform, uniform_plan)


@pytest.fixture
def cycle():
    return Decomposition(4, [EdgeCut(0, 1), EdgeCut(1, 2), EdgeCut(2, 3), EdgeCut(0, 3)])


def test_theta_uniform_cases(cycle):
    np.testing.assert_array_equal(theta_uniform(cycle.profile, 4, 1), np.ones(4))
    np.testing.assert_array_equal(theta_uniform(cycle.profile, 4, 4), cycle.profile.mu)
    d = Decomposition(4, [EdgeCut(0, 1), EdgeCut(1, 2), EdgeCut(2, 3)])
    assert d.profile.mu[1] == 2
    assert theta_uniform(d.profile, 3, 2)[1] == pytest.approx(1.5)
    with pytest.raises(PlanError):
        theta_uniform(cycle.profile, 4, 5)


def test_theta_uniform_norm_formula(rng):
    d = gen_karate()
    for K in (1, 5, 8, 40, 78):
        plan = uniform_plan(d, K)
        expect = (K - 1) / 77 * 156 + (78 - K) / 77 * 34
        assert plan.theta_one_inf == pytest.approx(expect)


def test_greedy_partition_cycle(cycle):
    plan = greedy_balanced_partition(cycle, 2)
    assert plan.parts == ((0, 2), (1, 3))
    assert plan.theta_one_inf == 4.0
    assert uniform_plan(cycle, 2).theta_one_inf == pytest.approx(16 / 3)
    best = min(_partition_value(cycle, labels) for labels in product(range(2), repeat=4)
               if labels.count(0) == 2)
    assert best == plan.theta_one_inf


def _partition_value(d, labels):
    mu = np.zeros((2, d.n))
    for r, f in enumerate(d.components):
        mu[labels[r], f.support] += 1
    return mu.max(axis=0).sum()


def test_partition_extremes(cycle):
    one = greedy_balanced_partition(cycle, 1)
    assert len(one.parts) == 4 and np.all(one.theta.data == 1) and one.theta_one_inf == 4
    full = greedy_balanced_partition(cycle, 4)
    assert full.parts == ((0, 1, 2, 3),)
    assert full.theta_one_inf == cycle.profile.mu_l1


def test_partition_sizes_balanced():
    d = gen_karate()
    for K in (3, 7, 8, 20, 77):
        plan = greedy_balanced_partition(d, K)
        sizes = sorted(len(p) for p in plan.parts)
        assert len(plan.parts) == -(-78 // K)
        assert sizes[-1] - sizes[0] <= 1 and sizes[-1] <= K
        assert sorted(r for p in plan.parts for r in p) == list(range(78))


def test_theta_entries_bounded(rng):
    d = gen_karate()
    mu = d.layout.gather(d.profile.mu)
    for K in (2, 8, 30):
        for plan in (uniform_plan(d, K), greedy_balanced_partition(d, K)):
            assert np.all(plan.theta.data >= 1 - 1e-12)
            assert np.all(plan.theta.data <= mu + 1e-12)


def test_uniform_full_group(cycle):
    plan = uniform_plan(cycle, 4)
    rng = np.random.default_rng(0)
    np.testing.assert_array_equal(sample_group(plan, rng), np.arange(4))


def _within_3sigma(counts, p, n):
    sigma = np.sqrt(n * p * (1 - p))
    return np.all(np.abs(counts - n * p) <= 3 * sigma)


def test_sampling_frequencies():
    d = Decomposition(3, [EdgeCut(0, 1), EdgeCut(1, 2), EdgeCut(0, 2)])
    plan = uniform_plan(d, 1)
    rng = np.random.default_rng(1)
    n = 100_000
    counts = np.bincount([sample_group(plan, rng)[0] for _ in range(n)], minlength=3)
    assert _within_3sigma(counts, 1 / 3, n)
    kar = gen_karate()
    part = greedy_balanced_partition(kar, 8)
    first = {p[0]: i for i, p in enumerate(part.parts)}
    counts = np.bincount([first[sample_group(part, rng)[0]] for _ in range(n)],
                         minlength=len(part.parts))
    assert _within_3sigma(counts, 1 / len(part.parts), n)


def test_uniform_groups_are_uniform_subsets():
    d = Decomposition(5, [EdgeCut(i, i + 1) for i in range(4)] + [EdgeCut(0, 4)])
    plan = uniform_plan(d, 2)
    rng = np.random.default_rng(2)
    n = 60_000
    seen = {}
    for _ in range(n):
        g = tuple(sample_group(plan, rng))
        assert len(set(g)) == 2
        seen[g] = seen.get(g, 0) + 1
    assert len(seen) == 10
    assert _within_3sigma(np.array(list(seen.values())), 0.1, n)


def test_monte_carlo_matches_partition_exactly():
    d = gen_karate()
    plan = greedy_balanced_partition(d, 8)
    est = theta_monte_carlo(plan, d, 2000, np.random.default_rng(3))
    np.testing.assert_allclose(est.data, plan.theta.data)


def test_monte_carlo_full_group_one_sample(cycle):
    plan = uniform_plan(cycle, 4)
    est = theta_monte_carlo(plan, cycle, 1)
    np.testing.assert_array_equal(est.data, cycle.layout.gather(cycle.profile.mu))


def test_monte_carlo_reports_unsampled_block():
    d = gen_karate()
    with pytest.raises(PlanError, match="block"):
        theta_monte_carlo(uniform_plan(d, 1), d, 5)


def test_lower_bound_values(cycle):
    assert lower_bound(cycle, 2) == 4.0
    assert lower_bound(cycle, 1) == 4.0
    d = gen_karate()
    assert lower_bound(d, 8) == 34.0
    assert greedy_balanced_partition(d, 8).theta_one_inf >= 34.0
