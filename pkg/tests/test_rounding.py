import math

import numpy as np
import pytest

from sispa.metrics import ObliviousAdversary
from sispa.rounding import (
    F_gradient,
    F_value,
    gradient_bound,
    inclusion_probs,
    pgd_coverage_learner,
    poisson_round,
    project_box,
)
from sispa.valuations import CoverageValuation


def random_coverage(rng, m=5, V=6):
    return CoverageValuation(rng.uniform(0, 2, V), [np.flatnonzero(rng.random(V) < 0.4).tolist() for _ in range(m)])


def test_F_examples():
    cov = CoverageValuation([1.0], [[0]])
    assert F_value(cov, [0.0]) == 0
    assert F_value(cov, [1.0]) == pytest.approx(1 - math.exp(-1))
    assert F_value(cov, [1.0]) == pytest.approx(0.632121, abs=1e-6)


def test_F_matches_sampling():
    rng = np.random.default_rng(0)
    cov = random_coverage(rng)
    x = rng.random(cov.m)
    draws = poisson_round(np.tile(x, (100_000, 1)), rng)
    vals = cov.value_many(draws)
    se = vals.std() / math.sqrt(vals.size)
    assert abs(vals.mean() - F_value(cov, x)) < 3 * se


def test_gradient_at_zero_and_finite_differences():
    rng = np.random.default_rng(1)
    cov = random_coverage(rng)
    np.testing.assert_allclose(F_gradient(cov, np.zeros(cov.m)), cov.singleton_values())
    x = rng.random(cov.m)
    h = 1e-5
    fd = np.array([(F_value(cov, x + h * e) - F_value(cov, x - h * e)) / (2 * h) for e in np.eye(cov.m)])
    g = F_gradient(cov, x)
    assert np.all(g >= 0)
    np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-9)


def test_project_box():
    y = np.array([-0.5, 0.3, 1.7])
    np.testing.assert_allclose(project_box(y), [0, 0.3, 1])
    np.testing.assert_allclose(project_box(project_box(y)), project_box(y))
    z = np.array([0.0, 0.25, 1.0])
    np.testing.assert_array_equal(project_box(z), z)


def test_inclusion_probs_below_marginals():
    x = np.linspace(0, 1, 101)
    assert np.all(inclusion_probs(x) <= x)


def test_free_items_climb_to_one():
    cov = CoverageValuation([1.0], [[0]])
    T = 2000
    run = pgd_coverage_learner(cov, T, 1.0, ObliviousAdversary(np.zeros((T, 1))), seed=0)
    assert run.xs[-1, 0] == 1.0
    assert run.expected[-500:].mean() == pytest.approx(1 - math.exp(-1), abs=1e-9)


def test_midpoint_concavity_along_trajectory():
    rng = np.random.default_rng(2)
    cov = random_coverage(rng)
    T = 200
    run = pgd_coverage_learner(cov, T, 1.0, ObliviousAdversary(rng.uniform(0, 1, (T, cov.m))), seed=3)
    for a, b in zip(run.xs[:-1], run.xs[1:]):
        assert F_value(cov, (a + b) / 2) >= (F_value(cov, a) + F_value(cov, b)) / 2 - 1e-12


def test_gradient_bound_values():
    cov = CoverageValuation([1.0, 3.0], [[0], [0, 1]])
    Hp, G = gradient_bound(cov, 2.0)
    assert Hp == pytest.approx(4.0 * math.sqrt(2))
    assert G == pytest.approx(Hp + 2.0)
