from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from sispa.hardness import (
    BiddingHardnessInstance,
    ConstantBid,
    SetCoverInstance,
    bid_expected_utility,
    cover_from_apx,
    estimator_half_width,
    min_set_cover,
    opt_from_cover,
    random_regular_cover,
    reduce,
    regret_to_opt_estimator,
    sample_thresholds,
    solve_bidding_exact,
)


@pytest.fixture
def worked():
    return reduce(SetCoverInstance(2, ((1,), (2,))))


def test_worked_reduction(worked):
    assert (worked.H, worked.v) == (16, 8)
    np.testing.assert_array_equal(worked.thresholds, [[1, 16], [16, 1]])
    assert worked.cheap == (frozenset({0}), frozenset({1}))


def test_thresholds_take_two_values(worked):
    th = sample_thresholds(worked, 500, np.random.default_rng(0))
    assert set(np.unique(th)) <= {1.0, 16.0}


def test_worked_optimum(worked):
    opt, S = solve_bidding_exact(worked)
    assert opt == Fraction(7) and S == frozenset({0, 1})
    assert bid_expected_utility(worked, [2, 2]) == pytest.approx(7)


def test_cover_bracket(worked):
    assert cover_from_apx(worked, 7) == pytest.approx(1.5)
    k = worked.k
    for apx in (7 + 1 / (2 * k), 7 - 1 / (2 * k)):
        q = cover_from_apx(worked, apx)
        assert q <= 2 <= 3 * q


def test_identity_on_random_covers():
    rng = np.random.default_rng(3)
    for _ in range(30):
        k = int(rng.integers(2, 5))
        r = int(rng.integers(1, k + 1))
        m = int(rng.integers(max(2, -(-k // r)), 7))
        try:
            sc = random_regular_cover(k, m, r, rng)
        except ValueError:
            continue
        inst = reduce(sc)
        assert solve_bidding_exact(inst)[0] == opt_from_cover(inst, min_set_cover(sc))


def test_exact_solver_matches_grid_search(worked):
    # Every bid level in {0, 1.5, 2, H+1} is dominated by {0, 2}.
    best = max(bid_expected_utility(worked, b) for b in product([0, 1.5, 2, worked.H + 1], repeat=2))
    assert best == pytest.approx(7)


def test_invalid_cover_rejected():
    with pytest.raises(ValueError):
        SetCoverInstance(3, ((1, 2), (2,)))
    with pytest.raises(ValueError):
        SetCoverInstance(2, ((1,), (1,)))


def test_constant_learner_estimate(worked):
    res = regret_to_opt_estimator(worked, ConstantBid(worked, 2.0), 200, 50, rng=1)
    assert res.estimate == pytest.approx(7, abs=0.5)


def test_degenerate_estimator_sizes(worked):
    res = regret_to_opt_estimator(worked, ConstantBid(worked, 2.0), 1, 1, rng=0)
    assert res.estimate == 7
    assert res.half_width > 5


def test_half_width_value(worked):
    assert estimator_half_width(worked, 2000, 2000) == pytest.approx(0.8500647, abs=1e-6)


def test_instance_round_trip(worked):
    back = BiddingHardnessInstance.from_dict(worked.to_dict())
    assert solve_bidding_exact(back) == solve_bidding_exact(worked)
