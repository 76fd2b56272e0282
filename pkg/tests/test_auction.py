import numpy as np
import pytest

from sispa.auction import (
    MechanismKind,
    focal_outcome,
    optimal_welfare,
    resolve,
    threshold_payment,
    thresholds_for,
)
from sispa.valuations import AdditiveValuation, ExplicitXOS, UnitDemandUniform


def test_second_price_single_item():
    vals = [AdditiveValuation([6.0]), AdditiveValuation([4.0])]
    rec = resolve("second_price", [[5.0], [3.0]], vals)
    assert rec.won_set(0) == frozenset({0}) and rec.won_set(1) == frozenset()
    assert rec.payments.tolist() == [3.0, 0.0]
    assert rec.utilities[0] == 3.0


def test_ties_go_to_lowest_index():
    vals = [AdditiveValuation([1.0]), AdditiveValuation([1.0])]
    rec = resolve("second_price", [[2.0], [2.0]], vals)
    assert rec.won_set(0) == frozenset({0})
    assert rec.payments[0] == 2.0


def test_first_price_and_all_pay():
    vals = [AdditiveValuation([6.0]), AdditiveValuation([4.0])]
    rec = resolve(MechanismKind.FIRST_PRICE, [[5.0], [3.0]], vals)
    assert rec.payments.tolist() == [5.0, 0.0]
    rec = resolve("all_pay", [[5.0], [3.0]], vals)
    assert rec.payments.tolist() == [5.0, 3.0]


def test_thresholds():
    profile = np.array([[2.0], [7.0], [4.0]])
    assert thresholds_for(profile, 1).tolist() == [4.0]
    assert thresholds_for(profile, 0).tolist() == [7.0]
    assert thresholds_for(np.array([[3.0, 1.0]]), 0).tolist() == [0.0, 0.0]


def test_threshold_payment():
    assert threshold_payment("second_price", set(), [1.5, 2.5]) == 0
    assert threshold_payment("second_price", {0, 1}, [1.5, 2.5]) == 4.0


def test_threshold_payment_matches_resolve():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n, m = rng.integers(2, 4), rng.integers(1, 5)
        others = rng.uniform(0, 3, (n - 1, m))
        theta = others.max(axis=0)
        S = rng.random(m) < 0.5
        bid = np.where(S, theta + 0.25, 0.0)
        vals = [AdditiveValuation(np.full(m, 9.0)) for _ in range(n)]
        rec = resolve("second_price", np.vstack([bid, others]), vals)
        assert rec.won[0].tolist() == S.tolist()
        assert rec.payments[0] == pytest.approx(threshold_payment("second_price", set(np.flatnonzero(S)), theta))


def test_focal_outcome_is_strict():
    assert focal_outcome([1.0, 2.0], [1.0, 1.5]).tolist() == [False, True]


def test_optimal_welfare_examples():
    assert optimal_welfare([AdditiveValuation([3, 1]), AdditiveValuation([1, 3])])[0] == 6
    assert optimal_welfare([UnitDemandUniform(1, 2), UnitDemandUniform(1, 2)])[0] == 2
    xos = ExplicitXOS([[1, 2, 0], [0, 1, 3]])
    assert optimal_welfare([xos])[0] == xos.value({0, 1, 2})


def test_optimal_welfare_matches_assignment_enumeration():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        vals = [ExplicitXOS(rng.integers(0, 4, (2, m))) for _ in range(n)]
        best = 0.0
        for code in range((n + 1) ** m):
            owner = [(code // (n + 1) ** j) % (n + 1) for j in range(m)]
            w = sum(v.value({j for j in range(m) if owner[j] == i}) for i, v in enumerate(vals))
            best = max(best, w)
        opt, alloc = optimal_welfare(vals)
        assert opt == pytest.approx(best)
        assert sum(v.value(S) for v, S in zip(vals, alloc)) == pytest.approx(opt)
