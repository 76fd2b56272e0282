import numpy as np
import pytest

from sispa.valuations import (
    AdditiveValuation,
    CoverageValuation,
    ExplicitXOS,
    InstanceTooLargeError,
    UnitDemandUniform,
    as_mask,
    brute_force_demand,
    demand_oracle,
    subset_masks,
    valuation_from_dict,
    value,
    xos_oracle,
)


@pytest.fixture
def xos():
    return ExplicitXOS([[3, 0], [1, 1]])


def test_empty_set_is_zero(xos):
    for v in (xos, CoverageValuation([1.0], [[0], [0]]), UnitDemandUniform(8, 3), AdditiveValuation([2, 1])):
        assert value(v, set()) == 0
        assert np.all(xos_oracle(v, set()) == 0)


def test_xos_value_is_max_of_clauses(xos):
    assert value(xos, {0, 1}) == 3
    assert value(xos, {1}) == 1


def test_single_vertex_coverage():
    cov = CoverageValuation([1.0], [[0], [0]])
    assert value(cov, {0}) == 1.0
    np.testing.assert_array_equal(xos_oracle(cov, {0, 1}), [1, 0])


def test_xos_oracle_picks_maximizing_clause(xos):
    np.testing.assert_array_equal(xos_oracle(xos, {1}), [1, 1])


def test_demand_examples(xos):
    d = demand_oracle(xos, [0.5, 0.5])
    assert d.bundle == frozenset({0}) and d.utility == pytest.approx(2.5)
    d = demand_oracle(AdditiveValuation([2, 1]), [1, 3])
    assert d.bundle == frozenset({0}) and d.utility == pytest.approx(1)
    d = demand_oracle(xos, [1e12, 1e12])
    assert d.bundle == frozenset() and d.utility == 0


def test_closed_form_demand_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(200):
        m, L = rng.integers(1, 7), rng.integers(1, 5)
        v = ExplicitXOS(rng.integers(0, 5, (L, m)))
        p = rng.integers(0, 6, m) / 2
        assert demand_oracle(v, p).utility == brute_force_demand(v, p).utility


def test_unit_demand_closed_form_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(100):
        m = int(rng.integers(1, 7))
        v = UnitDemandUniform(float(rng.uniform(0, 5)), m)
        p = rng.uniform(0, 6, m)
        assert demand_oracle(v, p).utility == pytest.approx(brute_force_demand(v, p).utility)


def test_brute_force_ties_prefer_smaller_sets():
    v = AdditiveValuation([1.0, 1.0])
    assert brute_force_demand(v, [1.0, 1.0]).bundle == frozenset()


def test_subset_masks_rows_are_bitmasks():
    masks = subset_masks(3)
    assert masks.shape == (8, 3)
    assert masks[5].tolist() == [True, False, True]


def test_brute_force_cap():
    with pytest.raises(InstanceTooLargeError):
        subset_masks(21)


def test_validation_errors(xos):
    with pytest.raises(ValueError):
        ExplicitXOS([[-1, 0]])
    with pytest.raises(ValueError):
        demand_oracle(xos, [-1, 0])
    with pytest.raises(ValueError):
        demand_oracle(xos, [0, 0, 0])
    with pytest.raises(ValueError):
        as_mask({5}, 2)


@pytest.mark.parametrize("val", [
    ExplicitXOS([[1, 2, 0], [0, 1, 3]]),
    CoverageValuation([1.0, 2.0], [[0], [0, 1], []]),
    UnitDemandUniform(4.0, 3),
    AdditiveValuation([1.0, 0.5, 2.0]),
])
def test_dict_round_trip(val):
    back = valuation_from_dict(val.to_dict())
    np.testing.assert_allclose(back.value_table(), val.value_table())


def test_coverage_with_no_vertices_is_zero():
    cov = CoverageValuation([], [[], []])
    assert cov.value({0, 1}) == 0
    assert cov.max_value() == 0
