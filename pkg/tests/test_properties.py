"""Structural properties checked on generated instances."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sispa.buyer import set_to_bid
from sispa.ftpl import BuyerOracle, be_the_leader_check
from sispa.metrics import dominance_violations
from sispa.rounding import F_gradient, F_value
from sispa.valuations import (
    CoverageValuation,
    ExplicitXOS,
    UnitDemandUniform,
    brute_force_demand,
    demand_oracle,
    subset_masks,
    xos_oracle,
)

small = st.floats(0, 4, allow_nan=False, width=32)


@st.composite
def xos_valuations(draw, max_m=5):
    m = draw(st.integers(1, max_m))
    L = draw(st.integers(1, 4))
    return ExplicitXOS(draw(arrays(float, (L, m), elements=small)))


@st.composite
def coverage_valuations(draw, max_m=5):
    m = draw(st.integers(1, max_m))
    V = draw(st.integers(0, 6))
    weights = draw(arrays(float, (V,), elements=small))
    edges = [draw(st.lists(st.integers(0, V - 1), max_size=V, unique=True)) if V else [] for _ in range(m)]
    return CoverageValuation(weights, edges)


valuations = st.one_of(
    xos_valuations(),
    coverage_valuations(),
    st.builds(UnitDemandUniform, small, st.integers(1, 5)),
)


@given(valuations)
@settings(max_examples=60, deadline=None)
def test_xos_clause_tight_and_dominated(val):
    table = val.value_table()
    masks = subset_masks(val.m)
    for mask, v in zip(masks, table):
        a = xos_oracle(val, mask)
        assert np.all(a >= 0)
        assert abs(a[mask].sum() - v) < 1e-9
        assert np.all(masks.astype(float) @ a <= table + 1e-9)


@given(valuations)
@settings(max_examples=60, deadline=None)
def test_monotone(val):
    table = val.value_table()
    n = table.size
    for c in range(n):
        for j in range(val.m):
            assert table[c | (1 << j)] >= table[c] - 1e-12


@given(coverage_valuations())
@settings(max_examples=60, deadline=None)
def test_coverage_submodular(val):
    table = val.value_table()
    n = table.size
    for a in range(n):
        for j in range(val.m):
            if a >> j & 1:
                continue
            for b in range(n):
                if a & b == a and not b >> j & 1:
                    assert table[a | (1 << j)] - table[a] >= table[b | (1 << j)] - table[b] - 1e-9


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_demand_matches_enumeration(data):
    val = data.draw(valuations)
    p = data.draw(arrays(float, (val.m,), elements=small))
    assert abs(demand_oracle(val, p).utility - brute_force_demand(val, p).utility) < 1e-9


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_set_to_bid_never_overbids_and_dominates(data):
    val = data.draw(xos_valuations())
    S = data.draw(st.sets(st.integers(0, val.m - 1)))
    theta = data.draw(arrays(float, (val.m,), elements=small))
    b = set_to_bid(val, S)
    masks = subset_masks(val.m)
    assert np.all(masks.astype(float) @ b <= val.value_table() + 1e-9)
    assert dominance_violations(val, [S], [b], [theta]) == 0


@given(st.data())
@settings(max_examples=40, deadline=None)
def test_be_the_leader(data):
    val = data.draw(xos_valuations(max_m=4))
    T = data.draw(st.integers(1, 12))
    seq = data.draw(arrays(float, (T, val.m), elements=small))
    assert be_the_leader_check(seq, BuyerOracle(val), n_random=4, rng=0)


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_multilinear_concave_and_monotone(data):
    val = data.draw(coverage_valuations())
    unit = st.floats(0, 1, allow_nan=False)
    x = data.draw(arrays(float, (val.m,), elements=unit))
    y = data.draw(arrays(float, (val.m,), elements=unit))
    assert F_value(val, (x + y) / 2) >= (F_value(val, x) + F_value(val, y)) / 2 - 1e-9
    assert np.all(F_gradient(val, x) >= 0)
    mask = x > 0.5
    assert F_value(val, mask.astype(float)) >= (1 - np.exp(-1)) * val.value(mask) - 1e-9
