import math

import numpy as np
import pytest

from sispa.ftpl import (
    BuyerOracle,
    ExponentialSampler,
    FiniteOracle,
    FTPLLearner,
    GeometricSampler,
    ZeroSampler,
    be_the_leader_check,
    buyer_oracle,
    default_epsilon,
    demand_regret_bound,
    ftpl_finite_run,
    ftpl_step,
    sample_exponential,
    stability_estimate,
)
from sispa.valuations import AdditiveValuation, ExplicitXOS, demand_oracle


def test_buyer_oracle_averages_history():
    v = AdditiveValuation([3, 3])
    S = buyer_oracle([[0, 2], [2, 0]], v)
    assert S == frozenset({0, 1})
    assert demand_oracle(v, [1, 1]).utility == 4
    assert buyer_oracle([[1.0, 2.5], [1.0, 2.5]], ExplicitXOS([[3, 1]])) == demand_oracle(
        ExplicitXOS([[3, 1]]), [1.0, 2.5]).bundle
    assert buyer_oracle([[50.0, 50.0]], v) == frozenset()


def test_ftpl_step_with_zero_sample_is_leader():
    v = ExplicitXOS([[3, 0], [1, 1]])
    S = ftpl_step(np.zeros((0, 2)), ZeroSampler(2), BuyerOracle(v), rng=np.random.default_rng(0))
    assert S == demand_oracle(v, [0, 0]).bundle


def test_ftpl_step_prepends_fake_sample():
    v = ExplicitXOS([[3, 0], [1, 1], [0, 2]])
    x = np.array([0.7, 1.9])
    S = ftpl_step([[0.0, 0.0]], ExponentialSampler(1.0, 2), BuyerOracle(v), fresh=False, fixed_sample=x)
    assert S == demand_oracle(v, x / 2).bundle


def test_exponential_sampler_mean():
    eps = 0.4
    x = sample_exponential(eps, 100_000, np.random.default_rng(1))
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - 1 / eps) < 3 * se
    assert np.all(x >= 0)


def test_exponential_sampler_distribution():
    stats = pytest.importorskip("scipy.stats")
    x = sample_exponential(2.0, 20_000, np.random.default_rng(2))
    assert stats.kstest(x, "expon", args=(0, 0.5)).pvalue > 1e-3


def test_geometric_counts_start_at_zero():
    z = GeometricSampler(0.3, 5).counts(np.random.default_rng(0))
    assert z.min() >= 0
    big = np.concatenate([GeometricSampler(0.25, 1000).counts(np.random.default_rng(s)) for s in range(20)])
    assert big.mean() == pytest.approx(3.0, rel=0.05)


def test_finite_single_parameter_plays_best_response():
    U = np.array([[1.0], [3.0], [2.0]])
    run = ftpl_finite_run([0], [0] * 50, FiniteOracle(U), p=0.1, rng=4)
    assert np.all(run.actions[1:] == 1)
    assert run.regret <= 3.0


def test_finite_rejects_unknown_parameter():
    with pytest.raises(ValueError):
        ftpl_finite_run([0, 1], [0, 2], FiniteOracle(np.eye(2)))


def test_btl_single_round_and_random():
    v = ExplicitXOS([[3, 0], [1, 1]])
    oracle = BuyerOracle(v)
    assert be_the_leader_check([[1.0, 0.5]], oracle, n_random=4, rng=0)
    rng = np.random.default_rng(8)
    for _ in range(20):
        m = int(rng.integers(1, 6))
        w = ExplicitXOS(rng.uniform(0, 3, (3, m)))
        seq = rng.uniform(0, 2, (int(rng.integers(1, 30)), m))
        assert be_the_leader_check(seq, BuyerOracle(w), n_random=8, rng=rng)


def test_zero_perturbation_constant_sequence_is_stable():
    v = ExplicitXOS([[3, 0], [1, 1]])
    seq = np.tile([1.0, 0.5], (10, 1))
    est = stability_estimate(seq, ZeroSampler(2), BuyerOracle(v), t=5, trials=5, rng=0)
    assert est.mean == pytest.approx(0.0)


def test_fixed_and_fresh_agree_in_expectation():
    # Against an oblivious sequence, fixed and fresh perturbations give the
    # same expected utility each round.
    v = ExplicitXOS([[2.0, 0.5, 1.0], [0.5, 2.0, 0.5]])
    rng = np.random.default_rng(9)
    seq = rng.uniform(0, 2, (30, 3))
    oracle = BuyerOracle(v)
    totals = {True: [], False: []}
    for fresh in (True, False):
        for s in range(400):
            L = FTPLLearner(oracle, ExponentialSampler(0.5, 3), seed=[fresh, s], fresh=fresh)
            u = 0.0
            for th in seq:
                u += oracle.utility(L.choose(), th)
                L.observe(th)
            totals[fresh].append(u)
    a, b = np.array(totals[True]), np.array(totals[False])
    se = math.sqrt(a.var() / a.size + b.var() / b.size)
    assert abs(a.mean() - b.mean()) < 4 * se


def test_epsilon_schedules_and_bound():
    assert default_epsilon(2, 4, 1, 100) == pytest.approx(math.sqrt(1 / ((2 + 4) * 1 * 100)))
    assert default_epsilon(2, 4, 1, 100, "statement") == pytest.approx(math.sqrt(1 / (4 * 100)))
    assert demand_regret_bound(2, 1, 4, 100) == pytest.approx(2 * 6 * 2 * (math.log(100) + 1) + 8 * math.sqrt(600))


def test_learner_is_deterministic_given_seed():
    v = ExplicitXOS([[2.0, 0.5], [0.5, 2.0]])
    picks = []
    for _ in range(2):
        L = FTPLLearner(BuyerOracle(v), ExponentialSampler(0.5, 2), seed=123, fresh=True)
        seq = []
        for th in np.linspace(0, 2, 20).reshape(10, 2):
            seq.append(L.choose())
            L.observe(th)
        picks.append(seq)
    assert picks[0] == picks[1]
