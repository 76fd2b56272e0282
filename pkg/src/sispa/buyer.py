"""The online buyer's problem, the set-to-bid reduction and envy measurement."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .ftpl import BuyerOracle, ExponentialSampler, FTPLLearner, default_epsilon, make_seed_sequence
from .simulate import SoloRun, run_bidder
from .valuations import InstanceTooLargeError, Valuation, as_mask, as_set, demand_oracle

DEFAULT_EXPERT_CAP = 1_000_000


def buyer_utility(val: Valuation, S, theta) -> float:
    """Value of ``S`` minus its price; may be negative."""
    theta = np.asarray(theta, dtype=float)
    mask = as_mask(S, val.m)
    return val.value(mask) - float(theta[mask].sum())


def set_to_bid(val: Valuation, S) -> np.ndarray:
    """Bid the XOS clause of ``S`` on the items of ``S`` and zero elsewhere.

    Such a bid never overbids, and against any thresholds it earns at least
    the buyer utility of ``S``.
    """
    mask = as_mask(S, val.m)
    return np.where(mask, val.xos_clause(mask), 0.0)


class NoEnvyBidder:
    """Turns a buyer learner (``choose``/``observe``) into a bidder."""

    def __init__(self, val: Valuation, learner):
        self.val = val
        self.learner = learner
        self.last_set = None

    def bid(self):
        self.last_set = self.learner.choose()
        return set_to_bid(self.val, self.last_set)

    def observe(self, theta):
        self.learner.observe(theta)


def ftpl_buyer(val: Valuation, T: int, H=None, D=1.0, seed=None, fresh: bool = False,
               eps=None, schedule: str = "proof") -> FTPLLearner:
    """Buyer learner: exponential single-sample perturbation plus a demand oracle."""
    H = val.max_value() if H is None else H
    if eps is None:
        eps = default_epsilon(val.m, H, D, T, schedule)
    return FTPLLearner(BuyerOracle(val), ExponentialSampler(eps, val.m), seed, fresh)


def no_envy_learner(val: Valuation, adversary, T: int, sampler=None, H=None, D=1.0,
                    seed=None, fresh: bool = False) -> SoloRun:
    """Run the XOS no-envy bidder for ``T`` rounds.

    Returns the solo trace; ``trace.chosen`` holds the set picked each round.
    """
    learner = ftpl_buyer(val, T, H, D, seed, fresh)
    if sampler is not None:
        learner.sampler = sampler
        if not fresh:
            learner.fixed = sampler.draw_sum(np.random.default_rng(learner.ss))
    return run_bidder(NoEnvyBidder(val, learner), val, adversary, T)


def buyer_utilities(val: Valuation, sets, thetas) -> np.ndarray:
    """Per-round buyer utilities of the chosen sets."""
    thetas = np.asarray(thetas, dtype=float)
    masks = np.vstack([as_mask(S, val.m) for S in sets]) if len(sets) else np.zeros((0, val.m), bool)
    return val.value_many(masks) - (masks * thetas).sum(axis=1)


def envy_benchmark(val: Valuation, thetas, alpha: float = 1.0):
    """Best bundle at the average prices, with value discounted by ``1/alpha``."""
    avg = np.asarray(thetas, dtype=float).mean(axis=0)
    target = val if alpha == 1.0 else val.scaled(1.0 / alpha)
    return demand_oracle(target, avg)


def envy_gap(val: Valuation, thetas, utilities, alpha: float = 1.0) -> float:
    """``max_S(v(S)/alpha - avg_theta(S))`` minus the realized average utility."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.shape[0] == 0:
        raise ValueError("envy gap needs a nonempty history")
    return envy_benchmark(val, thetas, alpha).utility - float(np.mean(utilities))


def running_envy_gaps(val: Valuation, thetas, utilities, alpha: float = 1.0) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    target = val if alpha == 1.0 else val.scaled(1.0 / alpha)
    csum = np.cumsum(thetas, axis=0)
    ucum = np.cumsum(np.asarray(utilities, dtype=float))
    t = np.arange(1, thetas.shape[0] + 1)
    bench = np.array([demand_oracle(target, csum[i] / t[i]).utility for i in range(len(t))])
    return bench - ucum / t


# --------------------------------------------------- multiplicative weights


def capped_sets(m: int, d: int, cap: int = DEFAULT_EXPERT_CAP) -> np.ndarray:
    """All sets of size at most ``d`` as masks, by size then lexicographically."""
    d = max(0, min(d, m))
    count = sum(math.comb(m, k) for k in range(d + 1))
    if count > cap:
        raise InstanceTooLargeError(f"{count} experts exceeds the cap {cap}")
    out = np.zeros((count, m), dtype=bool)
    row = 0
    for k in range(d + 1):
        for combo in itertools.combinations(range(m), k):
            out[row, list(combo)] = True
            row += 1
    return out


class MWLearner:
    """Hedge over every set of at most ``d`` items with full-information rewards.

    Rewards are buyer utilities mapped to ``[0, 1]`` by ``(u + mD)/(H + mD)``;
    the default rate is ``sqrt(8 ln N / T)`` for ``N`` experts.
    """

    def __init__(self, val: Valuation, d: int, T: int, D: float, H=None, eta=None, seed=None,
                 cap: int = DEFAULT_EXPERT_CAP):
        self.val = val
        self.experts = capped_sets(val.m, d, cap)
        N = self.experts.shape[0]
        self.H = val.max_value() if H is None else float(H)
        self.eta = (math.sqrt(8 * math.log(N) / T) if N > 1 else 0.0) if eta is None else float(eta)
        self.lo = val.m * float(D)
        self.span = self.H + self.lo
        self.values = val.value_many(self.experts)
        self.logw = np.zeros(N)
        self.rng = np.random.default_rng(make_seed_sequence(seed))
        self.pick = 0

    def probs(self) -> np.ndarray:
        w = np.exp(self.logw - self.logw.max())
        return w / w.sum()

    def rewards(self, theta) -> np.ndarray:
        return self.values - self.experts @ np.asarray(theta, dtype=float)

    def choose(self) -> frozenset:
        self.pick = int(self.rng.choice(self.experts.shape[0], p=self.probs()))
        return as_set(self.experts[self.pick])

    def observe(self, theta):
        if self.span > 0:
            self.logw += self.eta * (self.rewards(theta) + self.lo) / self.span


@dataclass
class MWRun:
    experts: np.ndarray
    picks: np.ndarray
    thetas: np.ndarray
    utilities: np.ndarray
    expected: np.ndarray
    probs: np.ndarray | None

    @property
    def sets(self) -> list:
        return [as_set(self.experts[i]) for i in self.picks]


def mw_capacitated_baseline(val: Valuation, d: int, T: int, adversary, D: float, H=None,
                            eta=None, rng=None, cap: int = DEFAULT_EXPERT_CAP,
                            record_probs: bool = False) -> MWRun:
    """Run :class:`MWLearner` for ``T`` rounds.

    The adversary is called with the sets played so far, as masks.
    """
    mw = MWLearner(val, d, T, D, H, eta, rng, cap)
    N = mw.experts.shape[0]
    picks = np.zeros(T, dtype=np.int64)
    thetas = np.zeros((T, val.m))
    util = np.zeros(T)
    expected = np.zeros(T)
    probs = np.zeros((T, N)) if record_probs else None
    for t in range(T):
        p = mw.probs()
        mw.choose()
        theta = np.asarray(adversary(t, mw.experts[picks[:t]]), dtype=float)
        u = mw.rewards(theta)
        picks[t] = mw.pick
        thetas[t] = theta
        util[t] = u[mw.pick]
        expected[t] = p @ u
        if record_probs:
            probs[t] = p
        mw.observe(theta)
    return MWRun(mw.experts, picks, thetas, util, expected, probs)
