"""Follow-the-perturbed-leader with sample perturbations.

The learner hides its leader computation behind an exact optimization
oracle ``M`` that maps a parameter sequence to a best fixed action. The
perturbation is a short sequence of *fake* parameters placed in front of
the real history:

* fresh mode redraws the fake samples every round (safe against adaptive
  adversaries);
* fixed mode draws them once at the start (enough against oblivious ones).

All shipped oracles depend on the sequence only through its sum and
length, so learners keep running sums instead of whole histories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .valuations import DEFAULT_BRUTE_FORCE_CAP, Valuation, as_mask, demand_oracle


def make_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(2**63)))
    return np.random.SeedSequence(seed)


def round_stream(ss: np.random.SeedSequence, t: int) -> np.random.Generator:
    """Independent generator for round ``t`` derived from a run's master seed."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=ss.entropy, spawn_key=tuple(ss.spawn_key) + (t,))
    )


# ----------------------------------------------------------------- oracles


class SumOracle:
    """Exact optimization oracle whose answer depends on ``(sum, count)`` only."""

    dim: int

    def best_from_sum(self, total: np.ndarray, count: int) -> Any:
        raise NotImplementedError

    def utility(self, action, theta) -> float:
        raise NotImplementedError

    def random_action(self, rng: np.random.Generator) -> Any:
        raise NotImplementedError

    def best(self, entries) -> Any:
        entries = np.asarray(entries, dtype=float).reshape(-1, self.dim)
        if entries.shape[0] == 0:
            raise ValueError("optimization oracle needs a nonempty sequence")
        return self.best_from_sum(entries.sum(axis=0), entries.shape[0])

    def cumulative(self, action, entries) -> float:
        return float(sum(self.utility(action, th) for th in np.asarray(entries, dtype=float)))


class BuyerOracle(SumOracle):
    """Best bundle against a threshold sequence: demand at the average price.

    Since ``sum_t (v(S) - theta^t(S)) = t * (v(S) - avg(S))`` the offline
    problem is one demand query.
    """

    def __init__(self, val: Valuation, cap: int = DEFAULT_BRUTE_FORCE_CAP):
        self.val = val
        self.dim = val.m
        self.cap = cap

    def best_from_sum(self, total, count):
        if count <= 0:
            raise ValueError("optimization oracle needs a nonempty sequence")
        return demand_oracle(self.val, np.asarray(total, dtype=float) / count, self.cap).bundle

    def utility(self, action, theta):
        mask = as_mask(action, self.dim)
        return self.val.value(mask) - float(np.asarray(theta, dtype=float)[mask].sum())

    def cumulative(self, action, entries):
        entries = np.asarray(entries, dtype=float).reshape(-1, self.dim)
        mask = as_mask(action, self.dim)
        return entries.shape[0] * self.val.value(mask) - float(entries[:, mask].sum())

    def random_action(self, rng):
        return frozenset(np.flatnonzero(rng.random(self.dim) < 0.5).tolist())


class FiniteOracle(SumOracle):
    """Oracle over a finite parameter universe of size ``d``.

    ``U[a, i]`` is the utility of action ``a`` against universe element ``i``.
    Parameters are one-hot rows, so a sum is a frequency vector ``phi`` and
    ``M(phi) = argmax_a U[a] . phi`` (lowest action index on ties).
    """

    def __init__(self, U):
        self.U = np.atleast_2d(np.asarray(U, dtype=float))
        self.dim = self.U.shape[1]

    def best_from_sum(self, total, count=None):
        return int(np.argmax(self.U @ np.asarray(total, dtype=float)))

    def utility(self, action, theta):
        return float(self.U[action] @ np.asarray(theta, dtype=float))

    def random_action(self, rng):
        return int(rng.integers(self.U.shape[0]))


def buyer_oracle(history, val: Valuation, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> frozenset:
    """Best fixed bundle for a (possibly augmented) threshold history."""
    return BuyerOracle(val, cap).best(np.asarray(history, dtype=float).reshape(-1, val.m))


# ------------------------------------------------------------- perturbation


def sample_exponential(eps: float, m: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` i.i.d. Exponential(rate ``eps``) draws by inverse CDF."""
    if not eps > 0:
        raise ValueError("exponential rate must be positive")
    u = 1.0 - rng.random(m)  # uniform on (0, 1]
    return -np.log(u) / eps


class ExponentialSampler:
    """One fake threshold vector with i.i.d. Exponential(``eps``) coordinates."""

    def __init__(self, eps: float, m: int):
        if not eps > 0:
            raise ValueError("exponential rate must be positive")
        self.eps = float(eps)
        self.m = int(m)

    def draw(self, rng):
        return sample_exponential(self.eps, self.m, rng)[None, :]

    def draw_sum(self, rng):
        return sample_exponential(self.eps, self.m, rng), 1


class ZeroSampler:
    """Degenerate perturbation: a single all-zero fake sample."""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def draw(self, rng):
        return np.zeros((1, self.dim))

    def draw_sum(self, rng):
        return np.zeros(self.dim), 1


class GeometricSampler:
    """For each of ``d`` universe elements, Geometric(``p``) many fake copies.

    Counts are tails before the first head, so the support is ``0, 1, 2, ...``.
    """

    def __init__(self, p: float, d: int):
        if not 0 < p <= 1:
            raise ValueError("coin probability must lie in (0, 1]")
        self.p = float(p)
        self.d = int(d)

    def counts(self, rng):
        return rng.geometric(self.p, size=self.d) - 1

    def draw(self, rng):
        z = self.counts(rng)
        return np.repeat(np.eye(self.d), z, axis=0)

    def draw_sum(self, rng):
        z = self.counts(rng)
        return z.astype(float), int(z.sum())


def default_epsilon(m: int, H: float, D: float, T: int, schedule: str = "proof") -> float:
    """Exponential perturbation rate for horizon ``T``.

    ``"proof"`` balances the stability and perturbation terms of the regret
    analysis, ``sqrt(1 / ((mD + H) D T))``; ``"statement"`` is the shorter
    ``sqrt(1 / (H D T))``.
    """
    if schedule == "proof":
        scale = m * D + H
    elif schedule == "statement":
        scale = H
    else:
        raise ValueError(f"unknown epsilon schedule {schedule!r}")
    return math.sqrt(1.0 / (max(scale, 1e-12) * max(D, 1e-12) * T))


def demand_regret_bound(m: int, D: float, H: float, T: int) -> float:
    """Cumulative regret bound of the exponential-perturbation buyer learner."""
    c = m * D + H
    return 2 * c * m * (math.log(T) + 1) + 4 * m * math.sqrt(c * D * T)


def demand_stability_bound(m: int, D: float, H: float, t: int, eps: float) -> float:
    return (m * D + H) * (m / t + 3 * eps * m * D)


def finite_regret_bound(H: float, d: int, T: int) -> float:
    return 2 * H * math.sqrt(d * T)


def default_coin(d: int, T: int) -> float:
    return min(1.0, math.sqrt(d / T))


# ----------------------------------------------------------------- learners


def ftpl_step(history, sampler, oracle: SumOracle, fresh: bool = True, rng=None, fixed_sample=None):
    """One perturbed-leader decision: ``M({x} + history)`` with ``{x}`` in front.

    With ``fresh=False`` the caller passes the run's ``fixed_sample``.
    """
    hist = np.asarray(history, dtype=float).reshape(-1, oracle.dim)
    if fresh or fixed_sample is None:
        if rng is None:
            raise ValueError("a generator is needed to draw fresh fake samples")
        fake = sampler.draw(rng)
    else:
        fake = np.asarray(fixed_sample, dtype=float).reshape(-1, oracle.dim)
    return oracle.best(np.vstack([fake, hist]))


class FTPLLearner:
    """Perturbed leader with fake samples, driven by ``choose``/``observe``.

    ``fresh=True`` gives per-round fake samples from independent per-round
    streams of the master seed; ``fresh=False`` draws them once.
    """

    def __init__(self, oracle: SumOracle, sampler, seed=None, fresh: bool = False):
        self.oracle = oracle
        self.sampler = sampler
        self.fresh = fresh
        self.ss = make_seed_sequence(seed)
        self.total = np.zeros(oracle.dim)
        self.count = 0
        self.t = 0
        self.fixed = None if fresh else sampler.draw_sum(np.random.default_rng(self.ss))

    def choose(self):
        if self.fresh:
            xs, xc = self.sampler.draw_sum(round_stream(self.ss, self.t))
        else:
            xs, xc = self.fixed
        return self.oracle.best_from_sum(self.total + xs, self.count + xc)

    def observe(self, theta):
        self.total += np.asarray(theta, dtype=float)
        self.count += 1
        self.t += 1


@dataclass
class FiniteRun:
    actions: np.ndarray
    utilities: np.ndarray
    best_action: int
    best_total: float
    p: float

    @property
    def regret(self) -> float:
        return self.best_total - float(self.utilities.sum())


def _universe_index(universe, sequence) -> np.ndarray:
    keys = {}
    for i, u in enumerate(universe):
        keys.setdefault(_key(u), i)
    idx = []
    for t, th in enumerate(sequence):
        k = _key(th)
        if k not in keys:
            raise ValueError(f"parameter at round {t + 1} is not in the universe")
        idx.append(keys[k])
    return np.asarray(idx, dtype=np.int64)


def _key(x):
    a = np.asarray(x)
    return (a.shape, a.tobytes()) if a.ndim else a.item()


def ftpl_finite_run(universe: Sequence, sequence: Sequence, oracle: FiniteOracle, p=None, rng=None) -> FiniteRun:
    """Fixed geometric perturbation over a finite universe of parameters.

    Round ``t`` plays ``M(phi^{t-1} + z)`` where ``phi`` counts past
    parameters and ``z`` holds the geometric fake counts drawn once.
    """
    d = len(universe)
    if oracle.dim != d:
        raise ValueError(f"oracle covers {oracle.dim} parameters, universe has {d}")
    idx = _universe_index(universe, sequence)
    T = idx.shape[0]
    if p is None:
        p = default_coin(d, max(T, 1))
    rng = np.random.default_rng(rng)
    z, _ = GeometricSampler(p, d).draw_sum(rng)
    phi = z.copy()
    actions = np.empty(T, dtype=np.int64)
    for t in range(T):
        actions[t] = oracle.best_from_sum(phi)
        phi[idx[t]] += 1
    utilities = oracle.U[actions, idx]
    freq = np.bincount(idx, minlength=d).astype(float)
    totals = oracle.U @ freq
    best = int(np.argmax(totals))
    return FiniteRun(actions, utilities, best, float(totals[best]), float(p))


def be_the_leader_gaps(sequence, oracle: SumOracle, panel=(), n_random: int = 0, rng=None) -> np.ndarray:
    """``sum_t u(M(theta^{1:t}), theta^t) - sum_t u(a, theta^t)`` for each benchmark ``a``.

    Benchmarks are the hindsight leader, the given ``panel`` and
    ``n_random`` random actions.
    """
    seq = np.asarray(sequence, dtype=float).reshape(-1, oracle.dim)
    if seq.shape[0] == 0:
        return np.zeros(0)
    prefix = np.cumsum(seq, axis=0)
    lhs = sum(oracle.utility(oracle.best_from_sum(prefix[t], t + 1), seq[t]) for t in range(seq.shape[0]))
    bench = [oracle.best_from_sum(prefix[-1], seq.shape[0]), *panel]
    if n_random:
        rng = np.random.default_rng(rng)
        bench += [oracle.random_action(rng) for _ in range(n_random)]
    return np.array([lhs - oracle.cumulative(a, seq) for a in bench])


def be_the_leader_check(sequence, oracle: SumOracle, panel=(), n_random: int = 8, rng=None, tol: float = 1e-9) -> bool:
    """True iff be-the-leader weakly beats every benchmark, up to ``tol``."""
    return bool(np.all(be_the_leader_gaps(sequence, oracle, panel, n_random, rng) >= -tol))


@dataclass
class StabilityEstimate:
    """Paired Monte-Carlo estimate of ``weight * BTPL_t - FTPL_t``."""

    mean: float
    se: float
    btpl: float
    ftpl: float
    trials: int


def stability_estimate(sequence, sampler, oracle: SumOracle, t: int, trials: int, rng=None, weight: float = 1.0) -> StabilityEstimate:
    """Estimate ``E[weight * u(M({x}+theta^{1:t}), theta^t) - u(M({x}+theta^{1:t-1}), theta^t)]``.

    Both leaders share the same fake draw in each trial.
    """
    seq = np.asarray(sequence, dtype=float).reshape(-1, oracle.dim)
    if not 1 <= t <= seq.shape[0]:
        raise ValueError(f"round {t} outside 1..{seq.shape[0]}")
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(rng)
    before = seq[: t - 1].sum(axis=0)
    theta = seq[t - 1]
    after = before + theta
    b = np.empty(trials)
    f = np.empty(trials)
    for k in range(trials):
        xs, xc = sampler.draw_sum(rng)
        b[k] = oracle.utility(oracle.best_from_sum(after + xs, t + xc), theta)
        f[k] = oracle.utility(oracle.best_from_sum(before + xs, t - 1 + xc), theta) if t - 1 + xc > 0 else _empty_leader(oracle, theta)
    diff = weight * b - f
    se = float(diff.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("inf")
    return StabilityEstimate(float(diff.mean()), se, float(b.mean()), float(f.mean()), trials)


def _empty_leader(oracle, theta):
    # with nothing to follow the leader of an empty sequence is any action;
    # use the all-zero statistic for determinism
    return oracle.utility(oracle.best_from_sum(np.zeros(oracle.dim), 1), theta)
