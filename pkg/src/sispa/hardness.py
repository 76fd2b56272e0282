"""From set cover to optimal bidding: instance construction, exact solvers and the sampling estimator.

An ``r``-regular set cover instance with ``k`` elements and ``m`` sets becomes
a bidding problem over ``m`` items for a unit-demand bidder with value
``v = 2km``. Thresholds come from ``k`` equally likely vectors in
``{1, H}^m`` with ``H = k^2 m^2``; vector ``i`` is cheap exactly on the sets
containing element ``i``. Bidding any level in ``(1, H)`` on a set of items
``S`` wins a cheap item unless ``S`` misses element ``i``'s sets entirely,
so the best bid corresponds to a minimum set cover:
``OPT = v - OPT_c * r / k``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .valuations import InstanceTooLargeError

BIDDING_CAP = 25
COVER_CAP = 25


@dataclass(frozen=True)
class SetCoverInstance:
    """``k`` elements labelled ``1..k`` and ``m`` sets of equal size ``r``."""

    k: int
    sets: tuple

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(int(e) for e in s) for s in self.sets))
        if self.k < 1 or not self.sets:
            raise ValueError("set cover needs at least one element and one set")
        sizes = {len(s) for s in self.sets}
        if len(sizes) != 1:
            raise ValueError(f"set cover instance is not regular: set sizes {sorted(sizes)}")
        for j, s in enumerate(self.sets):
            bad = [e for e in s if not 1 <= e <= self.k]
            if bad:
                raise ValueError(f"set {j + 1} has elements outside 1..{self.k}: {sorted(bad)}")
        uncovered = set(range(1, self.k + 1)).difference(*self.sets)
        if uncovered:
            raise ValueError(f"elements {sorted(uncovered)} are in no set")

    @property
    def m(self) -> int:
        return len(self.sets)

    @property
    def r(self) -> int:
        return len(self.sets[0])


@dataclass(frozen=True)
class BiddingHardnessInstance:
    """Bidding problem produced by :func:`reduce`.

    ``thresholds[i]`` is the ``i``-th equally likely threshold vector and
    ``cheap[i]`` the item set ``T_i`` where it equals 1.
    """

    k: int
    m: int
    r: int
    v: int
    H: int
    thresholds: np.ndarray
    cheap: tuple

    def to_dict(self) -> dict:
        return {
            "k": self.k, "m": self.m, "r": self.r, "v": self.v, "H": self.H,
            "thresholds": self.thresholds.astype(int).tolist(),
            "cheap_sets": [sorted(c) for c in self.cheap],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BiddingHardnessInstance":
        th = np.asarray(d["thresholds"], dtype=float)
        cheap = tuple(frozenset(np.flatnonzero(row == 1).tolist()) for row in th)
        inst = cls(int(d["k"]), int(d["m"]), int(d["r"]), int(d["v"]), int(d["H"]), th, cheap)
        if th.shape != (inst.k, inst.m) or not np.all((th == 1) | (th == inst.H)):
            raise ValueError("thresholds must be a k x m array with entries in {1, H}")
        return inst


def random_regular_cover(k: int, m: int, r: int, rng) -> SetCoverInstance:
    """Random ``r``-regular instance covering every element, sets in canonical order.

    Requires ``r <= k`` and ``m * r >= k``.
    """
    if not 1 <= r <= k:
        raise ValueError(f"need 1 <= r <= k, got r={r}, k={k}")
    if m * r < k:
        raise ValueError(f"{m} sets of size {r} cannot cover {k} elements")
    if m > math.comb(k, r):
        raise ValueError(f"only {math.comb(k, r)} distinct {r}-subsets of {k} elements exist")
    rng = np.random.default_rng(rng)
    while True:
        sets = set()
        # seed with sets that guarantee coverage, then fill with random distinct sets
        order = rng.permutation(np.arange(1, k + 1))
        for start in range(0, k, r):
            chunk = list(order[start:start + r])
            if len(chunk) < r:
                extra = [e for e in rng.permutation(np.arange(1, k + 1)) if e not in chunk]
                chunk += extra[: r - len(chunk)]
            sets.add(frozenset(int(e) for e in chunk))
        while len(sets) < m:
            sets.add(frozenset(int(e) for e in rng.choice(np.arange(1, k + 1), size=r, replace=False)))
        if len(sets) == m:
            ordered = sorted(sets, key=lambda s: sorted(s))
            return SetCoverInstance(k, tuple(ordered))


def reduce(sc: SetCoverInstance) -> BiddingHardnessInstance:
    k, m, r = sc.k, sc.m, sc.r
    H = k * k * m * m
    v = 2 * k * m
    th = np.full((k, m), float(H))
    cheap = []
    for i in range(1, k + 1):
        items = frozenset(j for j, s in enumerate(sc.sets) if i in s)
        th[i - 1, sorted(items)] = 1.0
        cheap.append(items)
    th.flags.writeable = False
    return BiddingHardnessInstance(k, m, r, v, H, th, tuple(cheap))


def _masks_of(sets: Sequence[frozenset]) -> np.ndarray:
    return np.array([sum(1 << j for j in s) for s in sets], dtype=np.int64)


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.uint64)
    count = np.zeros(a.shape, dtype=np.int64)
    while np.any(a):
        count += (a & np.uint64(1)).astype(np.int64)
        a >>= np.uint64(1)
    return count


def scaled_utilities(inst: BiddingHardnessInstance, codes: np.ndarray) -> np.ndarray:
    """``k`` times the expected utility of bidding the level on each item set (bitmask)."""
    cheap = _masks_of(inst.cheap)
    miss = np.zeros(codes.shape, dtype=np.int64)
    paid = np.zeros(codes.shape, dtype=np.int64)
    for c in cheap:
        hit = codes & c
        miss += hit == 0
        paid += _popcount(hit)
    return inst.v * (inst.k - miss) - paid


def solve_bidding_exact(inst: BiddingHardnessInstance, cap: int = BIDDING_CAP):
    """Exact optimum over bids of the level on ``S`` and 0 elsewhere.

    Returns ``(OPT as Fraction, S)``; ties go to the lexicographically
    smallest sorted index tuple.
    """
    if inst.m > cap:
        raise InstanceTooLargeError(f"2^{inst.m} bid sets exceeds the cap 2^{cap}")
    best, winners = None, []
    chunk = 1 << 20
    for lo in range(0, 1 << inst.m, chunk):
        codes = np.arange(lo, min(lo + chunk, 1 << inst.m), dtype=np.int64)
        u = scaled_utilities(inst, codes)
        top = int(u.max())
        if best is None or top > best:
            best, winners = top, []
        if top == best:
            winners.extend(codes[u == top].tolist())
    tuples = [tuple(j for j in range(inst.m) if c >> j & 1) for c in winners]
    return Fraction(best, inst.k), frozenset(min(tuples))


def min_set_cover(sc: SetCoverInstance, cap: int = COVER_CAP) -> int:
    """Size of a smallest cover, by trying selections of increasing size."""
    if sc.m > cap:
        raise InstanceTooLargeError(f"{sc.m} sets exceeds the cover enumeration cap {cap}")
    universe = frozenset(range(1, sc.k + 1))
    for size in range(1, sc.m + 1):
        for pick in itertools.combinations(sc.sets, size):
            if frozenset().union(*pick) == universe:
                return size
    raise ValueError("instance has no cover")


def opt_from_cover(inst: BiddingHardnessInstance, cover_size: int) -> Fraction:
    return inst.v - Fraction(cover_size * inst.r, inst.k)


def cover_from_apx(inst: BiddingHardnessInstance, apx) -> float:
    """Cover-size estimate ``Q`` with ``Q <= OPT_c <= 3Q`` whenever ``|apx - OPT| <= 1/(2k)``."""
    return (2 * inst.k - 1) * (inst.v - float(apx)) / (2 * inst.r)


def bid_expected_utility(inst: BiddingHardnessInstance, bid) -> float:
    """Expected utility of an arbitrary bid vector over the ``k`` threshold vectors."""
    bid = np.asarray(bid, dtype=float)
    won = bid[None, :] > inst.thresholds
    pay = np.where(won, inst.thresholds, 0.0).sum(axis=1)
    return float(np.mean(inst.v * won.any(axis=1) - pay))


# ---------------------------------------------------------------- estimator


def sample_thresholds(inst: BiddingHardnessInstance, T: int, rng) -> np.ndarray:
    rng = np.random.default_rng(rng)
    return np.asarray(inst.thresholds)[rng.integers(inst.k, size=T)]


def realized_utilities(inst: BiddingHardnessInstance, bids, thetas) -> np.ndarray:
    won = np.asarray(bids) > np.asarray(thetas)
    return inst.v * won.any(axis=1) - np.where(won, thetas, 0.0).sum(axis=1)


def _set_table(inst, thetas, level):
    """Utility of every item set (bitmask) against every round's thresholds."""
    if inst.m > 16:
        raise InstanceTooLargeError("follow-the-leader learner enumerates at most 2^16 sets")
    codes = np.arange(1 << inst.m, dtype=np.int64)
    masks = ((codes[:, None] >> np.arange(inst.m)) & 1).astype(bool)
    support, idx = np.unique(np.asarray(thetas), axis=0, return_inverse=True)
    won = masks[None, :, :] & (level > support[:, None, :])
    util = inst.v * won.any(axis=2) - np.where(won, support[:, None, :], 0.0).sum(axis=2)
    return masks, util[idx.reshape(-1)]


@dataclass
class FollowTheLeader:
    """Bid the level on the set with the best cumulative utility so far.

    Round 1 has no history and plays the empty set; ties go to the lowest bitmask.
    """

    inst: BiddingHardnessInstance
    level: float = 2.0

    def __call__(self, thetas, rng=None):
        masks, util = _set_table(self.inst, thetas, self.level)
        cum = np.vstack([np.zeros(util.shape[1]), np.cumsum(util, axis=0)[:-1]])
        return np.where(masks[np.argmax(cum, axis=1)], self.level, 0.0)


@dataclass
class ConstantBid:
    """Bid the level on every item in every round."""

    inst: BiddingHardnessInstance
    level: float = 2.0

    def __call__(self, thetas, rng=None):
        return np.full(np.shape(thetas), self.level)


@dataclass
class PerturbedLeader:
    """Follow the leader with geometric fake counts on the ``k`` support vectors."""

    inst: BiddingHardnessInstance
    level: float = 2.0
    p: float | None = None

    def __call__(self, thetas, rng=None):
        rng = np.random.default_rng(rng)
        thetas = np.asarray(thetas)
        T = thetas.shape[0]
        k = self.inst.k
        p = min(1.0, math.sqrt(k / T)) if self.p is None else self.p
        masks, util = _set_table(self.inst, np.vstack([self.inst.thresholds, thetas]), self.level)
        base = util[:k]  # utility of each set against each support vector
        fake = (rng.geometric(p, size=k) - 1).astype(float) @ base
        cum = fake + np.vstack([np.zeros(util.shape[1]), np.cumsum(util[k:], axis=0)[:-1]])
        return np.where(masks[np.argmax(cum, axis=1)], self.level, 0.0)


def estimator_half_width(inst: BiddingHardnessInstance, T: int, N: int, zeta: float = 0.05,
                         eps_T: float = 0.0) -> float:
    """``eps(T) + c(N, delta) + c(T, delta)`` with ``delta = zeta/(N+2)`` and
    ``c(n, delta) = k m sqrt(2 ln(2/delta) / n)``."""
    delta = zeta / (N + 2)
    c = lambda n: inst.k * inst.m * math.sqrt(2 * math.log(2 / delta) / n)
    return eps_T + c(N) + c(T)


@dataclass
class EstimatorResult:
    estimate: float
    half_width: float
    averages: np.ndarray
    T: int
    N: int
    zeta: float


def _one_repetition(args):
    inst, learner, thetas, seed = args
    bids = learner(thetas, np.random.default_rng(seed))
    return float(realized_utilities(inst, bids, thetas).mean())


def regret_to_opt_estimator(inst: BiddingHardnessInstance, learner: Callable, T: int, N=None,
                            rng=None, zeta: float = 0.05, eps_T: float = 0.0,
                            threads: int = 1) -> EstimatorResult:
    """Average a learner's utility over ``N`` runs on one i.i.d. threshold sequence.

    ``learner(thetas, rng)`` returns the ``T x m`` bids it would place when
    seeing ``thetas`` one round at a time; it must only use past rows.
    """
    N = T if N is None else N
    if T < 1 or N < 1:
        raise ValueError("T and N must be positive")
    ss = np.random.SeedSequence(rng) if not isinstance(rng, np.random.SeedSequence) else rng
    seq_seed, *rep_seeds = ss.spawn(N + 1)
    thetas = sample_thresholds(inst, T, np.random.default_rng(seq_seed))
    jobs = [(inst, learner, thetas, s) for s in rep_seeds]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            avgs = list(pool.map(_one_repetition, jobs, chunksize=max(1, N // (4 * threads))))
    else:
        avgs = [_one_repetition(j) for j in jobs]
    avgs = np.asarray(avgs)
    return EstimatorResult(float(avgs.mean()), estimator_half_width(inst, T, N, zeta, eps_T), avgs, T, N, zeta)
