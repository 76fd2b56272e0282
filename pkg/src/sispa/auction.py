"""Simultaneous single-item auctions: allocation, payments, thresholds and welfare."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .valuations import InstanceTooLargeError, Valuation, as_mask, as_set

DEFAULT_WELFARE_CAP = 20_000_000


class MechanismKind(str, enum.Enum):
    SECOND_PRICE = "second_price"
    FIRST_PRICE = "first_price"
    ALL_PAY = "all_pay"

    @classmethod
    def parse(cls, name) -> "MechanismKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {"secondprice": "second_price", "firstprice": "first_price", "allpay": "all_pay"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class RoundRecord:
    """Outcome of one round. ``won`` is an ``(n, m)`` boolean allocation matrix."""

    won: np.ndarray
    payments: np.ndarray
    values: np.ndarray
    utilities: np.ndarray

    @property
    def welfare(self) -> float:
        return float(self.values.sum())

    def won_set(self, i: int) -> frozenset:
        return as_set(self.won[i])


def _check_profile(profile) -> np.ndarray:
    b = np.atleast_2d(np.asarray(profile, dtype=float))
    if b.ndim != 2 or b.shape[1] < 1:
        raise ValueError("bid profile must be an n x m matrix with m >= 1")
    if not np.all(np.isfinite(b)) or np.any(b < 0):
        raise ValueError("bids must be finite and nonnegative")
    return b


def allocate(profile) -> np.ndarray:
    """Winner matrix: highest bid wins, lowest index among tied top bids.

    Items nobody bids a positive amount on stay unallocated.
    """
    b = _check_profile(profile)
    n, m = b.shape
    won = np.zeros((n, m), dtype=bool)
    top = np.argmax(b, axis=0)
    live = b[top, np.arange(m)] > 0
    won[top[live], np.flatnonzero(live)] = True
    return won


def thresholds_for(profile, bidder: int) -> np.ndarray:
    """Highest competing bid on every item; zeros when there is no competitor."""
    b = _check_profile(profile)
    if not 0 <= bidder < b.shape[0]:
        raise IndexError(f"bidder {bidder} out of range for {b.shape[0]} bidders")
    others = np.delete(b, bidder, axis=0)
    if others.shape[0] == 0:
        return np.zeros(b.shape[1])
    return others.max(axis=0)


def resolve(mechanism, profile, valuations) -> RoundRecord:
    mech = MechanismKind.parse(mechanism)
    b = _check_profile(profile)
    n, m = b.shape
    if len(valuations) != n:
        raise ValueError(f"{n} bid rows but {len(valuations)} valuations")
    for i, val in enumerate(valuations):
        if val.m != m:
            raise ValueError(f"valuation {i} is over {val.m} items, bids are over {m}")
    won = allocate(b)
    if mech is MechanismKind.SECOND_PRICE:
        theta = np.vstack([thresholds_for(b, i) for i in range(n)])
        payments = np.where(won, theta, 0.0).sum(axis=1)
    elif mech is MechanismKind.FIRST_PRICE:
        payments = np.where(won, b, 0.0).sum(axis=1)
    else:
        payments = b.sum(axis=1)
    values = np.array([val.value(won[i]) for i, val in enumerate(valuations)])
    return RoundRecord(won, payments, values, values - payments)


def threshold_payment(mechanism, S, theta) -> float:
    """Least total payment that wins exactly ``S`` against thresholds ``theta``.

    Additive for all three supported mechanisms.
    """
    MechanismKind.parse(mechanism)
    theta = np.asarray(theta, dtype=float)
    return float(theta[as_mask(S, theta.shape[0])].sum())


def focal_outcome(bid, theta) -> np.ndarray:
    """Items a single learner wins against thresholds: strict inequality only."""
    return np.asarray(bid, dtype=float) > np.asarray(theta, dtype=float)


def bid_utility(val: Valuation, bid, theta) -> float:
    """Second-price utility of a bid vector facing threshold vector ``theta``."""
    win = focal_outcome(bid, theta)
    return val.value(win) - float(np.asarray(theta, dtype=float)[win].sum())


def _split_pairs(m: int):
    # base-3 digits per item: 0 = outside mask, 1 = in mask only, 2 = in mask and submask
    codes = np.arange(3**m, dtype=np.int64)
    mask = np.zeros_like(codes)
    sub = np.zeros_like(codes)
    for j in range(m):
        d = (codes // 3**j) % 3
        mask |= (d >= 1).astype(np.int64) << j
        sub |= (d == 2).astype(np.int64) << j
    return mask, sub


def optimal_welfare(valuations, cap: int = DEFAULT_WELFARE_CAP):
    """Exact welfare optimum and an optimal allocation (list of frozensets).

    Dynamic program over bidders and item subsets; the work is ``n * 3**m``
    which must stay within ``cap``.
    """
    vals = list(valuations)
    if not vals:
        raise ValueError("need at least one valuation")
    m = vals[0].m
    if any(v.m != m for v in vals):
        raise ValueError("valuations disagree on the item count")
    n = len(vals)
    if n == 1:
        full = frozenset(range(m))
        return vals[0].value(full), [full]
    if n * 3**m > cap:
        raise InstanceTooLargeError(f"welfare program needs {n}*3^{m} steps, cap is {cap}")
    size = 1 << m
    tables = [v.value_table(cap=m) for v in vals]
    mask, sub = _split_pairs(m)
    best = tables[0].copy()
    choice = []
    for i in range(1, n):
        cand = tables[i][sub] + best[mask ^ sub]
        order = np.lexsort((sub, -cand, mask))
        first = np.ones(order.shape[0], dtype=bool)
        first[1:] = mask[order][1:] != mask[order][:-1]
        pick = order[first]
        new_best = np.empty(size)
        new_best[mask[pick]] = cand[pick]
        arg = np.empty(size, dtype=np.int64)
        arg[mask[pick]] = sub[pick]
        choice.append(arg)
        best = new_best
    full = size - 1
    alloc = [0] * n
    rest = full
    for i in range(n - 1, 0, -1):
        alloc[i] = int(choice[i - 1][rest])
        rest ^= alloc[i]
    alloc[0] = rest
    sets = [frozenset(j for j in range(m) if a >> j & 1) for a in alloc]
    return float(best[full]), sets
