"""Round loops: one learner against an adversary, or several learners against each other.

A *bidder* is any object with ``bid() -> bid vector`` and
``observe(theta)``; an *adversary* is a callable ``(t, past_bids) -> theta``
that sees only bids from earlier rounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .auction import MechanismKind, focal_outcome, resolve, thresholds_for
from .valuations import Valuation


@dataclass
class SoloRun:
    """Per-round trace of one learner facing threshold vectors."""

    bids: np.ndarray
    thetas: np.ndarray
    won: np.ndarray
    payments: np.ndarray
    values: np.ndarray
    chosen: list = field(default_factory=list)

    @property
    def utilities(self) -> np.ndarray:
        return self.values - self.payments

    @property
    def T(self) -> int:
        return self.bids.shape[0]


def run_bidder(bidder, val: Valuation, adversary, T: int) -> SoloRun:
    """Second-price play of ``bidder`` against thresholds from ``adversary``."""
    m = val.m
    bids = np.zeros((T, m))
    thetas = np.zeros((T, m))
    won = np.zeros((T, m), dtype=bool)
    chosen = []
    for t in range(T):
        b = np.asarray(bidder.bid(), dtype=float)
        # the adversary commits before seeing this round's bid
        theta = np.asarray(adversary(t, bids[:t]), dtype=float)
        bids[t] = b
        thetas[t] = theta
        won[t] = focal_outcome(b, theta)
        chosen.append(getattr(bidder, "last_set", None))
        bidder.observe(theta)
    values = val.value_many(won)
    payments = np.where(won, thetas, 0.0).sum(axis=1)
    return SoloRun(bids, thetas, won, payments, values, chosen)


@dataclass
class GameRun:
    """Per-round trace of ``n`` learners playing each other.

    ``thetas[t, i]`` is the highest competing bid bidder ``i`` faced.
    """

    bids: np.ndarray
    thetas: np.ndarray
    won: np.ndarray
    payments: np.ndarray
    values: np.ndarray
    mechanism: MechanismKind
    chosen: list = field(default_factory=list)

    @property
    def utilities(self) -> np.ndarray:
        return self.values - self.payments

    @property
    def welfare(self) -> np.ndarray:
        return self.values.sum(axis=1)


def simulate_game(mechanism, valuations, bidders, T: int, extra=None) -> GameRun:
    """Repeated simultaneous auctions among ``bidders``.

    ``extra`` is an optional adversary whose bid row joins every round as an
    additional non-learning competitor.
    """
    mech = MechanismKind.parse(mechanism)
    n = len(bidders)
    m = valuations[0].m
    bids = np.zeros((T, n, m))
    thetas = np.zeros((T, n, m))
    won = np.zeros((T, n, m), dtype=bool)
    pay = np.zeros((T, n))
    vals = np.zeros((T, n))
    chosen = []
    for t in range(T):
        profile = np.vstack([np.asarray(b.bid(), dtype=float) for b in bidders])
        if extra is not None:
            row = np.asarray(extra(t, bids[:t]), dtype=float)
            full = np.vstack([profile, row])
            rec = resolve(mech, full, list(valuations) + [_Null(m)])
        else:
            full = profile
            rec = resolve(mech, full, valuations)
        bids[t] = profile
        won[t] = rec.won[:n]
        pay[t] = rec.payments[:n]
        vals[t] = rec.values[:n]
        chosen.append([getattr(b, "last_set", None) for b in bidders])
        for i, b in enumerate(bidders):
            th = thresholds_for(full, i)
            thetas[t, i] = th
            b.observe(th)
    return GameRun(bids, thetas, won, pay, vals, mech, chosen)


class _Null(Valuation):
    kind = "null"

    def __init__(self, m):
        self.m = m

    def value_many(self, masks):
        return np.zeros(np.asarray(masks).shape[0])


__all__ = ["SoloRun", "GameRun", "run_bidder", "simulate_game"]
