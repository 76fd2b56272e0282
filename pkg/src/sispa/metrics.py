"""Adversaries, regret and envy benchmarks, and welfare reports."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .auction import optimal_welfare
from .buyer import envy_benchmark, running_envy_gaps
from .ftpl import make_seed_sequence
from .valuations import InstanceTooLargeError, Valuation, subset_masks

TIE_EPS = 2.0**-20
DEFAULT_GRID_CAP = 10_000_000


# -------------------------------------------------------------- adversaries


class IIDAdversary:
    """Draws each round's thresholds from a finite support."""

    def __init__(self, support, probs=None, seed=None, D=None):
        self.support = np.atleast_2d(np.asarray(support, dtype=float))
        k = self.support.shape[0]
        self.probs = np.full(k, 1.0 / k) if probs is None else np.asarray(probs, dtype=float)
        if self.probs.shape != (k,) or np.any(self.probs < 0) or abs(self.probs.sum() - 1) > 1e-12:
            raise ValueError("support probabilities must be nonnegative and sum to 1")
        _check_bound(self.support, D)
        self.rng = np.random.default_rng(make_seed_sequence(seed))

    def __call__(self, t, past_bids):
        return self.support[self.rng.choice(self.support.shape[0], p=self.probs)]


class ObliviousAdversary:
    """Replays a sequence fixed before play starts."""

    def __init__(self, sequence, D=None):
        self.sequence = np.atleast_2d(np.asarray(sequence, dtype=float))
        _check_bound(self.sequence, D)

    def __call__(self, t, past_bids):
        return self.sequence[t]


class AdaptiveAdversary:
    """Wraps ``callback(t, past_bids, rng) -> theta``; the current bid is never visible."""

    def __init__(self, callback: Callable, seed=None, D=None):
        self.callback = callback
        self.D = D
        self.rng = np.random.default_rng(make_seed_sequence(seed))

    def __call__(self, t, past_bids):
        theta = np.asarray(self.callback(t, np.array(past_bids, copy=True), self.rng), dtype=float)
        _check_bound(theta[None, :], self.D)
        return theta


class UniformAdversary:
    """I.i.d. uniform thresholds on ``[0, D]``, optionally rounded to a grid."""

    def __init__(self, m: int, D: float, seed=None, grid: float | None = None):
        self.m, self.D, self.grid = m, float(D), grid
        self.rng = np.random.default_rng(make_seed_sequence(seed))

    def __call__(self, t, past_bids):
        th = self.rng.uniform(0, self.D, self.m)
        if self.grid:
            th = np.round(th / self.grid) * self.grid
        return th


def _check_bound(thetas, D):
    if np.any(thetas < 0) or not np.all(np.isfinite(thetas)):
        raise ValueError("thresholds must be finite and nonnegative")
    if D is not None and np.any(thetas > D):
        raise ValueError(f"threshold exceeds the bound D={D}")


# --------------------------------------------------------------- benchmarks


def best_fixed_set(val: Valuation, thetas):
    """Best bundle at average prices and its cumulative buyer utility."""
    thetas = np.asarray(thetas, dtype=float)
    d = envy_benchmark(val, thetas)
    return d.bundle, d.utility * thetas.shape[0]


def best_fixed_bid(val: Valuation, thetas, cap: int = DEFAULT_GRID_CAP, tie_eps: float = TIE_EPS):
    """Best fixed bid vector in hindsight and its cumulative second-price utility.

    Per item the candidates are 0 and each distinct observed threshold plus
    a small tie margin. Winning depends only on which thresholds a bid
    exceeds, so this grid attains the supremum. ``cap`` bounds the number
    of (grid point, distinct threshold row) evaluations.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    T, m = thetas.shape
    rows, counts = np.unique(thetas, axis=0, return_counts=True)
    levels = [np.unique(thetas[:, j]) for j in range(m)]
    sizes = [len(l) + 1 for l in levels]
    work = math.prod(sizes) * rows.shape[0]
    if work > cap:
        raise InstanceTooLargeError(f"bid grid needs {work} evaluations, cap is {cap}")
    # rank[r, j] = 1 + position of rows[r, j] among the distinct levels of item j
    rank = np.column_stack([np.searchsorted(levels[j], rows[:, j]) + 1 for j in range(m)])
    grid = np.array(list(itertools.product(*[range(s) for s in sizes])), dtype=np.int64).reshape(-1, m)
    best_total, best_idx = -np.inf, 0
    chunk = max(1, 2_000_000 // max(1, rows.shape[0] * m))
    for lo in range(0, grid.shape[0], chunk):
        g = grid[lo:lo + chunk]
        won = rank[None, :, :] <= g[:, None, :]  # bid at level g wins every threshold up to it
        vals = val.value_many(won.reshape(-1, m)).reshape(g.shape[0], rows.shape[0])
        pay = (won * rows[None, :, :]).sum(axis=2)
        totals = (vals - pay) @ counts
        i = int(np.argmax(totals))
        if totals[i] > best_total:
            best_total, best_idx = float(totals[i]), lo + i
    choice = grid[best_idx]
    bid = np.zeros(m)
    for j in range(m):
        if choice[j]:
            lv = levels[j]
            gap = lv[choice[j]] - lv[choice[j] - 1] if choice[j] < len(lv) else np.inf
            bid[j] = lv[choice[j] - 1] + min(tie_eps, gap / 2)
    return bid, best_total


@dataclass
class RegretReport:
    cumulative_utility: float
    benchmark: float
    benchmark_action: object
    envy_gap: float
    trace: np.ndarray

    @property
    def regret(self) -> float:
        return self.benchmark - self.cumulative_utility


def regret_report(val: Valuation, thetas, utilities, benchmark: str = "set", alpha: float = 1.0) -> RegretReport:
    """Regret against the best fixed set (buyer problem) or best fixed bid."""
    thetas = np.asarray(thetas, dtype=float)
    utilities = np.asarray(utilities, dtype=float)
    if benchmark == "set":
        action, total = best_fixed_set(val, thetas)
    elif benchmark == "bid":
        action, total = best_fixed_bid(val, thetas)
    else:
        raise ValueError(f"unknown benchmark {benchmark!r}")
    gap = envy_benchmark(val, thetas, alpha).utility - float(utilities.mean())
    return RegretReport(float(utilities.sum()), total, action, gap, utilities)


def running_regret(val: Valuation, thetas, utilities, cap: int = DEFAULT_GRID_CAP):
    """Best-fixed-bid regret after every round, or ``None`` when the grid is too large."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    T, m = thetas.shape
    levels = [np.unique(thetas[:, j]) for j in range(m)]
    sizes = [len(l) + 1 for l in levels]
    G = math.prod(sizes)
    if G * T * m > cap:
        return None
    rank = np.column_stack([np.searchsorted(levels[j], thetas[:, j]) + 1 for j in range(m)])
    grid = np.array(list(itertools.product(*[range(s) for s in sizes])), dtype=np.int64).reshape(-1, m)
    won = rank[:, None, :] <= grid[None, :, :]
    per = val.value_many(won.reshape(-1, m)).reshape(T, G) - (won * thetas[:, None, :]).sum(axis=2)
    bench = np.cumsum(per, axis=0).max(axis=1)
    return bench - np.cumsum(np.asarray(utilities, dtype=float))


# ------------------------------------------------------------------ welfare


@dataclass
class WelfareReport:
    per_round: np.ndarray
    average: float
    opt: float
    allocation: list
    alpha: float
    eps: np.ndarray

    @property
    def ratio(self) -> float:
        return self.average / self.opt if self.opt > 0 else float("nan")

    @property
    def floor(self) -> float:
        """Guaranteed average welfare ``Opt/(2 alpha) - sum_i eps_i``."""
        return self.opt / (2 * self.alpha) - float(np.sum(self.eps))

    @property
    def holds(self) -> bool:
        return self.average >= self.floor - 1e-9


def welfare_trace(game, valuations, alpha: float = 1.0, cap: int | None = None) -> WelfareReport:
    """Average welfare of a game run against the optimum and the no-envy floor.

    Each bidder's envy gap is measured from the thresholds it faced and its
    realized utility, with values discounted by ``1/alpha``.
    """
    opt, alloc = optimal_welfare(valuations) if cap is None else optimal_welfare(valuations, cap)
    eps = np.array([
        envy_benchmark(val, game.thetas[:, i], alpha).utility - float(game.utilities[:, i].mean())
        for i, val in enumerate(valuations)
    ])
    per = game.welfare
    return WelfareReport(per, float(per.mean()), opt, alloc, alpha, eps)


# -------------------------------------------------------------- properties


def overbidding_violations(val: Valuation, bids, probes: int = 1000, rng=None, tol: float = 1e-9) -> int:
    """Count bid vectors with ``sum_{j in X} b_j > v(X)`` on some probe set ``X``.

    Every subset is checked when ``2^m <= probes``; otherwise ``probes``
    random subsets are drawn per distinct bid vector.
    """
    bids = np.unique(np.atleast_2d(np.asarray(bids, dtype=float)), axis=0)
    m = val.m
    if (1 << m) <= probes:
        X = subset_masks(m)
        vx = val.value_many(X)
        return int(np.sum(np.any(bids @ X.T > vx[None, :] + tol, axis=1)))
    rng = np.random.default_rng(rng)
    bad = 0
    for b in bids:
        X = rng.random((probes, m)) < 0.5
        bad += bool(np.any(X @ b > val.value_many(X) + tol))
    return bad


def dominance_violations(val: Valuation, sets, bids, thetas, tol: float = 1e-9) -> int:
    """Rounds where the bid's second-price utility falls below the set's buyer utility."""
    thetas = np.asarray(thetas, dtype=float)
    bids = np.asarray(bids, dtype=float)
    S = np.vstack([np.isin(np.arange(val.m), list(s)) for s in sets])
    won = bids > thetas
    bid_u = val.value_many(won) - (won * thetas).sum(axis=1)
    buy_u = val.value_many(S) - (S * thetas).sum(axis=1)
    return int(np.sum(bid_u < buy_u - tol))


def trace_rows(run_id, run, val: Valuation, alpha: float = 1.0, with_regret: bool = True):
    """Per-round CSV rows for a solo trace (see :mod:`sispa.io`)."""
    envy = running_envy_gaps(val, run.thetas, run.utilities, alpha)
    regret = running_regret(val, run.thetas, run.utilities) if with_regret else None
    weights = 1 << np.arange(val.m, dtype=np.int64)
    for t in range(run.T):
        yield {
            "run_id": run_id,
            "t": t + 1,
            "utility": float(run.utilities[t]),
            "payment": float(run.payments[t]),
            "won_set": hex(int(run.won[t].astype(np.int64) @ weights)),
            "envy_gap_running": float(envy[t]),
            "regret_running": "" if regret is None else float(regret[t]),
        }


__all__ = [
    "IIDAdversary", "ObliviousAdversary", "AdaptiveAdversary", "UniformAdversary",
    "best_fixed_set", "best_fixed_bid", "RegretReport", "regret_report", "running_regret",
    "WelfareReport", "welfare_trace", "overbidding_violations", "dominance_violations",
    "trace_rows",
]
