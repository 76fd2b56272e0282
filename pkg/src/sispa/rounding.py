"""Poisson convex rounding for coverage valuations and the projected-gradient learner.

A marginal vector ``x`` in ``[0, 1]^m`` is rounded by including item ``j``
independently with probability ``1 - exp(-x_j)``. For coverage valuations the
expected value ``F(x)`` has a closed form, is concave, and on integral points
is within a ``1 - 1/e`` factor of the true value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .buyer import NoEnvyBidder
from .ftpl import make_seed_sequence
from .simulate import SoloRun, run_bidder
from .valuations import CoverageValuation


def _load(cov: CoverageValuation, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x @ cov.incidence.astype(float)  # per-vertex sum of x over covering items


def F_value(cov: CoverageValuation, x) -> float:
    """Expected coverage value under Poisson rounding of ``x``."""
    return float(cov.weights @ -np.expm1(-_load(cov, x)))


def F_gradient(cov: CoverageValuation, x) -> np.ndarray:
    return cov.incidence.astype(float) @ (cov.weights * np.exp(-_load(cov, x)))


def inclusion_probs(x) -> np.ndarray:
    return -np.expm1(-np.asarray(x, dtype=float))


def project_box(y) -> np.ndarray:
    return np.clip(np.asarray(y, dtype=float), 0.0, 1.0)


def poisson_round(x, rng: np.random.Generator) -> np.ndarray:
    return rng.random(np.shape(x)) < inclusion_probs(x)


def gradient_bound(cov: CoverageValuation, K: float):
    """``(H', G)`` with ``H' = max_j v({j}) sqrt(m)`` and ``G = H' + sqrt(m K)``."""
    m = cov.m
    h = float(cov.singleton_values().max()) * math.sqrt(m)
    return h, h + math.sqrt(m * K)


def pgd_guarantee(cov: CoverageValuation, K: float, T: int) -> float:
    """Average-utility shortfall allowed against the ``(1 - 1/e)``-discounted benchmark."""
    h, G = gradient_bound(cov, K)
    return 3 * G * math.sqrt(cov.m / T)


class PGDCoverageLearner:
    """Projected gradient ascent on ``f^t(x) = F(x) - <theta^t, x>``.

    ``step="standard"`` uses ``eta_t = sqrt(m) / (G sqrt(t))``;
    ``step="printed"`` uses ``eta_t = G / (sqrt(m) sqrt(t))`` for comparison.
    """

    def __init__(self, cov: CoverageValuation, K: float, seed=None, step: str = "standard"):
        if step not in ("standard", "printed"):
            raise ValueError(f"unknown step schedule {step!r}")
        self.cov = cov
        self.K = float(K)
        self.step = step
        _, self.G = gradient_bound(cov, self.K)
        self.x = np.zeros(cov.m)
        self.t = 0
        self.rng = np.random.default_rng(make_seed_sequence(seed))
        self.history = []

    def eta(self, t: int) -> float:
        if self.G == 0:
            return 0.0
        root_m = math.sqrt(self.cov.m)
        if self.step == "standard":
            return root_m / (self.G * math.sqrt(t))
        return self.G / (root_m * math.sqrt(t))

    def choose(self) -> frozenset:
        self.history.append(self.x.copy())
        return frozenset(np.flatnonzero(poisson_round(self.x, self.rng)).tolist())

    def expected_utility(self, theta) -> float:
        """Exact expected buyer utility of the current rounding against ``theta``."""
        return F_value(self.cov, self.x) - float(np.asarray(theta) @ inclusion_probs(self.x))

    def observe(self, theta):
        self.t += 1
        grad = F_gradient(self.cov, self.x) - np.asarray(theta, dtype=float)
        self.x = project_box(self.x + self.eta(self.t) * grad)


@dataclass
class PGDRun:
    sets: list
    xs: np.ndarray
    thetas: np.ndarray
    realized: np.ndarray
    expected: np.ndarray


def pgd_coverage_learner(cov: CoverageValuation, T: int, K: float, adversary, seed=None,
                         step: str = "standard") -> PGDRun:
    """Run the buyer-side learner for ``T`` rounds against ``adversary``.

    The adversary receives the marginal vectors played so far.
    """
    learner = PGDCoverageLearner(cov, K, seed, step)
    sets, thetas, realized, expected = [], np.zeros((T, cov.m)), np.zeros(T), np.zeros(T)
    for t in range(T):
        S = learner.choose()
        theta = np.asarray(adversary(t, np.asarray(learner.history[:-1])), dtype=float)
        mask = np.zeros(cov.m, dtype=bool)
        mask[list(S)] = True
        sets.append(S)
        thetas[t] = theta
        realized[t] = cov.value(mask) - float(theta[mask].sum())
        expected[t] = learner.expected_utility(theta)
        learner.observe(theta)
    return PGDRun(sets, np.asarray(learner.history), thetas, realized, expected)


def coverage_bidder(cov: CoverageValuation, K: float, seed=None, step: str = "standard"):
    """Bidder that samples sets from the PGD learner and bids their XOS clauses."""
    return NoEnvyBidder(cov, PGDCoverageLearner(cov, K, seed, step))


def run_coverage_bidder(cov: CoverageValuation, K: float, adversary, T: int, seed=None) -> SoloRun:
    return run_bidder(coverage_bidder(cov, K, seed), cov, adversary, T)
