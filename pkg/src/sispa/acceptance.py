"""The acceptance battery: ten seeded checks of oracle exactness and finite-horizon bounds.

Each ``criterion_*`` function returns a :class:`CriterionResult`; the pytest
suite and the ``sispa suite`` command both run them. Expensive simulations
are cached so the no-overbidding audit can reuse the runs of the regret
and welfare checks.
"""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass

import numpy as np

from .auction import focal_outcome
from .buyer import NoEnvyBidder, buyer_utilities, envy_benchmark, envy_gap, ftpl_buyer, set_to_bid
from .ftpl import (
    BuyerOracle,
    FiniteOracle,
    GeometricSampler,
    be_the_leader_check,
    default_coin,
    demand_regret_bound,
    finite_regret_bound,
    ftpl_finite_run,
    stability_estimate,
)
from .hardness import (
    FollowTheLeader,
    SetCoverInstance,
    min_set_cover,
    opt_from_cover,
    random_regular_cover,
    reduce,
    regret_to_opt_estimator,
    solve_bidding_exact,
)
from .metrics import ObliviousAdversary, best_fixed_set, dominance_violations, overbidding_violations, welfare_trace
from .rounding import F_gradient, F_value, coverage_bidder, inclusion_probs, pgd_coverage_learner, pgd_guarantee
from .simulate import run_bidder, simulate_game
from .valuations import (
    AdditiveValuation,
    CoverageValuation,
    ExplicitXOS,
    UnitDemandUniform,
    brute_force_demand,
)

E_FACTOR = 1 - 1 / math.e


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float
    limit: float | None = None

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        budget = f" / {self.limit:.0f} s" if self.limit else ""
        return f"[{tag}] criterion {self.number:>2} {self.title}: {self.detail} ({self.seconds:.1f} s{budget})"


def _timed(number, title, limit=None):
    def wrap(fn):
        @functools.wraps(fn)
        def run() -> CriterionResult:
            t0 = time.perf_counter()
            ok, detail = fn()
            dt = time.perf_counter() - t0
            within = limit is None or dt < limit
            if not within:
                detail += f"; runtime {dt:.1f} s over budget"
            return CriterionResult(number, title, bool(ok and within), detail, dt, limit)

        run.number = number
        return run

    return wrap


def _random_coverage(rng, m_lo=2, m_hi=6, v_hi=9, w_hi=3.0, p=0.4) -> CoverageValuation:
    m = int(rng.integers(m_lo, m_hi + 1))
    V = int(rng.integers(1, v_hi + 1))
    edges = [np.flatnonzero(rng.random(V) < p).tolist() for _ in range(m)]
    return CoverageValuation(rng.uniform(0, w_hi, V), edges)


# ---------------------------------------------------------------- criterion 1


@_timed(1, "XOS demand closed form equals enumeration", limit=30)
def criterion_1():
    rng = np.random.default_rng(101)
    mismatches = 0
    for _ in range(1000):
        m = int(rng.integers(1, 13))
        L = int(rng.integers(1, 9))
        # sixteenths keep every sum exact in floating point
        clauses = rng.integers(0, 65, size=(L, m)) / 16
        prices = rng.integers(0, 49, size=m) / 16
        val = ExplicitXOS(clauses)
        closed = val.demand(prices)
        codes = np.arange(1 << m)
        masks = ((codes[:, None] >> np.arange(m)) & 1).astype(float)
        enum = float(((masks @ clauses.T).max(axis=1) - masks @ prices).max())
        S = np.isin(np.arange(m), list(closed.bundle)).astype(float)
        achieved = float((S @ clauses.T).max() - S @ prices)
        mismatches += closed.utility != enum or achieved != enum
    return mismatches == 0, f"{mismatches} mismatches over 1000 instances"


# ---------------------------------------------------------------- criterion 2


@_timed(2, "set-cover identity for the optimal bid", limit=60)
def criterion_2():
    rng = np.random.default_rng(202)
    bad = 0
    for _ in range(200):
        k = int(rng.integers(2, 7))
        r = int(rng.integers(1, k + 1))
        m = int(rng.integers(-(-k // r), min(10, math.comb(k, r)) + 1))
        sc = random_regular_cover(k, m, r, rng)
        inst = reduce(sc)
        opt, _ = solve_bidding_exact(inst)
        bad += opt != opt_from_cover(inst, min_set_cover(sc))
    worked = reduce(SetCoverInstance(2, ({1}, {2})))
    opt, S = solve_bidding_exact(worked)
    ok = bad == 0 and opt == 7 and S == frozenset({0, 1})
    return ok, f"{bad} identity failures over 200 covers; worked instance OPT = {opt}"


# ---------------------------------------------------------------- criterion 3


@_timed(3, "regret-to-optimum estimator", limit=300)
def criterion_3():
    inst = reduce(SetCoverInstance(2, ({1}, {2})))
    res = regret_to_opt_estimator(inst, FollowTheLeader(inst), T=2000, N=2000, rng=303, zeta=0.05)
    err = abs(res.estimate - 7)
    ok = err <= res.half_width and err <= 0.6
    return ok, f"estimate {res.estimate:.4f}, |error| {err:.4f}, half-width {res.half_width:.4f}"


# ---------------------------------------------------------------- criterion 4


def _random_xos(rng, m, H, L_hi=5):
    L = int(rng.integers(1, L_hi + 1))
    c = rng.random((L, m))
    return ExplicitXOS(c * (H / c.sum(axis=1).max()))


def _oblivious_sequences(rng, horizons, m, D, pattern):
    """One oblivious adversary per pattern, played out at each horizon.

    The adversary's parameters are drawn once, so the horizons differ only
    in length: i.i.d. draws share a prefix, the alternating pair is the
    same, and the drift runs between the same endpoints.
    """
    Tmax = max(horizons)
    if pattern == 0:
        full = rng.uniform(0, D, (Tmax, m))
        return {T: full[:T] for T in horizons}
    if pattern == 1:
        base = rng.uniform(0, D, (2, m))
        return {T: base[np.arange(T) % 2] for T in horizons}
    a, b = rng.uniform(0, D, m), rng.uniform(0, D, m)
    noise = rng.normal(0, 0.3, (Tmax, m))
    out = {}
    for T in horizons:
        s = np.linspace(0, 1, T)[:, None]
        out[T] = np.clip(a * (1 - s) + b * s + noise[:T], 0, D)
    return out


@functools.lru_cache(maxsize=1)
def ftpl_runs():
    """Twenty seeded buyer instances, each against one adversary at horizons 1000 and 4000."""
    out = []
    for r in range(20):
        rng = np.random.default_rng(400 + r)
        m = int(rng.integers(3, 9))
        D = float(rng.integers(1, 5))
        H = float(rng.integers(4, 11))
        val = _random_xos(rng, m, H)
        rec = {"val": val, "m": m, "D": D, "H": H}
        seqs = _oblivious_sequences(rng, (1000, 4000), m, D, r % 3)
        for T, th in seqs.items():
            run = run_bidder(NoEnvyBidder(val, ftpl_buyer(val, T, H=H, D=D, seed=r)), val,
                             ObliviousAdversary(th, D=D), T)
            bu = buyer_utilities(val, run.chosen, th)
            rec[T] = {"run": run, "buyer": bu, "regret": best_fixed_set(val, th)[1] - bu.sum(),
                      "gap": envy_gap(val, th, bu)}
        out.append(rec)
    return out


@_timed(4, "FTPL regret bound and envy-gap decay", limit=600)
def criterion_4():
    runs = ftpl_runs()
    over = [r for r in runs if r[4000]["regret"] > demand_regret_bound(r["m"], r["D"], r["H"], 4000)]
    worst = max(r[4000]["regret"] / demand_regret_bound(r["m"], r["D"], r["H"], 4000) for r in runs)
    g1 = float(np.mean([r[1000]["gap"] for r in runs]))
    g4 = float(np.mean([r[4000]["gap"] for r in runs]))
    ok = not over and g4 <= 0.6 * g1
    return ok, (f"{len(over)} of {len(runs)} runs over the bound (worst regret/bound {worst:.3f}); "
                f"mean envy gap {g1:.4f} at T=1000, {g4:.4f} at T=4000 (ratio {g4 / g1:.3f})")


# ---------------------------------------------------------------- criterion 5


class _BruteBuyerOracle(BuyerOracle):
    def best_from_sum(self, total, count):
        return brute_force_demand(self.val, np.asarray(total) / count).bundle


@_timed(5, "be-the-leader inequality")
def criterion_5():
    rng = np.random.default_rng(505)
    failures = 0
    for i in range(500):
        kind = i % 5
        m = int(rng.integers(1, 9))
        T = int(rng.integers(1, 51))
        D = float(rng.uniform(0.5, 4))
        if kind == 4:
            d = int(rng.integers(1, 9))
            oracle = FiniteOracle(rng.uniform(0, 5, (int(rng.integers(1, 10)), d)))
            seq = np.eye(d)[rng.integers(d, size=T)]
        else:
            if kind == 0:
                val = _random_xos(rng, m, rng.uniform(1, 10))
            elif kind == 1:
                val = _random_coverage(rng, 1, m)
            elif kind == 2:
                val = UnitDemandUniform(rng.uniform(0, 8), m)
            else:
                val = AdditiveValuation(rng.uniform(0, 4, m))
            oracle = _BruteBuyerOracle(val)
            if i % 2:
                base = rng.uniform(0, D, (2, val.m))
                seq = base[np.arange(T) % 2]
            else:
                seq = rng.uniform(0, D, (T, val.m))
        failures += not be_the_leader_check(seq, oracle, n_random=8, rng=rng)
    return failures == 0, f"{failures} failures over 500 sequences"


# ---------------------------------------------------------------- criterion 6


@_timed(6, "Poisson rounding certificate")
def criterion_6():
    rng = np.random.default_rng(606)
    concave = grad = prob = approx = 0
    worst_rel = 0.0
    h = 1e-5
    for _ in range(1000):
        cov = _random_coverage(rng, 1, 8)
        m = cov.m
        x, y = rng.random(m), rng.random(m)
        concave += F_value(cov, (x + y) / 2) < (F_value(cov, x) + F_value(cov, y)) / 2 - 1e-9
        z = rng.uniform(h, 1 - h, m)
        g = F_gradient(cov, z)
        fd = np.array([(F_value(cov, z + h * e) - F_value(cov, z - h * e)) / (2 * h) for e in np.eye(m)])
        scale = np.maximum(np.abs(g), np.abs(fd))
        rel = np.where(scale > 0, np.abs(g - fd) / np.where(scale > 0, scale, 1), 0.0)
        worst_rel = max(worst_rel, float(rel.max()))
        grad += bool(np.any(rel > 1e-6))
        xs = np.concatenate([x, [0.0, 1.0]])
        prob += bool(np.any(inclusion_probs(xs) > xs))
        S = rng.random(m) < 0.5
        approx += F_value(cov, S.astype(float)) < E_FACTOR * cov.value(S) - 1e-12
    total = concave + grad + prob + approx
    return total == 0, (f"violations: concavity {concave}, gradient {grad} (worst rel {worst_rel:.1e}), "
                        f"inclusion {prob}, integral {approx}")


# ---------------------------------------------------------------- criterion 7


@_timed(7, "projected-gradient coverage learner")
def criterion_7():
    worst = 0.0
    fails = 0
    for r in range(20):
        rng = np.random.default_rng(700 + r)
        cov = _random_coverage(rng)
        K = float(rng.integers(1, 4))
        for T in (1000, 4000):
            th = rng.uniform(0, K, (T, cov.m))
            run = pgd_coverage_learner(cov, T, K, ObliviousAdversary(th), seed=[r, T])
            bench = envy_benchmark(cov, th, alpha=1 / E_FACTOR).utility
            allowed = pgd_guarantee(cov, K, T)
            short = max(bench - run.realized.mean(), bench - run.expected.mean())
            worst = max(worst, short / allowed)
            fails += short > allowed
    return fails == 0, f"{fails} of 40 runs over the bound; worst shortfall/bound {worst:.4f}"


# ---------------------------------------------------------------- criterion 8


@_timed(8, "finite-parameter FTPL regret and stability")
def criterion_8():
    regret_fail = stab_fail = 0
    worst = 0.0
    T = 4000
    for r in range(20):
        rng = np.random.default_rng(800 + r)
        d = int(rng.integers(1, 9))
        H = float(rng.integers(1, 11))
        U = rng.uniform(0, H, (int(rng.integers(2, 12)), d))
        idx = rng.choice(d, T, p=rng.dirichlet(np.ones(d)))
        oracle = FiniteOracle(U)
        run = ftpl_finite_run(list(range(d)), idx, oracle, rng=rng)
        bound = finite_regret_bound(H, d, T)
        worst = max(worst, run.regret / bound)
        regret_fail += run.regret > bound
        p = default_coin(d, T)
        seq = np.eye(d)[idx]
        for t in np.linspace(1, T, 10).astype(int):
            est = stability_estimate(seq, GeometricSampler(p, d), oracle, int(t), 2000, rng=rng, weight=1 - p)
            # est.mean estimates (1-p) BTPL - FTPL; the claim is that it is <= 0
            stab_fail += est.mean > 2 * est.se
    ok = regret_fail == 0 and stab_fail == 0
    return ok, (f"{regret_fail} of 20 runs over 2H sqrt(dT) (worst ratio {worst:.3f}); "
                f"{stab_fail} of 200 stability checks outside 2 SE")


# ---------------------------------------------------------------- criterion 9


@_timed(9, "no overbidding and set-to-bid dominance")
def criterion_9():
    over = dom = rounds = 0
    rng = np.random.default_rng(909)
    for rec in ftpl_runs():
        val = rec["val"]
        for T in (1000, 4000):
            run = rec[T]["run"]
            over += overbidding_violations(val, run.bids, probes=1000, rng=rng)
            dom += dominance_violations(val, run.chosen, run.bids, run.thetas)
            rounds += T
    for kind, games in welfare_games().items():
        for vals, game, _ in games:
            for i, val in enumerate(vals):
                over += overbidding_violations(val, game.bids[:, i], probes=1000, rng=rng)
                dom += dominance_violations(val, [c[i] for c in game.chosen], game.bids[:, i], game.thetas[:, i])
                rounds += game.bids.shape[0]
    # a direct probe of the bid rule on random sets and thresholds
    for _ in range(1000):
        m = int(rng.integers(1, 7))
        val = _random_xos(rng, m, 6) if rng.random() < 0.5 else _random_coverage(rng, 1, m)
        S = frozenset(np.flatnonzero(rng.random(val.m) < 0.5).tolist())
        b = set_to_bid(val, S)
        th = rng.uniform(0, 3, val.m)
        won = focal_outcome(b, th)
        bid_u = val.value(won) - th[won].sum()
        Smask = np.isin(np.arange(val.m), list(S))
        dom += bid_u < val.value(Smask) - th[Smask].sum() - 1e-9
        over += overbidding_violations(val, b[None, :], probes=1000, rng=rng)
    return over == 0 and dom == 0, f"{over} overbidding and {dom} dominance violations over {rounds} rounds and 1000 probes"


# --------------------------------------------------------------- criterion 10


@functools.lru_cache(maxsize=1)
def welfare_games():
    """Seeded two-bidder games at T=4000: XOS bidders with demand oracles, coverage bidders with PGD."""
    T = 4000
    xos, cov = [], []
    for r in range(10):
        rng = np.random.default_rng(1000 + r)
        m = int(rng.integers(2, 7))
        vals = [ExplicitXOS(rng.uniform(0, 2, (int(rng.integers(1, 4)), m))) for _ in range(2)]
        bidders = [NoEnvyBidder(v, ftpl_buyer(v, T, D=float(vals[1 - i].clauses.max()), seed=[r, i]))
                   for i, v in enumerate(vals)]
        xos.append((vals, simulate_game("second_price", vals, bidders, T), 1.0))
    for r in range(10):
        rng = np.random.default_rng(1100 + r)
        m = int(rng.integers(2, 7))
        V = int(rng.integers(1, 8))
        vals = [CoverageValuation(rng.uniform(0, 2, V), [np.flatnonzero(rng.random(V) < 0.4).tolist() for _ in range(m)])
                for _ in range(2)]
        Ks = [float(vals[1 - i].singleton_values().max()) for i in range(2)]
        bidders = [coverage_bidder(v, Ks[i], seed=[r, i]) for i, v in enumerate(vals)]
        cov.append((vals, simulate_game("second_price", vals, bidders, T), 1 / E_FACTOR))
    return {"xos": xos, "coverage": cov}


@_timed(10, "welfare floors for two learning bidders", limit=600)
def criterion_10():
    parts = []
    ok = True
    for kind, games in welfare_games().items():
        reports = [welfare_trace(g, vals, alpha) for vals, g, alpha in games]
        fails = sum(not w.holds for w in reports)
        ok &= fails == 0
        margin = min(w.average - w.floor for w in reports)
        ratio = min(w.ratio for w in reports)
        parts.append(f"{kind}: {fails} of {len(reports)} below floor (min margin {margin:.3f}, min welfare/Opt {ratio:.3f})")
    return ok, "; ".join(parts)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def run_all(selected=None, echo=print) -> list[CriterionResult]:
    results = []
    for crit in CRITERIA:
        if selected and crit.number not in selected:
            continue
        res = crit()
        if echo:
            echo(res.line())
        results.append(res)
    return results


__all__ = ["CriterionResult", "CRITERIA", "run_all", "ftpl_runs", "welfare_games"] + [
    f"criterion_{i}" for i in range(1, 11)
]
