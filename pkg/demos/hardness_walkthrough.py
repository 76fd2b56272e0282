"""From set cover to optimal bidding on the two-element instance.

Builds the bidding problem, solves it exactly, recovers the cover size from
the optimum, then estimates the optimum by running follow-the-leader.

    python demos/hardness_walkthrough.py
"""

import numpy as np

from sispa.hardness import (
    FollowTheLeader,
    SetCoverInstance,
    cover_from_apx,
    min_set_cover,
    opt_from_cover,
    reduce,
    regret_to_opt_estimator,
    solve_bidding_exact,
)

sc = SetCoverInstance(2, ((1,), (2,)))
inst = reduce(sc)
print(f"k={inst.k} m={inst.m} r={inst.r}: value v={inst.v}, expensive threshold H={inst.H}")
print("threshold vectors (one drawn uniformly each round):")
print(np.asarray(inst.thresholds))

opt, S = solve_bidding_exact(inst)
cover = min_set_cover(sc)
print(f"best bid set {sorted(j + 1 for j in S)} earns {opt}; smallest cover has {cover} sets")
print(f"cover size implied by the optimum: {opt_from_cover(inst, cover)} == {opt}")
print(f"Q from the exact optimum: {cover_from_apx(inst, opt):.2f} (cover lies in [Q, 3Q])")

res = regret_to_opt_estimator(inst, FollowTheLeader(inst), T=500, N=200, rng=7)
print(f"follow-the-leader estimate over {res.N} runs of {res.T} rounds: "
      f"{res.estimate:.4f} +/- {res.half_width:.3f}")
