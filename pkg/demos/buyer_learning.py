"""A single XOS bidder learning against random thresholds.

Runs the perturbed-leader buyer and the capacitated Hedge baseline on the
same threshold sequence and prints how the envy gap shrinks with T.

    python demos/buyer_learning.py
"""

import numpy as np

from sispa.buyer import envy_gap, mw_capacitated_baseline, no_envy_learner
from sispa.ftpl import demand_regret_bound
from sispa.metrics import ObliviousAdversary, best_fixed_set
from sispa.valuations import ExplicitXOS

rng = np.random.default_rng(0)
m, D = 5, 1.0
val = ExplicitXOS(rng.uniform(0, 2, (3, m)))
H = val.max_value()
print(f"valuation: {val}, H = {H:.3f}")

# Prices fluctuate around a fixed base level per item.
T_max = 4000
base = rng.uniform(0, D, m)
seq = np.clip(base + 0.3 * rng.standard_normal((T_max, m)), 0, D)

print(f"{'T':>6} {'FTPL gap':>10} {'Hedge gap':>10} {'FTPL regret':>12} {'bound':>10}")
for T in (250, 1000, 4000):
    run = no_envy_learner(val, ObliviousAdversary(seq[:T]), T, D=D, seed=1)
    mw = mw_capacitated_baseline(val, m, T, ObliviousAdversary(seq[:T]), D, rng=1)
    _, best = best_fixed_set(val, run.thetas)
    print(f"{T:>6} {envy_gap(val, run.thetas, run.utilities):>10.4f} "
          f"{envy_gap(val, mw.thetas, mw.utilities):>10.4f} "
          f"{best - run.utilities.sum():>12.2f} {demand_regret_bound(m, D, H, T):>10.0f}")
