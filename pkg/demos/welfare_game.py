"""Two learning bidders in repeated simultaneous second-price auctions.

One bidder has an explicit XOS valuation and runs the perturbed-leader
buyer; the other has a coverage valuation and runs gradient ascent with
Poisson rounding. Prints the welfare achieved against the optimum and the
floor implied by each bidder's measured envy gap.

    python demos/welfare_game.py
"""

import math

import numpy as np

from sispa.buyer import NoEnvyBidder, envy_gap, ftpl_buyer
from sispa.metrics import welfare_trace
from sispa.rounding import coverage_bidder
from sispa.simulate import simulate_game
from sispa.valuations import CoverageValuation, ExplicitXOS

rng = np.random.default_rng(3)
m, T = 4, 3000
xos = ExplicitXOS(rng.uniform(0, 1, (3, m)))
cov = CoverageValuation(rng.uniform(0, 1, 6), [np.flatnonzero(rng.random(6) < 0.4).tolist() for _ in range(m)])
D = max(xos.max_value(), cov.max_value())

bidders = [NoEnvyBidder(xos, ftpl_buyer(xos, T, D=D, seed=1)), coverage_bidder(cov, K=D, seed=2)]
game = simulate_game("second_price", [xos, cov], bidders, T)

alpha = math.e / (math.e - 1)
report = welfare_trace(game, [xos, cov], alpha=alpha)
print(f"optimal welfare {report.opt:.4f} with allocation {[sorted(S) for S in report.allocation]}")
print(f"average welfare {report.average:.4f} ({100 * report.ratio:.1f}% of optimum)")
print(f"envy gaps at discount {alpha:.3f}: " + ", ".join(f"{e:.4f}" for e in report.eps))
print(f"undiscounted XOS gap {envy_gap(xos, game.thetas[:, 0], game.utilities[:, 0]):.4f}")
print(f"floor {report.floor:.4f}; holds: {report.holds}")
