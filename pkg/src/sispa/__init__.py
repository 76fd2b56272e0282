"""Online learning for repeated simultaneous single-item auctions."""

from .auction import MechanismKind, RoundRecord, optimal_welfare, resolve, threshold_payment, thresholds_for
from .buyer import (
    MWLearner,
    NoEnvyBidder,
    buyer_utility,
    envy_gap,
    ftpl_buyer,
    mw_capacitated_baseline,
    no_envy_learner,
    set_to_bid,
)
from .ftpl import (
    BuyerOracle,
    ExponentialSampler,
    FiniteOracle,
    FTPLLearner,
    GeometricSampler,
    be_the_leader_check,
    buyer_oracle,
    ftpl_finite_run,
    ftpl_step,
    sample_exponential,
    stability_estimate,
)
from .hardness import (
    BiddingHardnessInstance,
    SetCoverInstance,
    cover_from_apx,
    reduce,
    regret_to_opt_estimator,
    solve_bidding_exact,
)
from .metrics import (
    AdaptiveAdversary,
    IIDAdversary,
    ObliviousAdversary,
    RegretReport,
    best_fixed_bid,
    best_fixed_set,
    welfare_trace,
)
from .rounding import F_gradient, F_value, PGDCoverageLearner, pgd_coverage_learner, project_box
from .valuations import (
    AdditiveValuation,
    CoverageValuation,
    ExplicitXOS,
    InstanceTooLargeError,
    UnitDemandUniform,
    demand_oracle,
    value,
    xos_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "MechanismKind",
    "RoundRecord",
    "optimal_welfare",
    "resolve",
    "threshold_payment",
    "thresholds_for",
    "MWLearner",
    "NoEnvyBidder",
    "buyer_utility",
    "envy_gap",
    "ftpl_buyer",
    "mw_capacitated_baseline",
    "no_envy_learner",
    "set_to_bid",
    "BuyerOracle",
    "ExponentialSampler",
    "FiniteOracle",
    "FTPLLearner",
    "GeometricSampler",
    "be_the_leader_check",
    "buyer_oracle",
    "ftpl_finite_run",
    "ftpl_step",
    "sample_exponential",
    "stability_estimate",
    "BiddingHardnessInstance",
    "SetCoverInstance",
    "cover_from_apx",
    "reduce",
    "regret_to_opt_estimator",
    "solve_bidding_exact",
    "AdaptiveAdversary",
    "IIDAdversary",
    "ObliviousAdversary",
    "RegretReport",
    "best_fixed_bid",
    "best_fixed_set",
    "welfare_trace",
    "F_gradient",
    "F_value",
    "PGDCoverageLearner",
    "pgd_coverage_learner",
    "project_box",
    "AdditiveValuation",
    "CoverageValuation",
    "ExplicitXOS",
    "InstanceTooLargeError",
    "UnitDemandUniform",
    "demand_oracle",
    "value",
    "xos_oracle",
]
