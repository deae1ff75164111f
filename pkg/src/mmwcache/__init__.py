"""Cache-and-cooperate planning for blockage-prone mmWave cells.

Files can be cached whole and beamed jointly by several base stations,
or split into coded parts spread across them and peeled off with
successive cancellation; uncached requests ride the gateway backhaul.
The package computes success probabilities and delays for each choice
(analytically and by simulation) and picks the per-file split that
maximises the network utility under the cache budget.
"""

from .analytic.engine import (
    DelayResult,
    UnsupportedRegimeError,
    analytic_strategy_values,
    backhaul_delay,
    delay_jt,
    delay_pt,
    delay_ut,
    objective_delay,
    objective_stp,
    stp_jt,
    stp_jt_smallbeta,
    stp_pt,
    stp_pt_smallbeta,
)
from .model import (
    AntennaGainLaw,
    CacheConfig,
    CachingVector,
    ContentModel,
    StrategyValues,
    SystemParams,
    ValidationReport,
    Violation,
    db_to_linear,
    dbm_to_watt,
    default_content,
    default_params,
    freespace_intercept,
    los_probability,
    path_loss,
    sinr_threshold,
    thermal_noise_watt,
    threshold_for,
    validate_caching_vector,
    zipf_popularity,
)
from .montecarlo import (
    EstimateWithCI,
    TrialPlan,
    estimate_local_delay,
    estimate_ut_delay,
    montecarlo_strategy_values,
    simulate_stp_jt,
    simulate_stp_pt,
)
from .optimizer import (
    InfeasibleInstanceError,
    MckpInstance,
    MckpSolution,
    OptimizeResult,
    OracleBudgetError,
    SmallFileDesign,
    baseline_ldc,
    baseline_mpc,
    build_instance,
    exhaustive_oracle,
    greedy_mckp,
    optimize,
    smallfile_closed_form,
)

__version__ = "0.1.0"

__all__ = [
    "AntennaGainLaw",
    "CacheConfig",
    "CachingVector",
    "ContentModel",
    "DelayResult",
    "EstimateWithCI",
    "InfeasibleInstanceError",
    "MckpInstance",
    "MckpSolution",
    "OptimizeResult",
    "OracleBudgetError",
    "SmallFileDesign",
    "StrategyValues",
    "SystemParams",
    "TrialPlan",
    "UnsupportedRegimeError",
    "ValidationReport",
    "Violation",
    "analytic_strategy_values",
    "backhaul_delay",
    "baseline_ldc",
    "baseline_mpc",
    "build_instance",
    "db_to_linear",
    "dbm_to_watt",
    "default_content",
    "default_params",
    "delay_jt",
    "delay_pt",
    "delay_ut",
    "estimate_local_delay",
    "estimate_ut_delay",
    "exhaustive_oracle",
    "freespace_intercept",
    "greedy_mckp",
    "los_probability",
    "montecarlo_strategy_values",
    "objective_delay",
    "objective_stp",
    "optimize",
    "path_loss",
    "simulate_stp_jt",
    "simulate_stp_pt",
    "sinr_threshold",
    "smallfile_closed_form",
    "stp_jt",
    "stp_jt_smallbeta",
    "stp_pt",
    "stp_pt_smallbeta",
    "thermal_noise_watt",
    "threshold_for",
    "validate_caching_vector",
    "zipf_popularity",
    "__version__",
]
