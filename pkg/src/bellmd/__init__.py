"""Measurement-dependent hidden-variable toy model: conditioned priors, CHSH bounds and their Monte Carlo checks."""
from .chsh import (
    ChshReport,
    OutcomeMeanField,
    analyze_scenario,
    bound_report,
    check_eq2,
    check_intermediate_bounds,
    chsh_s,
    correlation_from_prior,
    correlation_from_probs,
    parity_field,
)
from .conditioning import (
    ConditionedPrior,
    Decomposition,
    conditioned_prior,
    decompose,
    mu_general,
    mu_toy_analytic,
    reconstruct,
    scenario_priors,
)
from .dynamics import (
    BasinMap,
    DynamicsConfig,
    Trajectory,
    basin_map,
    hitting_oracle,
    run_to_absorption,
    step,
)
from .estimators import (
    ArrivalProbabilityEstimator,
    MeasurementDependenceAnalyzer,
    PreHitDistributionEstimator,
)
from .lattice import (
    ArrivalProbs,
    GridSpec,
    ParityClass,
    Scenario,
    Setting,
    Site,
    TargetSet,
    build_symmetric_scenario,
    default_layout,
    parity_class,
    validate_target_set,
)
from .montecarlo import (
    EstimatorConfig,
    derive_stream,
    estimate_arrival_probs,
    estimate_pre_hit_distribution,
)

__version__ = "0.1.0"
