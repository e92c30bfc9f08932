"""scikit-learn style wrappers around the analytic and Monte Carlo pipelines.

The estimators follow the usual contract: hyper-parameters are set in
``__init__`` and exposed through ``get_params``/``set_params``; ``fit``
returns ``self`` and stores results in attributes with a trailing
underscore.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _validation
from .chsh import analyze_scenario, chsh_report
from .conditioning import decompose, mu_toy_analytic, scenario_priors, uniform_over_basin
from .dynamics import DynamicsConfig
from .lattice import SETTINGS, GridSpec, ParityClass, Scenario, Setting, TargetSet
from .montecarlo import EstimatorConfig, estimate_arrival_probs, estimate_pre_hit_distribution

POLICIES = {"uniform_over_basin": uniform_over_basin}


class MeasurementDependenceAnalyzer(TransformerMixin, BaseEstimator):
    """Conditioned priors, decomposition and CHSH report of a scenario.

    Parameters
    ----------
    policy : str or callable, default="uniform_over_basin"
        How a target's arrival probability is spread over its basin.
    check : bool, default=True
        Raise :class:`~bellmd.errors.ConsistencyError` when the two mu
        routes disagree or ``S > 2 + mu``.

    Attributes
    ----------
    priors_ : dict of Setting -> ConditionedPrior
    decomposition_ : Decomposition
    report_ : ChshReport
    s_, mu_ : float
    mu_analytic_ : float or None
        ``6|P++ - P+-|``, only for symmetric scenarios.
    """

    def __init__(self, policy="uniform_over_basin", check=True):
        self.policy = policy
        self.check = check

    def _policy(self):
        if callable(self.policy):
            return self.policy
        try:
            return POLICIES[self.policy]
        except KeyError:
            raise ValueError(f"unknown policy {self.policy!r}; expected one of {sorted(POLICIES)}") from None

    def fit(self, scenario: Scenario, y=None):
        scenario = _validation.check_scenario(scenario)
        policy = self._policy()
        if policy is uniform_over_basin:
            report, priors = analyze_scenario(scenario, check=self.check)
        else:
            priors = scenario_priors(scenario, policy)
            analytic = mu_toy_analytic(scenario.probs(Setting.AB)) if scenario.is_symmetric() else None
            report = chsh_report(priors, scenario.grid, analytic, check=self.check)
        self.grid_ = scenario.grid
        self.priors_ = priors
        self.decomposition_ = decompose(priors)
        self.report_ = report
        self.s_ = report.s
        self.mu_ = report.mu
        self.mu_analytic_ = report.mu_analytic
        self.correlations_ = report.correlations()
        return self

    def transform(self, X):
        """Prior mass of each site under the four settings, shape ``(n, 4)``."""
        check_is_fitted(self, "priors_")
        sites = _validation.check_sites(X, self.grid_)
        return np.column_stack([self.priors_[s].mass[sites[:, 0], sites[:, 1]] for s in SETTINGS])


class _MonteCarloParams:
    def _configs(self, lookback=None):
        est = EstimatorConfig(
            n_trajectories=self.n_trajectories,
            master_seed=self.master_seed,
            lookback_T=lookback,
            workers=self.workers,
        )
        dyn = DynamicsConfig(step_length=self.step_length, max_steps=self.max_steps, kernel=self.kernel)
        return est, dyn


class ArrivalProbabilityEstimator(_MonteCarloParams, BaseEstimator):
    """Monte Carlo arrival probabilities for one setting's targets."""

    def __init__(self, n_trajectories=100_000, master_seed=0, workers=1,
                 kernel="single_axis", step_length=2, max_steps=None):
        self.n_trajectories = n_trajectories
        self.master_seed = master_seed
        self.workers = workers
        self.kernel = kernel
        self.step_length = step_length
        self.max_steps = max_steps

    def fit(self, prior, target_set: TargetSet, grid: GridSpec):
        _validation.check_mass(prior, grid)
        est, dyn = self._configs()
        result = estimate_arrival_probs(prior, target_set, grid, est, dyn)
        self.estimate_ = result
        self.probs_ = result.probs
        self.stderr_ = result.stderr
        self.n_unabsorbed_ = result.n_unabsorbed
        self.out_of_class_ = result.out_of_class
        self.reliable_ = result.reliable
        return self


class PreHitDistributionEstimator(_MonteCarloParams, BaseEstimator):
    """Distribution of configurations ``lookback`` steps before arrival at a class target."""

    def __init__(self, lookback=None, n_trajectories=100_000, master_seed=0, workers=1,
                 method="reversed", kernel="single_axis", step_length=2, max_steps=None):
        self.lookback = lookback
        self.n_trajectories = n_trajectories
        self.master_seed = master_seed
        self.workers = workers
        self.method = method
        self.kernel = kernel
        self.step_length = step_length
        self.max_steps = max_steps

    def fit(self, parity_class: ParityClass, target_set: TargetSet, grid: GridSpec):
        est, dyn = self._configs(self.lookback)
        result = estimate_pre_hit_distribution(parity_class, target_set, grid, est, dyn, self.method)
        self.estimate_ = result
        self.distribution_ = result.distribution.probabilities
        self.tv_ = result.tv
        self.qualifying_fraction_ = result.qualifying_fraction
        self.lookback_ = result.lookback_T
        return self
