"""Measurement-conditioned priors and their average/difference decomposition.

A :class:`ConditionedPrior` is a dense ``(L1, L2)`` mass array.  The four
priors of a scenario decompose into an average ``rho_bar`` and three signed
products ``rho_bar*eps``, ``rho_bar*sig``, ``rho_bar*eta``.  Only the products
are stored, so no division by ``rho_bar`` ever happens and every identity
here is linear.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from .dynamics import BasinMap, basin_map
from .errors import GridMismatch, InconsistentBasins
from .lattice import CLASSES, SETTINGS, ArrivalProbs, GridSpec, Scenario, Setting, TargetSet

NORM_TOL = 1e-12

# (eps, sig, eta) signs in rho(.|x,y) = rho_bar + s_e*eps + s_s*sig + s_h*eta
SIGNS: dict[Setting, tuple[int, int, int]] = {
    Setting.AB: (1, 1, 1),
    Setting.ABP: (-1, 1, -1),
    Setting.APB: (1, -1, -1),
    Setting.APBP: (-1, -1, 1),
}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ConditionedPrior:
    setting: Setting
    mass: np.ndarray

    def __post_init__(self):
        mass = _frozen(self.mass)
        if mass.ndim != 2:
            raise ValueError(f"prior mass must be a 2-d site array, got shape {mass.shape}")
        if (mass < 0).any():
            raise ValueError("prior mass must be non-negative")
        total = mass.sum()
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"prior mass sums to {total!r}, not 1")
        object.__setattr__(self, "mass", mass)

    @property
    def shape(self) -> tuple[int, int]:
        return self.mass.shape

    def __getitem__(self, site) -> float:
        return float(self.mass[site[0], site[1]])


def uniform_over_basin(basins: BasinMap, probs: ArrivalProbs) -> np.ndarray:
    """Spread each target's arrival probability evenly over its basin.

    This is the long-time limit of the symmetric walk: any configuration in
    a basin is equally likely far enough before measurement.
    """
    sizes = basins.basin_sizes()
    p = probs.as_array()
    if np.any((sizes == 0) & (p > 0)):
        raise InconsistentBasins("a target with positive arrival probability has an empty basin")
    per_site = np.divide(p, sizes, out=np.zeros(4), where=sizes > 0)
    return per_site[basins.labels]


DistributionPolicy = Callable[[BasinMap, ArrivalProbs], np.ndarray]


def conditioned_prior(
    ts: TargetSet,
    probs: ArrivalProbs,
    grid: GridSpec,
    basins: Optional[BasinMap] = None,
    policy: DistributionPolicy = uniform_over_basin,
) -> ConditionedPrior:
    """Prior over configurations given the setting's targets and arrival probabilities."""
    if basins is None:
        basins = basin_map(grid, ts)
    if basins.grid != grid:
        raise InconsistentBasins("basin map was built for a different grid")
    if basins.targets != ts:
        raise InconsistentBasins(f"basin map targets do not match the {ts.setting.key} target set")
    return ConditionedPrior(ts.setting, policy(basins, probs))


def scenario_priors(scenario: Scenario, policy: DistributionPolicy = uniform_over_basin) -> dict[Setting, ConditionedPrior]:
    return {
        s: conditioned_prior(scenario.targets(s), scenario.probs(s), scenario.grid, policy=policy)
        for s in SETTINGS
    }


@dataclass(frozen=True)
class Decomposition:
    rho_bar: np.ndarray
    rho_eps: np.ndarray
    rho_sig: np.ndarray
    rho_eta: np.ndarray

    def __post_init__(self):
        for name in ("rho_bar", "rho_eps", "rho_sig", "rho_eta"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.rho_bar.shape


def _as_prior_tuple(priors) -> tuple[ConditionedPrior, ...]:
    if isinstance(priors, Mapping):
        return tuple(priors[s] for s in SETTINGS)
    return tuple(priors)


def decompose(p_ab, p_abp=None, p_apb=None, p_apbp=None) -> Decomposition:
    """Average and difference combinations of the four conditioned priors.

    Accepts either four priors in (a,b), (a,b'), (a',b), (a',b') order or a
    single mapping from :class:`Setting` to prior.
    """
    if p_abp is None:
        priors = _as_prior_tuple(p_ab)
    else:
        priors = (p_ab, p_abp, p_apb, p_apbp)
    arrays = [np.asarray(getattr(p, "mass", p), dtype=float) for p in priors]
    if len(arrays) != 4:
        raise ValueError(f"need four priors, got {len(arrays)}")
    if len({a.shape for a in arrays}) != 1:
        raise GridMismatch(f"priors live on different grids: {[a.shape for a in arrays]}")
    ab, abp, apb, apbp = arrays
    return Decomposition(
        rho_bar=0.25 * (ab + abp + apb + apbp),
        rho_eps=0.25 * (ab - abp + apb - apbp),
        rho_sig=0.25 * (ab + abp - apb - apbp),
        rho_eta=0.25 * (ab - abp - apb + apbp),
    )


def reconstruct(d: Decomposition, setting: Setting) -> ConditionedPrior:
    """Recover the prior of ``setting`` as ``rho_bar*(1 ± eps ± sig ± eta)``."""
    se, ss, sh = SIGNS[setting]
    mass = d.rho_bar + se * d.rho_eps + ss * d.rho_sig + sh * d.rho_eta
    # exact cancellation can leave -0.0 or -1e-18 residue where the prior is zero
    return ConditionedPrior(setting, np.where(np.abs(mass) < 1e-15, 0.0, mass))


def mu_general(d: Decomposition) -> float:
    """Bound elevation ``2 * sum(|rho_bar*eps| + |rho_bar*sig| + |rho_bar*eta|)``."""
    return 2.0 * float(np.abs(d.rho_eps).sum() + np.abs(d.rho_sig).sum() + np.abs(d.rho_eta).sum())


def mu_toy_analytic(probs: ArrivalProbs) -> float:
    """Closed form ``6|P++ - P+-|`` for the symmetric scenario, given the (a,b) probabilities."""
    return 6.0 * abs(probs.p_pp - probs.p_pm)
