"""Correlation functions, the CHSH parameter and the bound checks.

Sums run over the dense ``(L1, L2)`` arrays in numpy's fixed order, so the
results are reproducible bit-for-bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .conditioning import (
    ConditionedPrior,
    Decomposition,
    decompose,
    mu_general,
    mu_toy_analytic,
    reconstruct,
    scenario_priors,
)
from .errors import AxisMismatch, ConsistencyError, GridMismatch, InvariantBreach, OutOfRange
from .lattice import SETTINGS, ArrivalProbs, GridSpec, Scenario, Setting

CHECK_TOL = 1e-12
MU_CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class OutcomeMeanField:
    """Mean measurement outcome at each site, read off hidden variable ``axis`` (1 or 2)."""

    axis: int
    values: np.ndarray

    def __post_init__(self):
        if self.axis not in (1, 2):
            raise AxisMismatch(f"axis must be 1 or 2, got {self.axis}")
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("field values must be a 2-d site array")
        if np.any(np.abs(values) > 1):
            raise InvariantBreach("mean outcome field exceeds 1 in magnitude")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def p_plus(self) -> np.ndarray:
        return (1 + self.values) / 2

    @property
    def p_minus(self) -> np.ndarray:
        return (1 - self.values) / 2


def parity_field(grid: GridSpec, axis: int) -> OutcomeMeanField:
    """+1 where the coordinate on ``axis`` is even, -1 where odd."""
    n = grid.L1 if axis == 1 else grid.L2
    signs = 1 - 2 * (np.arange(n) % 2)
    values = np.broadcast_to(signs[:, None] if axis == 1 else signs[None, :], grid.shape)
    return OutcomeMeanField(axis, values)


def correlation_from_probs(probs: ArrivalProbs) -> float:
    return probs.p_pp - probs.p_pm - probs.p_mp + probs.p_mm


def correlation_from_prior(prior, a_field: OutcomeMeanField, b_field: OutcomeMeanField) -> float:
    """``sum_lambda A(lambda) B(lambda) rho(lambda)`` over the grid."""
    mass = np.asarray(getattr(prior, "mass", prior))
    if a_field.axis != 1 or b_field.axis != 2:
        raise AxisMismatch("expected an axis-1 field for A and an axis-2 field for B")
    if mass.shape != a_field.values.shape or mass.shape != b_field.values.shape:
        raise GridMismatch("prior and fields live on different grids")
    return float((a_field.values * b_field.values * mass).sum())


def chsh_s(c_ab: float, c_abp: float, c_apb: float, c_apbp: float) -> float:
    cs = (c_ab, c_abp, c_apb, c_apbp)
    for c in cs:
        if not math.isfinite(c) or abs(c) > 1 + CHECK_TOL:
            raise OutOfRange(f"correlation {c!r} outside [-1, 1]")
    return abs(c_ab - c_abp) + abs(c_apb + c_apbp)


@dataclass(frozen=True)
class Eq2Report:
    lhs: np.ndarray
    max: float


def check_eq2(b_field: OutcomeMeanField, bp_field: OutcomeMeanField) -> Eq2Report:
    """Site-wise ``|B - B'| + |B + B'|``, which never exceeds 2 for valid fields."""
    if b_field.values.shape != bp_field.values.shape:
        raise GridMismatch("fields live on different grids")
    if b_field.axis != bp_field.axis:
        raise AxisMismatch("both fields must read the same hidden variable")
    b, bp = b_field.values, bp_field.values
    lhs = np.abs(b - bp) + np.abs(b + bp)
    worst = float(lhs.max())
    if worst > 2 + CHECK_TOL:
        raise InvariantBreach(f"|B-B'|+|B+B'| reached {worst!r} > 2")
    return Eq2Report(lhs, worst)


@dataclass(frozen=True)
class IntermediateReport:
    """Both sides of the two intermediate inequalities, plus the exact expansions.

    ``diff`` is ``C(a,b) - C(a,b')`` computed directly from the priors and
    ``diff_expansion`` the same quantity as the four-term sum over
    ``rho_bar``, ``eps``, ``sig`` and ``eta``; ``plus`` and ``plus_expansion``
    do the same for ``C(a',b) + C(a',b')``.
    """

    diff: float
    diff_expansion: float
    diff_bound: float
    plus: float
    plus_expansion: float
    plus_bound: float

    @property
    def diff_slack(self) -> float:
        return self.diff_bound - abs(self.diff)

    @property
    def plus_slack(self) -> float:
        return self.plus_bound - abs(self.plus)

    @property
    def holds(self) -> bool:
        return self.diff_slack >= -CHECK_TOL and self.plus_slack >= -CHECK_TOL

    @property
    def expansions_match(self) -> bool:
        return (abs(self.diff - self.diff_expansion) <= CHECK_TOL
                and abs(self.plus - self.plus_expansion) <= CHECK_TOL)


def check_intermediate_bounds(
    d: Decomposition,
    a_field: OutcomeMeanField,
    ap_field: OutcomeMeanField,
    b_field: OutcomeMeanField,
    bp_field: OutcomeMeanField,
) -> IntermediateReport:
    fields = (a_field, ap_field, b_field, bp_field)
    if any(f.values.shape != d.shape for f in fields):
        raise GridMismatch("fields and decomposition live on different grids")
    A, Ap = a_field.values, ap_field.values
    B, Bp = b_field.values, bp_field.values
    bar, eps, sig, eta = d.rho_bar, d.rho_eps, d.rho_sig, d.rho_eta
    rho = {s: reconstruct(d, s).mass for s in SETTINGS}

    minus, plus = B - Bp, B + Bp
    diff = float((A * B * rho[Setting.AB]).sum() - (A * Bp * rho[Setting.ABP]).sum())
    diff_exp = float((A * minus * bar).sum() + (A * plus * eps).sum()
                     + (A * minus * sig).sum() + (A * plus * eta).sum())
    diff_bound = float((np.abs(minus) * bar).sum() + (np.abs(plus) * np.abs(eps)).sum()
                       + (np.abs(minus) * np.abs(sig)).sum() + (np.abs(plus) * np.abs(eta)).sum())

    pl = float((Ap * B * rho[Setting.APB]).sum() + (Ap * Bp * rho[Setting.APBP]).sum())
    pl_exp = float((Ap * plus * bar).sum() + (Ap * minus * eps).sum()
                   - (Ap * plus * sig).sum() - (Ap * minus * eta).sum())
    pl_bound = float((np.abs(plus) * bar).sum() + (np.abs(minus) * np.abs(eps)).sum()
                     + (np.abs(plus) * np.abs(sig)).sum() + (np.abs(minus) * np.abs(eta)).sum())
    return IntermediateReport(diff, diff_exp, diff_bound, pl, pl_exp, pl_bound)


@dataclass(frozen=True)
class BoundReport:
    s: float
    mu: float
    bound: float
    satisfied: bool
    slack: float


def bound_report(s: float, mu: float) -> BoundReport:
    """Check ``S <= 2 + mu``.  ``bound`` caps mu at 2 since S never exceeds 4."""
    return BoundReport(s, mu, 2 + min(mu, 2.0), s <= 2 + mu + CHECK_TOL, 2 + mu - s)


@dataclass(frozen=True)
class ChshReport:
    c_ab: float
    c_abp: float
    c_apb: float
    c_apbp: float
    s: float
    mu: float
    mu_analytic: Optional[float]
    bound: float
    satisfied: bool
    slack: float

    @property
    def consistent(self) -> bool:
        if self.mu_analytic is None:
            return True
        return abs(self.mu - self.mu_analytic) <= MU_CONSISTENCY_TOL

    def correlations(self) -> dict[Setting, float]:
        return dict(zip(SETTINGS, (self.c_ab, self.c_abp, self.c_apb, self.c_apbp)))


def chsh_report(
    priors: Mapping[Setting, ConditionedPrior],
    grid: GridSpec,
    mu_analytic: Optional[float] = None,
    *,
    check: bool = False,
) -> ChshReport:
    """Correlations from the priors with parity fields, then S, mu and the bound."""
    a, b = parity_field(grid, 1), parity_field(grid, 2)
    cs = [correlation_from_prior(priors[s], a, b) for s in SETTINGS]
    mu = mu_general(decompose(priors))
    br = bound_report(chsh_s(*cs), mu)
    report = ChshReport(*cs, s=br.s, mu=mu, mu_analytic=mu_analytic,
                        bound=br.bound, satisfied=br.satisfied, slack=br.slack)
    if check and not report.consistent:
        raise ConsistencyError(f"mu_general={report.mu!r} disagrees with mu_analytic={report.mu_analytic!r}")
    if check and not report.satisfied:
        raise ConsistencyError(f"S={report.s!r} exceeds 2 + mu = {2 + report.mu!r}")
    return report


def analyze_scenario(scenario: Scenario, *, check: bool = False) -> tuple[ChshReport, dict[Setting, ConditionedPrior]]:
    """Full analytic pipeline: priors, decomposition, correlations, S and mu."""
    priors = scenario_priors(scenario)
    analytic = mu_toy_analytic(scenario.probs(Setting.AB)) if scenario.is_symmetric() else None
    return chsh_report(priors, scenario.grid, analytic, check=check), priors
