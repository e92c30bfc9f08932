"""Discrete periodic phase space, parity classes, settings and targets.

The hidden variables are a pair of integers ``(l1, l2)`` on an ``L1 x L2``
torus.  Sites are split into four parity classes; under the step-2
measurement dynamics each class is closed, so each class is the basin of
the one target that shares its parity.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    DuplicateClass,
    InvalidCorrelation,
    InvalidGrid,
    InvalidProbabilities,
    OutOfBounds,
)

PROB_TOL = 1e-9


class Site(NamedTuple):
    l1: int
    l2: int


class ParityClass(enum.Enum):
    """Parity of ``(l1, l2)``; E = even, O = odd."""

    EE = (0, 0)
    EO = (0, 1)
    OE = (1, 0)
    OO = (1, 1)

    @property
    def p1(self) -> int:
        return self.value[0]

    @property
    def p2(self) -> int:
        return self.value[1]

    @property
    def index(self) -> int:
        return 2 * self.p1 + self.p2

    @property
    def outcome(self) -> tuple[int, int]:
        """Measurement outcomes ``(A, B)``: +1 on even coordinates, -1 on odd."""
        return (1 - 2 * self.p1, 1 - 2 * self.p2)

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def of(cls, p1: int, p2: int) -> "ParityClass":
        return _CLASS_BY_PARITY[(p1 % 2, p2 % 2)]


_CLASS_BY_PARITY = {pc.value: pc for pc in ParityClass}
CLASSES: tuple[ParityClass, ...] = (
    ParityClass.EE,
    ParityClass.EO,
    ParityClass.OE,
    ParityClass.OO,
)


class Setting(enum.Enum):
    """One of the four measurement setting pairs ``(x, y)``."""

    AB = ("a", "b")
    ABP = ("a", "b'")
    APB = ("a'", "b")
    APBP = ("a'", "b'")

    @property
    def x(self) -> str:
        return self.value[0]

    @property
    def y(self) -> str:
        return self.value[1]

    @property
    def key(self) -> str:
        return self.name.lower()

    @property
    def color(self) -> str:
        return _SETTING_COLORS[self]

    @classmethod
    def from_key(cls, key: str) -> "Setting":
        try:
            return cls[key.upper()]
        except KeyError:
            raise ValueError(f"unknown setting {key!r}; expected one of ab, abp, apb, apbp") from None


SETTINGS: tuple[Setting, ...] = (Setting.AB, Setting.ABP, Setting.APB, Setting.APBP)
_SETTING_COLORS = {
    Setting.AB: "red",
    Setting.ABP: "green",
    Setting.APB: "blue",
    Setting.APBP: "purple",
}


@dataclass(frozen=True)
class GridSpec:
    """An ``L1 x L2`` periodic grid; both sides even and at least 4."""

    L1: int
    L2: int

    def __post_init__(self):
        for name in ("L1", "L2"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise InvalidGrid(f"{name} must be an integer, got {v!r}")
            if v < 4 or v % 2:
                raise InvalidGrid(f"{name} must be an even integer >= 4, got {v}")
            object.__setattr__(self, name, int(v))

    @property
    def N(self) -> int:
        return self.L1 * self.L2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.L1, self.L2)

    @property
    def class_size(self) -> int:
        return self.N // 4

    def site(self, l1: int, l2: int) -> Site:
        """Return the site at ``(l1, l2)`` reduced onto the torus."""
        return Site(int(l1) % self.L1, int(l2) % self.L2)

    def contains(self, site: Sequence[int]) -> bool:
        return 0 <= site[0] < self.L1 and 0 <= site[1] < self.L2

    def sites(self) -> Iterator[Site]:
        for l1 in range(self.L1):
            for l2 in range(self.L2):
                yield Site(l1, l2)

    def flat_index(self, site: Sequence[int]) -> int:
        return int(site[0]) * self.L2 + int(site[1])

    def site_at(self, index: int) -> Site:
        return Site(*divmod(int(index), self.L2))

    def class_mask(self, pc: ParityClass) -> np.ndarray:
        """Boolean ``(L1, L2)`` mask of the sites in parity class ``pc``."""
        l1 = np.arange(self.L1)[:, None] % 2
        l2 = np.arange(self.L2)[None, :] % 2
        return (l1 == pc.p1) & (l2 == pc.p2)

    def class_labels(self) -> np.ndarray:
        """``(L1, L2)`` array of :attr:`ParityClass.index` per site."""
        l1 = np.arange(self.L1)[:, None] % 2
        l2 = np.arange(self.L2)[None, :] % 2
        return 2 * l1 + l2


def parity_class(site: Sequence[int]) -> ParityClass:
    return ParityClass.of(site[0], site[1])


@dataclass(frozen=True)
class TargetSet:
    """The four absorbing targets of one setting, keyed by parity class."""

    setting: Setting
    targets: Mapping[ParityClass, Site]

    def __post_init__(self):
        targets = {pc: Site(int(s[0]), int(s[1])) for pc, s in dict(self.targets).items()}
        object.__setattr__(self, "targets", MappingProxyType(targets))

    @classmethod
    def from_sites(cls, setting: Setting, sites: Iterable[Sequence[int]]) -> "TargetSet":
        """Key each site by its own parity class."""
        targets: dict[ParityClass, Site] = {}
        for s in sites:
            site = Site(int(s[0]), int(s[1]))
            pc = parity_class(site)
            if pc in targets:
                raise DuplicateClass(
                    f"targets {targets[pc]} and {site} are both in class {pc.label}"
                )
            targets[pc] = site
        return cls(setting, targets)

    def __getitem__(self, pc: ParityClass) -> Site:
        return self.targets[pc]

    def __reduce__(self):
        # mapping proxies do not pickle; worker processes need target sets
        return (type(self), (self.setting, dict(self.targets)))

    def sites(self) -> list[Site]:
        return [self.targets[pc] for pc in CLASSES]

    def outcome_of(self, site: Sequence[int]) -> tuple[int, int]:
        return parity_class(site).outcome

    def __hash__(self):
        return hash((self.setting, tuple(self.sites())))

    def __eq__(self, other):
        if not isinstance(other, TargetSet):
            return NotImplemented
        return self.setting == other.setting and dict(self.targets) == dict(other.targets)


def validate_target_set(grid: GridSpec, ts: TargetSet) -> TargetSet:
    """Check that ``ts`` has one on-grid target per parity class."""
    seen = set()
    for pc, site in ts.targets.items():
        if not grid.contains(site):
            raise OutOfBounds(f"target {tuple(site)} lies outside the {grid.L1}x{grid.L2} grid")
        actual = parity_class(site)
        if actual != pc:
            raise DuplicateClass(f"target {tuple(site)} is keyed as {pc.label} but has class {actual.label}")
        seen.add(actual)
    if len(seen) != 4:
        missing = ", ".join(pc.label for pc in CLASSES if pc not in seen)
        raise DuplicateClass(f"target set for {ts.setting.key} lacks classes: {missing}")
    return ts


@dataclass(frozen=True)
class ArrivalProbs:
    """Probabilities of arrival at the (+,+), (+,-), (-,+), (-,-) targets."""

    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float

    def __post_init__(self):
        vals = [float(v) for v in (self.p_pp, self.p_pm, self.p_mp, self.p_mm)]
        if not all(math.isfinite(v) for v in vals):
            raise InvalidProbabilities(f"non-finite arrival probabilities {vals}")
        if min(vals) < 0:
            raise InvalidProbabilities(f"negative arrival probability in {vals}")
        total = math.fsum(vals)
        if abs(total - 1.0) > PROB_TOL:
            raise InvalidProbabilities(f"arrival probabilities sum to {total!r}, not 1")
        if total != 1.0:
            vals = [v / total for v in vals]
        for name, v in zip(("p_pp", "p_pm", "p_mp", "p_mm"), vals):
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        """Probabilities in :data:`CLASSES` order (ee, eo, oe, oo)."""
        return np.array([self.p_pp, self.p_pm, self.p_mp, self.p_mm])

    def for_class(self, pc: ParityClass) -> float:
        return float(self.as_array()[pc.index])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "ArrivalProbs":
        if len(values) != 4:
            raise InvalidProbabilities(f"need 4 arrival probabilities, got {len(values)}")
        return cls(*values)

    def is_symmetric(self, tol: float = 0.0) -> bool:
        return abs(self.p_pp - self.p_mm) <= tol and abs(self.p_pm - self.p_mp) <= tol


@dataclass(frozen=True)
class Scenario:
    """A grid plus a (TargetSet, ArrivalProbs) pair for each of the four settings."""

    grid: GridSpec
    entries: Mapping[Setting, tuple[TargetSet, ArrivalProbs]] = field(repr=False)

    def __post_init__(self):
        entries = dict(self.entries)
        missing = [s.key for s in SETTINGS if s not in entries]
        if missing:
            raise ValueError(f"scenario is missing settings: {', '.join(missing)}")
        for setting, (ts, _) in entries.items():
            if ts.setting != setting:
                raise ValueError(f"target set for {ts.setting.key} filed under {setting.key}")
            validate_target_set(self.grid, ts)
        object.__setattr__(self, "entries", MappingProxyType(entries))

    def __reduce__(self):
        return (type(self), (self.grid, dict(self.entries)))

    def targets(self, setting: Setting) -> TargetSet:
        return self.entries[setting][0]

    def probs(self, setting: Setting) -> ArrivalProbs:
        return self.entries[setting][1]

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """True if the four settings follow the red/blue/purple-equal, green-swapped pattern."""
        ref = self.probs(Setting.AB)
        if not all(self.probs(s).is_symmetric(tol) for s in SETTINGS):
            return False
        for s in (Setting.APB, Setting.APBP):
            if not np.allclose(self.probs(s).as_array(), ref.as_array(), rtol=0, atol=tol):
                return False
        green = self.probs(Setting.ABP)
        return abs(green.p_pm - ref.p_pp) <= tol and abs(green.p_pp - ref.p_pm) <= tol


_DEFAULT_BASE = ((2, 2), (2, 3), (3, 2), (3, 3))
_DEFAULT_OFFSETS = {Setting.AB: 0, Setting.ABP: 2, Setting.APB: 4, Setting.APBP: 6}


def default_layout(grid: GridSpec) -> dict[Setting, TargetSet]:
    """Illustrative target layout: a 2x2 block of targets shifted along l1 per setting.

    Offsets are 0, 2, 4, 6 for (a,b), (a,b'), (a',b), (a',b') and wrap
    around the torus, so on small grids target sets may coincide.
    """
    layout = {}
    for setting in SETTINGS:
        off = _DEFAULT_OFFSETS[setting]
        sites = [grid.site(l1 + off, l2) for l1, l2 in _DEFAULT_BASE]
        layout[setting] = validate_target_set(grid, TargetSet.from_sites(setting, sites))
    return layout


def symmetric_probs(c: float) -> tuple[ArrivalProbs, ArrivalProbs]:
    """Return ``(correlated, swapped)`` arrival probabilities for correlation ``c``."""
    if not math.isfinite(float(c)) or abs(c) > 1:
        raise InvalidCorrelation(f"correlation must lie in [-1, 1], got {c!r}")
    hi = (1 + c) / 4
    lo = (1 - c) / 4
    return ArrivalProbs(hi, lo, lo, hi), ArrivalProbs(lo, hi, hi, lo)


def build_symmetric_scenario(
    grid: GridSpec, c: float, layout: Mapping[Setting, TargetSet] | None = None
) -> Scenario:
    """Build the scenario with C(a,b) = C(a',b) = C(a',b') = c and C(a,b') = -c."""
    same, swapped = symmetric_probs(c)
    if layout is None:
        layout = default_layout(grid)
    entries = {}
    for setting in SETTINGS:
        ts = validate_target_set(grid, layout[setting])
        entries[setting] = (ts, swapped if setting is Setting.ABP else same)
    return Scenario(grid, entries)
