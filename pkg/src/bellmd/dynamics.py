"""Absorbing random-walk measurement dynamics.

Each timestep consumes two uniform draws from the walker's own stream.
Two move kernels are provided:

``single_axis`` (default)
    The first draw picks which of the two independent walks advances, the
    second its direction; the chosen coordinate moves by ``±step_length``.
``diagonal``
    Both coordinates move by ``±step_length`` at once, one draw per sign.
    When ``L1/2`` and ``L2/2`` are both even this kernel splits each parity
    class into two closed halves, so some starts never reach their target
    (see :func:`hitting_oracle`).

Both kernels are symmetric (``P[x, y] == P[y, x]``) and preserve parity for
even step lengths.  Only the target of the walker's own parity class
absorbs it; other targets are transparent.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import InconsistentBasins, MaxStepsExceeded, TooLarge
from .lattice import CLASSES, GridSpec, ParityClass, Site, TargetSet, parity_class

KERNELS = ("single_axis", "diagonal")
ORACLE_MAX_SITES = 4096
_FIRST_CHUNK = 32
_MAX_CHUNK = 4096


@dataclass(frozen=True)
class DynamicsConfig:
    step_length: int = 2
    max_steps: Optional[int] = None
    record_trajectory: bool = True
    kernel: str = "single_axis"

    def __post_init__(self):
        if self.step_length <= 0 or self.step_length % 2:
            raise ValueError(f"step_length must be a positive even integer, got {self.step_length}")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}; expected one of {KERNELS}")

    def resolved_max_steps(self, grid: GridSpec) -> int:
        if self.max_steps is not None:
            return self.max_steps
        return 10 * (grid.L1 // 2) * (grid.L2 // 2) * 16


def moves(cfg: DynamicsConfig) -> np.ndarray:
    """The four equally likely displacements, indexed by ``2*(u0 >= 0.5) + (u1 >= 0.5)``.

    For ``single_axis`` the first draw picks the axis (``< 0.5``: l1) and the
    second the sign (``< 0.5``: +); for ``diagonal`` the two draws give the
    signs of the l1 and l2 moves.
    """
    d = cfg.step_length
    if cfg.kernel == "diagonal":
        table = [(d, d), (d, -d), (-d, d), (-d, -d)]
    else:
        table = [(d, 0), (-d, 0), (0, d), (0, -d)]
    return np.array(table, dtype=np.int64)


def displacements(draws: np.ndarray, cfg: DynamicsConfig) -> np.ndarray:
    """Map an ``(k, 2)`` array of uniforms onto ``(k, 2)`` integer displacements."""
    draws = np.asarray(draws, dtype=float).reshape(-1, 2)
    idx = 2 * (draws[:, 0] >= 0.5) + (draws[:, 1] >= 0.5)
    return moves(cfg)[idx]


def apply_draws(site: Sequence[int], grid: GridSpec, draws: Sequence[float], cfg: DynamicsConfig) -> Site:
    """Deterministic part of :func:`step`: move ``site`` by the displacement ``draws`` encode."""
    dl1, dl2 = displacements(np.asarray(draws), cfg)[0]
    return grid.site(site[0] + dl1, site[1] + dl2)


def step(site: Sequence[int], grid: GridSpec, rng: np.random.Generator, cfg: DynamicsConfig = DynamicsConfig()) -> Site:
    """One timestep; consumes exactly two uniform draws from ``rng``."""
    return apply_draws(site, grid, rng.random(2), cfg)


@dataclass(frozen=True)
class Trajectory:
    """Result of :func:`run_to_absorption`.

    ``path`` holds every visited site (start first) as an ``(steps + 1, 2)``
    array when recording is enabled, otherwise ``None``.  An unabsorbed
    trajectory has ``absorbed_at = None`` and ``final`` is where it stopped.
    """

    start: Site
    absorbed_at: Optional[Site]
    steps: int
    final: Site
    path: Optional[np.ndarray] = None

    @property
    def absorbed(self) -> bool:
        return self.absorbed_at is not None

    @property
    def visited(self) -> Optional[list[Site]]:
        if self.path is None:
            return None
        return [Site(int(a), int(b)) for a, b in self.path]


def run_to_absorption(
    start: Sequence[int],
    ts: TargetSet,
    grid: GridSpec,
    cfg: DynamicsConfig = DynamicsConfig(),
    rng: Optional[np.random.Generator] = None,
    *,
    strict: bool = False,
) -> Trajectory:
    """Walk from ``start`` until it sits on the target of its parity class.

    Absorption is checked before the first step.  Draws are read from
    ``rng`` in blocks, which yields the same sequence of sites as calling
    :func:`step` repeatedly on the same stream.  If ``max_steps`` runs out
    the partial trajectory is returned unabsorbed, or
    :class:`MaxStepsExceeded` is raised when ``strict`` is set.
    """
    if rng is None:
        rng = np.random.default_rng()
    start = grid.site(*start)
    target = ts[parity_class(start)]
    max_steps = cfg.resolved_max_steps(grid)
    mod = np.array(grid.shape)
    pos = np.array(start, dtype=np.int64)
    pieces = [pos[None, :]] if cfg.record_trajectory else None

    if start == target:
        return Trajectory(start, start, 0, start, pos[None, :].copy() if pieces else None)

    done = 0
    chunk = _FIRST_CHUNK
    tgt = np.array(target)
    while done < max_steps:
        k = min(chunk, max_steps - done)
        walk = (pos + np.cumsum(displacements(rng.random((k, 2)), cfg), axis=0)) % mod
        hits = np.flatnonzero((walk[:, 0] == tgt[0]) & (walk[:, 1] == tgt[1]))
        if hits.size:
            n = int(hits[0]) + 1
            if pieces is not None:
                pieces.append(walk[:n])
            path = np.concatenate(pieces) if pieces is not None else None
            return Trajectory(start, target, done + n, target, path)
        if pieces is not None:
            pieces.append(walk)
        pos = walk[-1]
        done += k
        chunk = min(chunk * 2, _MAX_CHUNK)

    final = Site(int(pos[0]), int(pos[1]))
    if strict:
        raise MaxStepsExceeded(f"walk from {tuple(start)} not absorbed after {max_steps} steps")
    path = np.concatenate(pieces) if pieces is not None else None
    return Trajectory(start, None, done, final, path)


@dataclass(frozen=True)
class BasinMap:
    """Assignment of every site to one of a setting's four targets.

    ``labels[l1, l2]`` is the :attr:`ParityClass.index` of the target the
    site drains to.  Any labelling may be supplied (generic basins); the
    step-2 walk produces :func:`basin_map`, where labels equal the site's
    own parity class.
    """

    grid: GridSpec
    targets: TargetSet
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.shape != self.grid.shape:
            raise InconsistentBasins(f"labels have shape {labels.shape}, grid is {self.grid.shape}")
        if labels.min() < 0 or labels.max() > 3:
            raise InconsistentBasins("basin labels must be parity-class indices 0..3")
        for pc in CLASSES:
            t = self.targets[pc]
            if labels[t] != pc.index:
                raise InconsistentBasins(f"target {tuple(t)} ({pc.label}) is not in its own basin")
        labels = labels.astype(np.int64, copy=True)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def __getitem__(self, site: Sequence[int]) -> Site:
        return self.targets[CLASSES[int(self.labels[site[0], site[1]])]]

    @property
    def assignment(self) -> dict[Site, Site]:
        return {s: self[s] for s in self.grid.sites()}

    def basin_mask(self, pc: ParityClass) -> np.ndarray:
        return self.labels == pc.index

    def basin_sizes(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=4)


def basin_map(grid: GridSpec, ts: TargetSet) -> BasinMap:
    """Basins of the parity-preserving walk: each site drains to its class target."""
    return BasinMap(grid, ts, grid.class_labels())


def transition_matrix(grid: GridSpec, cfg: DynamicsConfig = DynamicsConfig(), absorbing: Sequence[Site] = ()) -> np.ndarray:
    """Dense one-step transition matrix over flat site indices.

    Rows of ``absorbing`` sites are replaced by self-loops.
    """
    n = grid.N
    P = np.zeros((n, n))
    for site in grid.sites():
        i = grid.flat_index(site)
        for d1, d2 in moves(cfg):
            P[i, grid.flat_index(grid.site(site.l1 + d1, site.l2 + d2))] += 0.25
    for site in absorbing:
        i = grid.flat_index(site)
        P[i, :] = 0.0
        P[i, i] = 1.0
    return P


@dataclass(frozen=True)
class HittingResult:
    """Exact absorption statistics for every start site.

    ``probabilities[l1, l2, k]`` is the probability of absorption at the
    target of class ``CLASSES[k]``; ``mean_time[l1, l2]`` is the expected
    number of steps, ``inf`` where absorption is not certain.
    """

    grid: GridSpec
    targets: TargetSet
    probabilities: np.ndarray
    mean_time: np.ndarray

    def distribution(self, site: Sequence[int]) -> dict[Site, float]:
        return {self.targets[pc]: float(self.probabilities[site[0], site[1], pc.index]) for pc in CLASSES}

    def __getitem__(self, site: Sequence[int]) -> tuple[dict[Site, float], float]:
        return self.distribution(site), float(self.mean_time[site[0], site[1]])


def hitting_oracle(grid: GridSpec, ts: TargetSet, cfg: DynamicsConfig = DynamicsConfig()) -> HittingResult:
    """Solve the absorbing chain exactly with dense linear algebra.

    All four targets are made absorbing.  Absorption probabilities are the
    minimal non-negative solution of ``(I - Q) H = R``: transient states
    that cannot reach any target get probability 0.  Mean hitting times
    solve ``(I - Q) t = 1`` on the states absorbed with certainty.
    """
    if grid.N > ORACLE_MAX_SITES:
        raise TooLarge(f"grid has {grid.N} sites; oracle limit is {ORACLE_MAX_SITES}")
    targets = ts.sites()
    absorbing = np.array([grid.flat_index(t) for t in targets])
    P = transition_matrix(grid, cfg, absorbing=targets)
    n = grid.N
    transient = np.setdiff1d(np.arange(n), absorbing)

    # states with a path to some target (backward search over the transition graph)
    reach = np.zeros(n, dtype=bool)
    reach[absorbing] = True
    frontier = list(absorbing)
    adj_in = P.T > 0
    while frontier:
        j = frontier.pop()
        for i in np.flatnonzero(adj_in[j] & ~reach):
            reach[i] = True
            frontier.append(i)

    H = np.zeros((n, 4))
    for k, a in enumerate(absorbing):
        H[a, k] = 1.0
    live = transient[reach[transient]]
    if live.size:
        Q = P[np.ix_(live, live)]
        R = P[np.ix_(live, absorbing)]
        H[live] = np.linalg.solve(np.eye(live.size) - Q, R)

    T = np.full(n, np.inf)
    T[absorbing] = 0.0
    certain = live[np.abs(H[live].sum(axis=1) - 1.0) < 1e-9]
    if certain.size:
        Qc = P[np.ix_(certain, certain)]
        T[certain] = np.linalg.solve(np.eye(certain.size) - Qc, np.ones(certain.size))
    return HittingResult(grid, ts, H.reshape(grid.L1, grid.L2, 4), T.reshape(grid.shape))
