"""Monte Carlo estimators that cross-check the analytic pipeline.

Every trajectory ``i`` draws from its own stream ``derive_stream(seed, i)``.
Trajectories are split into fixed-size blocks; blocks may run in worker
processes, and results are concatenated in index order. Tallies therefore
never depend on the number of workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .conditioning import ConditionedPrior
from .dynamics import DynamicsConfig, displacements, run_to_absorption, transition_matrix
from .errors import GridMismatch, InsufficientSamples
from .lattice import ArrivalProbs, GridSpec, ParityClass, TargetSet, parity_class

STREAM_ALGORITHM = "numpy.random.PCG64 seeded by SeedSequence(master_seed, spawn_key=(index,))"
MIN_RELIABLE = 100
BLOCK = 4096
_SEED_MASK = (1 << 64) - 1


def derive_stream(master_seed: int, index: int) -> np.random.Generator:
    """Independent, reproducible stream for trajectory ``index``."""
    if master_seed < 0 or index < 0:
        raise ValueError("master_seed and index must be non-negative")
    ss = np.random.SeedSequence(master_seed & _SEED_MASK, spawn_key=(index & _SEED_MASK,))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class EstimatorConfig:
    n_trajectories: int = 100_000
    master_seed: int = 0
    lookback_T: Optional[int] = None
    workers: int = 1
    stream_offset: int = 0

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.lookback_T is not None and self.lookback_T < 0:
            raise ValueError("lookback_T must be >= 0")
        if self.master_seed < 0 or self.stream_offset < 0:
            raise ValueError("master_seed and stream_offset must be non-negative")

    @property
    def index_range(self) -> tuple[int, int]:
        """Stream indices used by the trajectories of this run."""
        return self.stream_offset, self.stream_offset + self.n_trajectories


def class_diffusive_scale(grid: GridSpec) -> int:
    """Number of sites in one parity class; the walk mixes on the class in O(this) steps."""
    return (grid.L1 // 2) * (grid.L2 // 2)


def default_lookback(grid: GridSpec) -> int:
    return 10 * class_diffusive_scale(grid)


def _run_blocks(func: Callable, cfg: EstimatorConfig, *args) -> list:
    first, end = cfg.index_range
    blocks = [(lo, min(lo + BLOCK, end)) for lo in range(first, end, BLOCK)]
    workers = cfg.workers
    if workers == 1 or len(blocks) == 1:
        return [func(lo, hi, *args) for lo, hi in blocks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(func, lo, hi, *args) for lo, hi in blocks]
        return [f.result() for f in futures]


@dataclass(frozen=True)
class EmpiricalDistribution:
    counts: np.ndarray
    total: int

    @property
    def probabilities(self) -> np.ndarray:
        if self.total == 0:
            return np.zeros(self.counts.shape)
        return self.counts / self.total

    def tv_to(self, reference: np.ndarray) -> float:
        return 0.5 * float(np.abs(self.probabilities - np.asarray(reference)).sum())


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def tv_noise_scale(reference: np.ndarray, n: int) -> float:
    """``1/2 * sum_x sqrt(p_x (1 - p_x) / n)``: one binomial standard error per site, summed."""
    p = np.asarray(reference, dtype=float)
    return 0.5 * float(np.sqrt(p * (1 - p) / n).sum())


# -- absorption sampling ---------------------------------------------------

@dataclass(frozen=True)
class AbsorptionSample:
    """Per-trajectory records, in trajectory-index order.

    ``end_class`` is the parity-class index of the absorbing target, or -1
    for walks that ran out of steps.
    """

    grid: GridSpec
    start: np.ndarray
    end_class: np.ndarray
    steps: np.ndarray

    @property
    def n(self) -> int:
        return int(self.start.size)

    @property
    def start_class(self) -> np.ndarray:
        l1, l2 = np.divmod(self.start, self.grid.L2)
        return 2 * (l1 % 2) + (l2 % 2)

    @property
    def absorbed(self) -> np.ndarray:
        return self.end_class >= 0

    @property
    def n_unabsorbed(self) -> int:
        return int((~self.absorbed).sum())

    @property
    def out_of_class(self) -> int:
        ok = self.absorbed
        return int((self.end_class[ok] != self.start_class[ok]).sum())

    def start_distribution(self, absorbed_only: bool = True) -> EmpiricalDistribution:
        starts = self.start[self.absorbed] if absorbed_only else self.start
        counts = np.bincount(starts, minlength=self.grid.N).reshape(self.grid.shape)
        return EmpiricalDistribution(counts, int(starts.size))


def _absorption_block(lo, hi, grid, ts, cdf, seed, dyn):
    start = np.empty(hi - lo, dtype=np.int64)
    end = np.empty(hi - lo, dtype=np.int64)
    steps = np.empty(hi - lo, dtype=np.int64)
    for k, i in enumerate(range(lo, hi)):
        rng = derive_stream(seed, i)
        idx = min(int(np.searchsorted(cdf, rng.random(), side="right")), cdf.size - 1)
        traj = run_to_absorption(grid.site_at(idx), ts, grid, dyn, rng)
        start[k] = idx
        end[k] = parity_class(traj.absorbed_at).index if traj.absorbed else -1
        steps[k] = traj.steps
    return start, end, steps


def _prior_cdf(mass: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(np.asarray(mass, dtype=float).ravel())
    return cdf / cdf[-1]


def sample_absorption(
    prior,
    ts: TargetSet,
    grid: GridSpec,
    cfg: EstimatorConfig = EstimatorConfig(),
    dyn: DynamicsConfig = DynamicsConfig(),
) -> AbsorptionSample:
    """Draw starts from ``prior`` and run each to absorption.

    Stream layout per trajectory: one uniform picks the start by inverse
    CDF, then two uniforms per step.
    """
    mass = np.asarray(getattr(prior, "mass", prior), dtype=float)
    if mass.shape != grid.shape:
        raise GridMismatch(f"prior shape {mass.shape} does not match grid {grid.shape}")
    dyn = replace(dyn, record_trajectory=False)
    parts = _run_blocks(_absorption_block, cfg,
                        grid, ts, _prior_cdf(mass), cfg.master_seed, dyn)
    start, end, steps = (np.concatenate(x) for x in zip(*parts))
    return AbsorptionSample(grid, start, end, steps)


@dataclass(frozen=True)
class ArrivalEstimate:
    probs: ArrivalProbs
    stderr: np.ndarray
    n: int
    n_absorbed: int
    n_unabsorbed: int
    out_of_class: int
    sample: AbsorptionSample

    @property
    def reliable(self) -> bool:
        return self.n_absorbed >= MIN_RELIABLE


def estimate_arrival_probs(
    prior: ConditionedPrior,
    ts: TargetSet,
    grid: GridSpec,
    cfg: EstimatorConfig = EstimatorConfig(),
    dyn: DynamicsConfig = DynamicsConfig(),
) -> ArrivalEstimate:
    """Empirical arrival frequencies at the four targets with binomial standard errors."""
    sample = sample_absorption(prior, ts, grid, cfg, dyn)
    absorbed = sample.end_class[sample.absorbed]
    if absorbed.size == 0:
        raise InsufficientSamples("no trajectory was absorbed; raise max_steps")
    freq = np.bincount(absorbed, minlength=4) / absorbed.size
    stderr = np.sqrt(freq * (1 - freq) / absorbed.size)
    return ArrivalEstimate(
        probs=ArrivalProbs.from_array(freq),
        stderr=stderr,
        n=sample.n,
        n_absorbed=int(absorbed.size),
        n_unabsorbed=sample.n_unabsorbed,
        out_of_class=sample.out_of_class,
        sample=sample,
    )


# -- pre-hit distribution --------------------------------------------------

PRE_HIT_METHODS = ("reversed", "first_passage")


def _lookback_for(i: int, T: int) -> int:
    # alternate T and T+1 to average out the bipartite period of the walk
    return T + (i % 2) if T > 0 else 0


def _reversed_block(lo, hi, grid, target, T, seed, dyn):
    out = np.empty(hi - lo, dtype=np.int64)
    mod = np.array(grid.shape)
    tgt = np.array(target, dtype=np.int64)
    for k, i in enumerate(range(lo, hi)):
        rng = derive_stream(seed, i)
        t = _lookback_for(i, T)
        pos = (tgt + displacements(rng.random((t, 2)), dyn).sum(axis=0)) % mod if t else tgt
        out[k] = pos[0] * grid.L2 + pos[1]
    return out


def _first_passage_block(lo, hi, grid, ts, class_sites, T, seed, dyn):
    out = np.full(hi - lo, -1, dtype=np.int64)
    m = len(class_sites)
    for k, i in enumerate(range(lo, hi)):
        rng = derive_stream(seed, i)
        start = class_sites[min(int(rng.random() * m), m - 1)]
        traj = run_to_absorption(start, ts, grid, dyn, rng)
        t = _lookback_for(i, T)
        if traj.absorbed and traj.steps >= t:
            l1, l2 = traj.path[traj.steps - t]
            out[k] = l1 * grid.L2 + l2
    return out


@dataclass(frozen=True)
class PreHitEstimate:
    distribution: EmpiricalDistribution
    reference: np.ndarray
    tv: float
    n: int
    qualifying: int
    lookback_T: int
    method: str

    @property
    def qualifying_fraction(self) -> float:
        return self.qualifying / self.n

    @property
    def noise_scale(self) -> float:
        return tv_noise_scale(self.reference, max(self.qualifying, 1))


def uniform_over_class(grid: GridSpec, pc: ParityClass) -> np.ndarray:
    return grid.class_mask(pc) / grid.class_size


def estimate_pre_hit_distribution(
    pc: ParityClass,
    ts: TargetSet,
    grid: GridSpec,
    cfg: EstimatorConfig = EstimatorConfig(),
    dyn: DynamicsConfig = DynamicsConfig(),
    method: str = "reversed",
) -> PreHitEstimate:
    """Distribution of the configuration ``lookback_T`` steps before arrival at the class target.

    ``method="reversed"`` samples the law of that configuration under the
    free walk conditioned on arrival at the target.  Because the kernel is
    symmetric this equals the walk run backward from the target.
    ``method="first_passage"`` starts uniformly in the class, runs to the
    first absorption and keeps the site ``lookback_T`` steps earlier from
    walks at least that long.  That law is depleted near the target and
    does not become uniform.
    """
    if method not in PRE_HIT_METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {PRE_HIT_METHODS}")
    T = default_lookback(grid) if cfg.lookback_T is None else cfg.lookback_T
    target = ts[pc]
    if method == "reversed":
        parts = _run_blocks(_reversed_block, cfg,
                            grid, target, T, cfg.master_seed, dyn)
    else:
        class_sites = [s for s in grid.sites() if parity_class(s) == pc]
        parts = _run_blocks(_first_passage_block, cfg,
                            grid, ts, class_sites, T, cfg.master_seed, replace(dyn, record_trajectory=True))
    sites = np.concatenate(parts)
    kept = sites[sites >= 0]
    if kept.size < MIN_RELIABLE:
        raise InsufficientSamples(f"only {kept.size} qualifying trajectories (< {MIN_RELIABLE})")
    counts = np.bincount(kept, minlength=grid.N).reshape(grid.shape)
    dist = EmpiricalDistribution(counts, int(kept.size))
    ref = uniform_over_class(grid, pc)
    return PreHitEstimate(dist, ref, dist.tv_to(ref), cfg.n_trajectories, int(kept.size), T, method)


def pre_hit_oracle(
    pc: ParityClass,
    ts: TargetSet,
    grid: GridSpec,
    lookback_T: int,
    dyn: DynamicsConfig = DynamicsConfig(),
    method: str = "reversed",
) -> tuple[np.ndarray, float]:
    """Exact counterpart of :func:`estimate_pre_hit_distribution`.

    Returns ``(distribution, qualifying_fraction)``; the distribution is an
    ``(L1, L2)`` array and includes the same T / T+1 parity averaging.
    """
    T = lookback_T
    target = grid.flat_index(ts[pc])
    lookbacks = (T, T + 1) if T > 0 else (0,)
    if method == "reversed":
        P = transition_matrix(grid, dyn)
        dists = []
        for t in lookbacks:
            v = np.zeros(grid.N)
            v[target] = 1.0
            for _ in range(t):
                v = v @ P
            dists.append(v)
        return (sum(dists) / len(dists)).reshape(grid.shape), 1.0

    # first passage: killed chain on the class sites that can reach the target
    P = transition_matrix(grid, dyn)
    cls = np.flatnonzero(grid.class_mask(pc).ravel())
    m = cls.size
    others = cls[cls != target]
    Q = P[np.ix_(others, others)]
    r = P[others, target]
    reach = r > 0
    while True:
        grown = reach | (Q[:, reach] > 0).any(axis=1)
        if (grown == reach).all():
            break
        reach = grown
    live = np.flatnonzero(reach)
    Ql = Q[np.ix_(live, live)]
    u = np.full(live.size, 1.0 / m)
    green = np.linalg.solve((np.eye(live.size) - Ql).T, u)
    weights, qual = [], []
    for t in lookbacks:
        w = np.zeros(grid.N)
        if t == 0:
            q = u.sum() + 1.0 / m  # every absorbed walk qualifies
            w[target] = 1.0
        else:
            h = r[live].copy()
            for _ in range(t - 1):
                h = Ql @ h
            w[others[live]] = green * h
            q = float(w.sum())
            w /= q
        weights.append((q, w))
        qual.append(q)
    total = sum(qual)
    dist = sum(q * w for q, w in weights) / total
    return dist.reshape(grid.shape), total / len(lookbacks)
