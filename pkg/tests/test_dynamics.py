import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellmd.dynamics import (
    BasinMap,
    DynamicsConfig,
    apply_draws,
    basin_map,
    hitting_oracle,
    run_to_absorption,
    step,
    transition_matrix,
)
from bellmd.errors import InconsistentBasins, MaxStepsExceeded, TooLarge
from bellmd.lattice import CLASSES, GridSpec, ParityClass, Setting, Site, TargetSet, default_layout, parity_class
from bellmd.montecarlo import derive_stream

DIAG = DynamicsConfig(kernel="diagonal")
AXIS = DynamicsConfig()
PLUS, MINUS = 0.25, 0.75  # uniforms below / above one half


@pytest.mark.parametrize("site, draws, expected", [
    ((0, 0), (PLUS, PLUS), (2, 2)),
    ((0, 0), (MINUS, MINUS), (6, 6)),
    ((7, 1), (PLUS, MINUS), (1, 7)),
])
def test_diagonal_step_examples(grid8, site, draws, expected):
    assert apply_draws(site, grid8, draws, DIAG) == expected


@pytest.mark.parametrize("draws, expected", [
    ((PLUS, PLUS), (2, 0)),
    ((PLUS, MINUS), (6, 0)),
    ((MINUS, PLUS), (0, 2)),
    ((MINUS, MINUS), (0, 6)),
])
def test_single_axis_step(grid8, draws, expected):
    assert apply_draws((0, 0), grid8, draws, AXIS) == expected


def test_step_consumes_two_draws(grid8):
    a, b = derive_stream(1, 0), derive_stream(1, 0)
    step((0, 0), grid8, a)
    b.random(2)
    assert a.random() == b.random()


@pytest.mark.parametrize("cfg", [AXIS, DIAG])
@pytest.mark.parametrize("dims", [(4, 4), (6, 8), (8, 8)])
def test_parity_preserved_exhaustively(cfg, dims):
    grid = GridSpec(*dims)
    for s in grid.sites():
        for draws in itertools.product((PLUS, MINUS), repeat=2):
            assert parity_class(apply_draws(s, grid, draws, cfg)) == parity_class(s)


@pytest.mark.parametrize("cfg", [AXIS, DIAG])
def test_transition_matrix_symmetric_stochastic(grid8, cfg):
    P = transition_matrix(grid8, cfg)
    np.testing.assert_allclose(P.sum(axis=1), 1.0)
    np.testing.assert_array_equal(P, P.T)


def test_immediate_absorption(grid8):
    ts = default_layout(grid8)[Setting.AB]
    traj = run_to_absorption(ts[ParityClass.OE], ts, grid8, rng=derive_stream(0, 0))
    assert traj.absorbed and traj.steps == 0 and traj.visited == [ts[ParityClass.OE]]


def test_even_even_walk_lands_on_even_even_target(grid8):
    ts = TargetSet.from_sites(Setting.AB, [(2, 2), (2, 3), (3, 2), (3, 3)])
    traj = run_to_absorption((0, 0), ts, grid8, rng=derive_stream(3, 0))
    assert traj.absorbed_at == (2, 2) and traj.steps >= 1


def test_trajectory_invariants(grid8):
    ts = default_layout(grid8)[Setting.AB]
    for i in range(50):
        rng = derive_stream(11, i)
        start = grid8.site_at(int(rng.integers(grid8.N)))
        traj = run_to_absorption(start, ts, grid8, AXIS, rng)
        path = traj.visited
        assert len(path) == traj.steps + 1
        assert path[0] == start and path[-1] == traj.absorbed_at == ts[parity_class(start)]
        assert ts[parity_class(start)] not in path[:-1]
        for a, b in zip(path, path[1:]):
            d1, d2 = (b[0] - a[0]) % 8, (b[1] - a[1]) % 8
            assert sorted((d1, d2)) in ([0, 2], [0, 6])


@pytest.mark.parametrize("cfg", [AXIS, DIAG])
def test_block_reads_match_single_steps(grid8, cfg):
    """Drawing in blocks must reproduce the walk obtained by calling step() repeatedly."""
    ts = default_layout(grid8)[Setting.AB]
    for i in range(20):
        traj = run_to_absorption((0, 0), ts, grid8, cfg, derive_stream(5, i))
        if not traj.absorbed:
            continue
        rng = derive_stream(5, i)
        site, path = Site(0, 0), [Site(0, 0)]
        while site != ts[ParityClass.EE]:
            site = step(site, grid8, rng, cfg)
            path.append(site)
        assert path == traj.visited


def test_determinism(grid8):
    ts = default_layout(grid8)[Setting.AB]
    a = run_to_absorption((1, 4), ts, grid8, AXIS, derive_stream(9, 3))
    b = run_to_absorption((1, 4), ts, grid8, AXIS, derive_stream(9, 3))
    np.testing.assert_array_equal(a.path, b.path)


def test_max_steps_exceeded(grid8):
    ts = default_layout(grid8)[Setting.AB]
    cfg = DynamicsConfig(max_steps=1)
    traj = run_to_absorption((6, 6), ts, grid8, cfg, derive_stream(0, 0))
    assert not traj.absorbed and traj.steps == 1 and traj.absorbed_at is None
    with pytest.raises(MaxStepsExceeded):
        run_to_absorption((6, 6), ts, grid8, cfg, derive_stream(0, 0), strict=True)


def test_default_max_steps(grid8):
    assert AXIS.resolved_max_steps(grid8) == 10 * 4 * 4 * 16


@pytest.mark.parametrize("bad", [dict(step_length=3), dict(step_length=0), dict(max_steps=0), dict(kernel="x")])
def test_dynamics_config_validation(bad):
    with pytest.raises(ValueError):
        DynamicsConfig(**bad)


def test_basin_map(grid8):
    ts = default_layout(grid8)[Setting.AB]
    bm = basin_map(grid8, ts)
    assert bm[(4, 6)] == ts[ParityClass.EE]
    assert bm[(1, 2)] == ts[ParityClass.OE]
    for s, t in bm.assignment.items():
        assert parity_class(t) == parity_class(s)
    for t in ts.sites():
        assert bm[t] == t


def test_basin_map_rejects_target_outside_own_basin(grid8):
    ts = default_layout(grid8)[Setting.AB]
    labels = grid8.class_labels().copy()
    labels[ts[ParityClass.EE]] = ParityClass.OO.index
    with pytest.raises(InconsistentBasins):
        BasinMap(grid8, ts, labels)


def _hitting_by_iteration(grid, ts, cfg, sweeps=20000):
    """Value iteration h <- R + Q h; independent of the direct linear solve."""
    P = transition_matrix(grid, cfg, absorbing=ts.sites())
    absorbing = [grid.flat_index(t) for t in ts.sites()]
    h = np.zeros((grid.N, 4))
    for k, a in enumerate(absorbing):
        h[a, k] = 1.0
    for _ in range(sweeps):
        new = P @ h
        if np.abs(new - h).max() < 1e-15:
            break
        h = new
    return h.reshape(grid.L1, grid.L2, 4)


@pytest.mark.parametrize("dims", [(4, 4), (6, 6), (8, 8), (4, 6)])
def test_oracle_absorbs_into_class_target(dims):
    grid = GridSpec(*dims)
    ts = default_layout(grid)[Setting.AB]
    res = hitting_oracle(grid, ts, AXIS)
    for s in grid.sites():
        dist = res.distribution(s)
        assert dist[ts[parity_class(s)]] == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(res.probabilities.sum(axis=2), 1.0, atol=1e-10)
    np.testing.assert_allclose(res.probabilities, _hitting_by_iteration(grid, ts, AXIS), atol=1e-9)
    for t in ts.sites():
        assert res.mean_time[t] == 0


def test_oracle_hand_derived_times_4x4(grid4):
    # class sublattice is 2x2; from the far corner: h = 1 + h_adj, h_adj = 1 + h/2 -> h_adj = 3, h = 4
    ts = TargetSet.from_sites(Setting.AB, [(0, 0), (0, 1), (1, 0), (1, 1)])
    res = hitting_oracle(grid4, ts, AXIS)
    assert res.mean_time[2, 2] == pytest.approx(4.0, abs=1e-12)
    assert res.mean_time[0, 2] == pytest.approx(3.0, abs=1e-12)
    assert res.mean_time[2, 0] == pytest.approx(3.0, abs=1e-12)


def test_diagonal_kernel_is_reducible_when_half_sides_even(grid4):
    """With (±2, ±2) moves on 4x4 the walk is deterministic and half of each class never hits."""
    ts = TargetSet.from_sites(Setting.AB, [(0, 0), (0, 1), (1, 0), (1, 1)])
    res = hitting_oracle(grid4, ts, DIAG)
    assert res.mean_time[2, 2] == 1.0
    assert res.probabilities[0, 2].sum() == 0.0 and np.isinf(res.mean_time[0, 2])
    np.testing.assert_allclose(res.probabilities, _hitting_by_iteration(grid4, ts, DIAG), atol=1e-12)


def test_diagonal_kernel_irreducible_when_half_side_odd():
    grid = GridSpec(6, 6)
    ts = default_layout(grid)[Setting.AB]
    res = hitting_oracle(grid, ts, DIAG)
    np.testing.assert_allclose(res.probabilities.sum(axis=2), 1.0, atol=1e-10)


def test_oracle_guard():
    grid = GridSpec(66, 64)
    with pytest.raises(TooLarge):
        hitting_oracle(grid, default_layout(grid)[Setting.AB])


@settings(max_examples=50, deadline=None)
@given(l1=st.integers(0, 7), l2=st.integers(0, 7), seed=st.integers(0, 2**32))
def test_walk_never_changes_class(l1, l2, seed):
    grid = GridSpec(8, 8)
    ts = default_layout(grid)[Setting.APB]
    traj = run_to_absorption((l1, l2), ts, grid, AXIS, derive_stream(seed, 0))
    classes = {parity_class(s) for s in traj.visited}
    assert classes == {parity_class((l1, l2))}
