"""Command line entry point: ``bellmd {analyze,simulate,sweep,render}``.

Exit codes: 0 success, 2 configuration error, 3 analytic consistency
failure, 4 Monte Carlo gate failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from .chsh import analyze_scenario
from .config import RunConfig, load_config
from .errors import BellMDError, ConfigError, ConsistencyError, GateFailure, InsufficientSamples
from .estimators import MeasurementDependenceAnalyzer
from .lattice import CLASSES, SETTINGS, GridSpec, Setting, build_symmetric_scenario, default_layout
from .montecarlo import (
    STREAM_ALGORITHM,
    EstimatorConfig,
    estimate_arrival_probs,
    estimate_pre_hit_distribution,
    tv_noise_scale,
)
from . import reporting

EXIT_OK, EXIT_CONFIG, EXIT_CONSISTENCY, EXIT_GATE = 0, 2, 3, 4
PRE_HIT_TV_GATE = 0.02
ARRIVAL_SIGMAS = 4.0

log = logging.getLogger("bellmd")


def _out_dir(cfg: RunConfig, args) -> Path:
    out = Path(args.out) if args.out else cfg.output
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_analyze(cfg: RunConfig, args) -> int:
    analyzer = MeasurementDependenceAnalyzer(check=False).fit(cfg.scenario())
    out = _out_dir(cfg, args)
    r = analyzer.report_
    reporting.write_report(out / "report.csv", r)
    for s in SETTINGS:
        reporting.write_prior(out / f"prior_{s.key}.csv", analyzer.priors_[s].mass, cfg.grid)
    print(f"S = {r.s:.12g}  mu = {r.mu:.12g}  bound = 2 + mu = {2 + r.mu:.12g}  slack = {r.slack:.12g}")
    if not r.consistent:
        log.error("mu_general=%r disagrees with mu_analytic=%r", r.mu, r.mu_analytic)
        return EXIT_CONSISTENCY
    if not r.satisfied:
        log.error("S=%r exceeds 2 + mu=%r", r.s, 2 + r.mu)
        return EXIT_CONSISTENCY
    return EXIT_OK


def _mc_rows(cfg: RunConfig, seed: int, n: int):
    scenario = cfg.scenario()
    _, priors = analyze_scenario(scenario)
    grid = cfg.grid
    est = EstimatorConfig(n_trajectories=n, master_seed=seed, lookback_T=cfg.lookback, workers=cfg.workers)
    rows = [
        ("meta", "", "rng", STREAM_ALGORITHM, None, None, None, None),
        ("meta", "", "seed", seed, None, None, None, None),
        ("meta", "", "n_trajectories", n, None, None, None, None),
        ("meta", "", "kernel", cfg.dynamics.kernel, None, None, None, None),
    ]
    failed = []

    def gate(stat, setting, key, value, reference, stderr, threshold, ok):
        rows.append((stat, setting, key, value, reference, stderr, threshold, ok))
        if not ok:
            failed.append(f"{stat}[{setting}:{key}]")

    # disjoint stream index ranges keep the eight estimates independent
    for k, s in enumerate(SETTINGS):
        ts, exact = scenario.targets(s), scenario.probs(s)
        res = estimate_arrival_probs(priors[s], ts, grid, replace(est, stream_offset=k * n), cfg.dynamics)
        emp = res.probs.as_array()
        for pc, p_hat, p in zip(CLASSES, emp, exact.as_array()):
            se = float(np.sqrt(p * (1 - p) / max(res.n_absorbed, 1)))
            tol = ARRIVAL_SIGMAS * se
            gate("arrival", s.key, pc.label, p_hat, p, se, tol, abs(p_hat - p) <= tol)
        gate("arrival_reliable", s.key, "n_absorbed", res.n_absorbed, None, None, 100, res.reliable)
        gate("unabsorbed", s.key, "count", res.n_unabsorbed, 0, None, 0, res.n_unabsorbed == 0)
        gate("out_of_class", s.key, "count", res.out_of_class, 0, None, 0, res.out_of_class == 0)
        emp_prior = res.sample.start_distribution()
        ref = priors[s].mass
        tv = emp_prior.tv_to(ref)
        thr = ARRIVAL_SIGMAS * tv_noise_scale(ref, max(emp_prior.total, 1))
        gate("prior_tv", s.key, "tv", tv, 0, None, thr, tv <= thr)

    ts = scenario.targets(Setting.AB)
    for j, pc in enumerate(CLASSES):
        try:
            ph = estimate_pre_hit_distribution(pc, ts, grid, replace(est, stream_offset=(4 + j) * n), cfg.dynamics)
        except InsufficientSamples as exc:
            log.warning("pre-hit %s: %s", pc.label, exc)
            gate("pre_hit_tv", Setting.AB.key, f"{pc.label}:InsufficientSamples", None, 0, None, PRE_HIT_TV_GATE, False)
            continue
        gate("pre_hit_tv", Setting.AB.key, pc.label, ph.tv, 0, ph.noise_scale, PRE_HIT_TV_GATE, ph.tv < PRE_HIT_TV_GATE)
    return rows, failed


def cmd_simulate(cfg: RunConfig, args) -> int:
    seed = cfg.resolved_seed(args.seed)
    n = args.n if args.n is not None else cfg.n_trajectories
    if n < 1:
        raise ConfigError("--n must be >= 1")
    rows, failed = _mc_rows(cfg, seed, n)
    out = _out_dir(cfg, args)
    reporting.write_csv(out / "mc_report.csv", reporting.MC_COLUMNS, rows)
    if failed:
        raise GateFailure(failed)
    print(f"all Monte Carlo gates passed (n = {n}, seed = {seed})")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    if not (-1 <= args.c_min <= args.c_max <= 1):
        raise ConfigError("need -1 <= c_min <= c_max <= 1")
    if args.steps < 2:
        raise ConfigError("--steps must be >= 2")
    rows = []
    span = args.c_max - args.c_min
    for i in range(args.steps):
        c = args.c_min + span * i / (args.steps - 1)
        report, _ = analyze_scenario(build_symmetric_scenario(cfg.grid, c, cfg.layout), check=True)
        rows.append((c, report.s, report.mu, report.bound, report.slack))
    out = _out_dir(cfg, args)
    reporting.write_csv(out / "sweep.csv", reporting.SWEEP_COLUMNS, rows)
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_render(cfg: RunConfig, args) -> int:
    scenario = cfg.scenario()
    _, priors = analyze_scenario(scenario)
    lo = min(float(p.mass.min()) for p in priors.values())
    hi = max(float(p.mass.max()) for p in priors.values())
    out = _out_dir(cfg, args)
    try:
        for s in SETTINGS:
            svg = reporting.render_svg(priors[s].mass, scenario.targets(s), cfg.grid, lo, hi)
            reporting.write_svg(out / f"prior_{s.key}.svg", svg)
    except OSError as exc:
        raise BellMDError(f"cannot write SVG: {exc}") from exc
    print(f"wrote 4 heatmaps to {out}")
    return EXIT_OK


def _default_config() -> RunConfig:
    grid = GridSpec(8, 8)
    return RunConfig(grid=grid, layout=default_layout(grid))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bellmd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="master seed (overrides config and $BELLMD_SEED)")
        p.add_argument("--n", type=int, help="number of Monte Carlo trajectories")
        return p

    common(sub.add_parser("analyze", help="analytic CHSH report and prior dumps"))
    common(sub.add_parser("simulate", help="Monte Carlo validation of the analytic pipeline"))
    sw = common(sub.add_parser("sweep", help="S, mu and slack over a range of correlations"), config_required=False)
    sw.add_argument("--c-min", type=float, default=0.0)
    sw.add_argument("--c-max", type=float, default=1.0)
    sw.add_argument("--steps", type=int, default=101)
    common(sub.add_parser("render", help="SVG heatmaps of the conditioned priors"))
    return parser


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "sweep": cmd_sweep, "render": cmd_render}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else _default_config()
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConsistencyError as exc:
        print(f"consistency error: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except GateFailure as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_GATE
    except BellMDError as exc:
        # remaining library errors come from values in the config (bad grid, probabilities, ...)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
