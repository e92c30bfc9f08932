"""JSON run configuration (``schema_version`` 1)."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

import jsonschema

from .dynamics import DynamicsConfig
from .errors import BellMDError, ConfigError
from .lattice import (
    SETTINGS,
    ArrivalProbs,
    GridSpec,
    Scenario,
    Setting,
    TargetSet,
    build_symmetric_scenario,
    default_layout,
    validate_target_set,
)

SEED_ENV = "BELLMD_SEED"


def load_schema() -> dict:
    return json.loads(resources.files("bellmd").joinpath("config.schema.json").read_text())


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    layout: Mapping[Setting, TargetSet]
    correlation: Optional[float] = None
    arrival_probs: Optional[Mapping[Setting, ArrivalProbs]] = None
    dynamics: DynamicsConfig = DynamicsConfig()
    n_trajectories: int = 100_000
    seed: Optional[int] = None
    lookback: Optional[int] = None
    workers: int = 1
    output: Path = field(default_factory=lambda: Path("out"))

    def require_probabilities(self):
        if (self.correlation is None) == (self.arrival_probs is None):
            raise ConfigError("config needs exactly one of 'correlation' or 'arrival_probs'")

    def scenario(self) -> Scenario:
        self.require_probabilities()
        if self.correlation is not None:
            return build_symmetric_scenario(self.grid, self.correlation, self.layout)
        return Scenario(self.grid, {s: (self.layout[s], self.arrival_probs[s]) for s in SETTINGS})

    def resolved_seed(self, override: Optional[int] = None) -> int:
        """``--seed`` beats the config file, which beats ``$BELLMD_SEED``; default 0."""
        if override is not None:
            return override
        if self.seed is not None:
            return self.seed
        env = os.environ.get(SEED_ENV)
        if env:
            try:
                return int(env)
            except ValueError:
                raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None
        return 0


def parse_config(doc: Mapping[str, Any]) -> RunConfig:
    try:
        jsonschema.validate(doc, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    try:
        grid = GridSpec(*doc["grid"])
        layout_doc = doc.get("layout", "default")
        if layout_doc == "default":
            layout = default_layout(grid)
        else:
            layout = {
                s: validate_target_set(grid, TargetSet.from_sites(s, layout_doc[s.key]))
                for s in SETTINGS
            }
        probs = None
        if "arrival_probs" in doc:
            probs = {s: ArrivalProbs.from_array(doc["arrival_probs"][s.key]) for s in SETTINGS}
        dyn = DynamicsConfig(**doc.get("dynamics", {}))
        est = doc.get("estimator", {})
        return RunConfig(
            grid=grid,
            layout=layout,
            correlation=doc.get("correlation"),
            arrival_probs=probs,
            dynamics=dyn,
            n_trajectories=est.get("n_trajectories", 100_000),
            seed=est.get("seed"),
            lookback=est.get("lookback"),
            workers=est.get("workers", 1),
            output=Path(doc.get("output", "out")),
        )
    except (BellMDError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(doc)
