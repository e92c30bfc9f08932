"""Input validation helpers shared by the estimators and the CLI."""
from __future__ import annotations

import math

import numpy as np
from sklearn.utils import check_array

from .errors import GridMismatch, InvalidCorrelation
from .lattice import GridSpec, Scenario


def check_sites(X, grid: GridSpec) -> np.ndarray:
    """Coerce ``X`` to an ``(n, 2)`` integer array of sites reduced onto the grid."""
    X = check_array(X, dtype=None, ensure_2d=True)
    if X.shape[1] != 2:
        raise ValueError(f"sites need 2 columns (l1, l2), got {X.shape[1]}")
    if not np.issubdtype(X.dtype, np.integer):
        if not np.all(np.equal(np.mod(X, 1), 0)):
            raise ValueError("site coordinates must be integers")
        X = X.astype(np.int64)
    return np.mod(X, np.array(grid.shape))


def check_mass(mass, grid: GridSpec) -> np.ndarray:
    mass = np.asarray(getattr(mass, "mass", mass), dtype=float)
    if mass.shape != grid.shape:
        raise GridMismatch(f"mass array has shape {mass.shape}, grid is {grid.shape}")
    return mass


def check_correlation(c) -> float:
    c = float(c)
    if not math.isfinite(c) or abs(c) > 1:
        raise InvalidCorrelation(f"correlation must lie in [-1, 1], got {c!r}")
    return c


def check_scenario(scenario) -> Scenario:
    if not isinstance(scenario, Scenario):
        raise TypeError(f"expected a Scenario, got {type(scenario).__name__}")
    return scenario
