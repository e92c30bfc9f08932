"""CSV and SVG writers.

CSVs are comma separated with a header row, LF line endings and numbers
formatted to 12 significant digits so that re-runs diff cleanly.
"""
from __future__ import annotations

import colorsys
import csv
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .chsh import ChshReport
from .lattice import GridSpec, Setting, TargetSet, parity_class

REPORT_COLUMNS = ("c_ab", "c_abp", "c_apb", "c_apbp", "S", "mu_general", "mu_analytic",
                  "bound", "slack", "satisfied", "consistent")
SWEEP_COLUMNS = ("c", "S", "mu", "bound", "slack")
MC_COLUMNS = ("statistic", "setting", "key", "value", "reference", "stderr", "threshold", "passed")

_HUES = {"red": 0.0, "green": 1 / 3, "blue": 0.58, "purple": 0.78}
CELL = 24
LIGHT, DARK = 0.92, 0.38


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x == 0:
            return "0"  # avoids "-0"
        return f"{x:.12g}"
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def report_row(r: ChshReport) -> list:
    return [r.c_ab, r.c_abp, r.c_apb, r.c_apbp, r.s, r.mu, r.mu_analytic,
            r.bound, r.slack, r.satisfied, r.consistent]


def write_report(path, report: ChshReport) -> Path:
    return write_csv(path, REPORT_COLUMNS, [report_row(report)])


def write_prior(path, mass: np.ndarray, grid: GridSpec) -> Path:
    rows = ((s.l1, s.l2, parity_class(s).label, mass[s.l1, s.l2]) for s in grid.sites())
    return write_csv(path, ("l1", "l2", "parity", "mass"), rows)


def _shade(color: str, level: float) -> str:
    lightness = LIGHT - level * (LIGHT - DARK)
    r, g, b = colorsys.hls_to_rgb(_HUES[color], lightness, 0.7)
    return "#{:02x}{:02x}{:02x}".format(*(round(255 * v) for v in (r, g, b)))


def shade_levels(mass: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Linear map of mass onto [0, 1]; a flat range maps everything to 0.5."""
    if hi - lo <= 1e-15 * max(abs(hi), 1.0):
        return np.full(mass.shape, 0.5)
    return np.clip((mass - lo) / (hi - lo), 0.0, 1.0)


def render_svg(mass: np.ndarray, ts: TargetSet, grid: GridSpec,
               lo: Optional[float] = None, hi: Optional[float] = None) -> str:
    """Heatmap of one conditioned prior with its targets marked by crosses.

    l1 runs left to right and l2 bottom to top.  Shading interpolates
    between ``lo`` and ``hi`` (default: this prior's own range).
    """
    lo = float(mass.min()) if lo is None else lo
    hi = float(mass.max()) if hi is None else hi
    levels = shade_levels(mass, lo, hi)
    setting: Setting = ts.setting
    w, h = grid.L1 * CELL, grid.L2 * CELL
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f"<title>P(lambda | {setting.x}, {setting.y}) [{setting.color}]</title>",
    ]
    for s in grid.sites():
        x, y = s.l1 * CELL, (grid.L2 - 1 - s.l2) * CELL
        lvl = float(levels[s.l1, s.l2])
        out.append(
            f'<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
            f'fill="{_shade(setting.color, lvl)}" stroke="#ffffff" stroke-width="1" '
            f'data-l1="{s.l1}" data-l2="{s.l2}" data-mass="{fmt(mass[s.l1, s.l2])}" data-level="{lvl:.6f}"/>'
        )
    pad = CELL // 5
    for t in ts.sites():
        x0, y0 = t.l1 * CELL + pad, (grid.L2 - 1 - t.l2) * CELL + pad
        x1, y1 = x0 + CELL - 2 * pad, y0 + CELL - 2 * pad
        out.append(
            f'<path d="M{x0},{y0}L{x1},{y1}M{x0},{y1}L{x1},{y0}" stroke="#000000" '
            f'stroke-width="2" data-target="{t.l1},{t.l2}"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path
