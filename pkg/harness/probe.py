# harness/probe.py
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from discretization.finite_difference import derivative, stencil_width
from discretization.models import GridFunction
from harness.config import STABILIZATION_BAND
from harness.estimates import check_probe_band, first_checked_level
from harness.models import ProbeReport
from utils.errors import GridTooCoarse

logger = logging.getLogger(__name__)

# share of the domain width kept clear of the side boundaries
DEFAULT_X_MARGIN = 0.25
# maxima below this fraction of the largest one are treated as zero
ZERO_FLOOR = 1e-8


def derivative_label(i: int, j: int) -> str:
    return f"dx{i}dy{j}"


def strip_mask(u: GridFunction, strip_height: float, x_margin: float = DEFAULT_X_MARGIN) -> np.ndarray:
    """Nodes with 0 < y < strip_height, at least x_margin * width from the sides."""
    d = u.grid.domain
    X, Y = u.grid.mesh()
    pad = x_margin * d.width
    return (Y > 0) & (Y < strip_height) & (X >= d.x_min + pad) & (X <= d.x_max - pad)


def derivative_maxima(u: GridFunction, k: int, strip_height: float,
                      x_margin: float = DEFAULT_X_MARGIN) -> Dict[str, float]:
    """max |D_x^i D_y^j u| over the strip for every i + j <= k."""
    grid = u.grid
    width = stencil_width(k) if k > 0 else 1
    if min(grid.nx, grid.ny) + 1 < width:
        raise GridTooCoarse(f"order {k} stencils need {width} nodes per direction, grid is {grid.label()}")
    sel = strip_mask(u, strip_height, x_margin)
    if not sel.any():
        raise GridTooCoarse(f"no nodes of {grid.label()} lie in the strip 0 < y < {strip_height}")
    out = {}
    for order in range(k + 1):
        for j in range(order + 1):
            i = order - j
            out[derivative_label(i, j)] = float(np.max(np.abs(derivative(u, i, j)[sel])))
    return out


def smoothness_probe(
    solutions: Sequence[GridFunction],
    k: int,
    strip_height: float,
    x_margin: float = DEFAULT_X_MARGIN,
    band: Tuple[float, float] = STABILIZATION_BAND,
    start: Optional[int] = None,
) -> ProbeReport:
    """Track derivative maxima near the degenerate boundary across a ladder of solutions.

    A derivative passes when each successive ratio of its maxima from level
    `start` on lies in `band`; by default the coarsest level of a ladder of
    three or more is not judged.
    """
    per_level = [derivative_maxima(u, k, strip_height, x_margin) for u in solutions]
    if start is None:
        start = first_checked_level(len(solutions))
    labels = list(per_level[0])
    maxima = {name: [level[name] for level in per_level] for name in labels}
    floor = ZERO_FLOOR * max((max(v) for v in maxima.values()), default=0.0)
    ratios: Dict[str, List[float]] = {}
    passed: Dict[str, bool] = {}
    for name, values in maxima.items():
        ratios[name] = [b / a if a > 0 else float("nan") for a, b in zip(values, values[1:])]
        passed[name] = check_probe_band(values, band, floor, start=start)
        if not passed[name]:
            logger.info("%s does not stabilise: maxima %s", name, ", ".join(f"{v:.4g}" for v in values))
    return ProbeReport(
        k=k,
        strip_height=strip_height,
        levels=[u.grid.label() for u in solutions],
        maxima=maxima,
        ratios=ratios,
        passed_by_derivative=passed,
    )


def probe_table(report: ProbeReport) -> pd.DataFrame:
    """Long format: one row per (derivative, level)."""
    rows = []
    for name, values in report.maxima.items():
        for level, (grid, value) in enumerate(zip(report.levels, values)):
            ratio: Optional[float] = report.ratios[name][level - 1] if level else None
            rows.append({"derivative": name, "grid": grid, "max_abs": value, "ratio": ratio,
                         "passed": report.passed_by_derivative[name]})
    return pd.DataFrame(rows)
