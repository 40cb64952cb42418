# harness/convergence.py
"""Manufactured-solution studies on a refinement ladder."""
import logging
import math
from typing import Iterable, List, Optional

import numpy as np
import pandas as pd

from discretization.assembly import assemble_system, discrete_bilinear_form, weighted_inner_product
from discretization.models import Grid, GridFunction, interpolate
from discretization.solver import solve_system
from geometry.distance import ball_mask
from geometry.models import BallSpec
from harness.config import (
    DEFAULT_MAX_ITER, DEFAULT_RESTART, DEFAULT_TOLERANCE, EXACT_ERROR_FLOOR, MIN_CONSISTENCY_ORDER,
)
from heston.fields import AnalyticField
from heston.models import Coefficients
from heston.operator import OperatorImage
from spaces.models import NormRequest, SpaceTag, WeightSpec
from spaces.sobolev import sobolev_norm, weighted_lp_norm

logger = logging.getLogger(__name__)

ERROR_COLUMNS = ("l2", "h1", "sup")


def manufactured_problem(c: Coefficients, grid: Grid, field: AnalyticField, source_order: int = 0,
                         diffusion_sign: float = 1.0):
    """System for u = field: f = A field, Dirichlet data = field on the non-degenerate boundary.

    Returns (system, exact, source); `source` caches exact derivatives up to `source_order`.
    """
    exact = interpolate(grid, field)
    source = GridFunction.from_field(grid, OperatorImage(c, field), source_order)
    system = assemble_system(c, grid, exact, source, diffusion_sign=diffusion_sign)
    return system, exact, source


def default_half_ball(grid: Grid) -> BallSpec:
    """B_R^+ centred on the degenerate boundary at mid-width, R a quarter of the shorter side."""
    d = grid.domain
    radius = 0.25 * min(d.width, d.height)
    return BallSpec(center=(0.5 * (d.x_min + d.x_max), 0.0), radius=radius)


def _orders(errors: List[float], h: List[float]) -> List[Optional[float]]:
    out: List[Optional[float]] = [None]
    for (e0, h0), (e1, h1) in zip(zip(errors, h), zip(errors[1:], h[1:])):
        if e0 > 0 and e1 > 0:
            out.append(math.log(e0 / e1) / math.log(h0 / h1))
        else:
            out.append(None)
    return out


def check_consistency(errors: List[float], h: List[float], start: int = 0,
                      min_order: float = MIN_CONSISTENCY_ORDER, floor: float = EXACT_ERROR_FLOOR) -> bool:
    """True if relative errors fall at least at `min_order` between successive
    levels from index `start` on. Levels below `floor` count as exact.
    """
    errors, h = list(errors)[start:], list(h)[start:]
    for (e0, h0), (e1, h1) in zip(zip(errors, h), zip(errors[1:], h[1:])):
        if e1 <= floor:
            continue
        if e0 <= floor or math.log(e0 / e1) < min_order * math.log(h0 / h1):
            return False
    return True


def convergence_study(
    field: AnalyticField,
    c: Coefficients,
    grids: Iterable[Grid],
    ball: Optional[BallSpec] = None,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    restart: int = DEFAULT_RESTART,
    method: str = "gmres",
) -> pd.DataFrame:
    """Errors u_h - I_h u* in L2(w), H1(w) and sup on an interior half-ball,
    with observed orders against the x mesh width."""
    w = WeightSpec.from_coefficients(c)
    rows = []
    for grid in grids:
        system, exact, _ = manufactured_problem(c, grid, field)
        u = solve_system(system, tol=tol, max_iter=max_iter, restart=restart, method=method)
        err = u - exact
        X, Y = grid.mesh()
        half = ball_mask(ball or default_half_ball(grid), X, Y, closure=True)
        rows.append({
            "grid": grid.label(),
            "nx": grid.nx,
            "ny": grid.ny,
            "grading": grid.grading,
            "h": grid.hx,
            "l2": weighted_lp_norm(err, 2.0, w),
            "h1": sobolev_norm(err, NormRequest(tag=SpaceTag.H1, weight=w)),
            "sup": float(np.max(np.abs(err.values[half]))) if half.any() else float("nan"),
        })
        logger.info("manufactured solve on %s: L2 error %.3e", grid.label(), rows[-1]["l2"])
    table = pd.DataFrame(rows)
    for name in ERROR_COLUMNS:
        table[f"{name}_order"] = _orders(table[name].tolist(), table["h"].tolist())
    return table


def duality_check(
    c: Coefficients,
    grids: Iterable[Grid],
    field: AnalyticField,
    test: AnalyticField,
) -> pd.DataFrame:
    """a(I_h u, I_h v) against (I_h Au, I_h v)_w for a test v vanishing on the
    non-degenerate boundary; `richardson` is the ratio of successive differences."""
    rows = []
    for grid in grids:
        system, u, source = manufactured_problem(c, grid, field)
        v = interpolate(grid, test)
        form = discrete_bilinear_form(system, u, v)
        pairing = weighted_inner_product(system, source, v)
        rows.append({"grid": grid.label(), "h": grid.hx, "form": form, "pairing": pairing,
                     "difference": abs(form - pairing)})
    table = pd.DataFrame(rows)
    diff = table["difference"].to_numpy()
    table["richardson"] = [None] + [float(a / b) if b > 0 else None for a, b in zip(diff, diff[1:])]
    return table


def refinement_ladder(grid: Grid, levels: Iterable[int]) -> List[Grid]:
    """Copies of `grid` with nx = ny = n for each n."""
    return [grid.model_copy(update={"nx": n, "ny": n}) for n in levels]

