# harness/estimates.py
"""Left and right sides of the local a priori estimates, measured on grids.

Half-ball kinds compare B_R^+(z0) with B_R0^+(z0); rectangle kinds compare a
subdomain O' with an intermediate O'' (often O'' = the solve domain and
O' = O''.shrink(d1)). The implied constant is left / right.
"""
import logging
import time
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from discretization.models import Grid, GridFunction
from geometry.distance import ball_mask
from geometry.models import BallKind, BallSpec, HalfPlaneDomain
from harness.config import ALPHA_SWEEP, DEFAULT_ALPHA, MONOTONICITY_BAND, STABILIZATION_BAND
from harness.models import HALF_BALL_KINDS, EstimateKind, EstimateRegion, EstimateReport
from heston.models import Coefficients
from spaces.holder import empirical_holder_exponent, holder_norm
from spaces.models import NormRequest, SpaceTag, WeightSpec
from spaces.sobolev import (
    ONE_PLUS_Y, ONE_PLUS_Y_SQ, gradient_l2_norm, region, sobolev_norm, weighted_l2_moment_norm, weighted_lp_norm,
)
from utils.errors import OrderTooHigh, RegionOutsideDomain, ZeroData

logger = logging.getLogger(__name__)

# relative tolerance for node membership in closed rectangles
_EDGE = 1e-12


def default_exponent(beta: float) -> float:
    """Integrability exponent strictly above max(4, 2 + beta)."""
    return max(4.0, 2.0 + beta) + 1.0


def rectangle_mask(grid: Grid, rect: HalfPlaneDomain) -> np.ndarray:
    """Nodes of the closed rectangle [x_min, x_max] x [0, y_max]."""
    X, Y = grid.mesh()
    tol = _EDGE * max(grid.domain.width, grid.domain.height)
    return (X >= rect.x_min - tol) & (X <= rect.x_max + tol) & (Y <= rect.y_max + tol)


def half_ball(z0: Tuple[float, float], radius: float) -> BallSpec:
    return BallSpec(center=z0, radius=radius, kind=BallKind.EUCLIDEAN_HALF)


def check_region(kind: EstimateKind, region_spec: EstimateRegion, domain: HalfPlaneDomain) -> None:
    if kind in HALF_BALL_KINDS:
        if region_spec.z0 is None or region_spec.R is None or region_spec.R0 is None:
            raise RegionOutsideDomain(f"{kind.value} needs z0, R and R0")
        if not region_spec.R < region_spec.R0:
            raise RegionOutsideDomain(f"inner radius R={region_spec.R} must be below R0={region_spec.R0}")
        if region_spec.z0[1] < 0:
            raise RegionOutsideDomain(f"z0 must lie in the closed half-plane, got y0={region_spec.z0[1]}")
        if not domain.contains_ball(half_ball(region_spec.z0, region_spec.R0)):
            raise RegionOutsideDomain(
                f"B_{region_spec.R0}^+({region_spec.z0}) leaves the domain "
                f"({domain.x_min}, {domain.x_max}) x (0, {domain.y_max})"
            )
        return
    if region_spec.inner is None or region_spec.outer is None:
        raise RegionOutsideDomain(f"{kind.value} needs an inner and an outer rectangle")
    if not domain.contains_domain(region_spec.outer):
        raise RegionOutsideDomain("outer rectangle leaves the solve domain")
    if not region_spec.outer.contains_domain(region_spec.inner):
        raise RegionOutsideDomain("inner rectangle is not contained in the outer one")


def region_masks(kind: EstimateKind, region_spec: EstimateRegion, grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    """(inner, outer) node masks, both including nodes on y = 0."""
    check_region(kind, region_spec, grid.domain)
    if kind in HALF_BALL_KINDS:
        X, Y = grid.mesh()
        inner = ball_mask(half_ball(region_spec.z0, region_spec.R), X, Y, closure=True)
        outer = ball_mask(half_ball(region_spec.z0, region_spec.R0), X, Y, closure=True)
    else:
        inner = rectangle_mask(grid, region_spec.inner)
        outer = rectangle_mask(grid, region_spec.outer)
    return inner, outer


def _sup(u: GridFunction, mask: np.ndarray) -> float:
    return float(np.max(np.abs(u.values[region(u, mask)])))


def estimate_sides(
    kind: EstimateKind,
    u: GridFunction,
    f: GridFunction,
    c: Coefficients,
    inner: np.ndarray,
    outer: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
    p: Optional[float] = None,
    k: int = 0,
    seed: int = 0,
) -> Tuple[float, float]:
    """(left, right) of the inequality named by `kind`."""
    w = WeightSpec.from_coefficients(c)
    data = WeightSpec.power(c.beta)
    p = default_exponent(c.beta) if p is None else p

    if kind == EstimateKind.SUPREMUM:
        left = _sup(u, inner)
        right = weighted_lp_norm(f, p, data, outer) + weighted_lp_norm(u, 2.0, data, outer)
    elif kind == EstimateKind.HOLDER:
        left = holder_norm(u, NormRequest(tag=SpaceTag.CALPHAS, weight=data, alpha=alpha, mask=inner, seed=seed))
        right = weighted_lp_norm(f, p, data, outer) + weighted_lp_norm(u, 2.0, data, outer)
    elif kind == EstimateKind.H2_INTERIOR:
        left = sobolev_norm(u, NormRequest(tag=SpaceTag.H2, weight=w, mask=inner))
        right = weighted_lp_norm(f, 2.0, w, outer) + weighted_lp_norm(u, 2.0, w, outer)
    elif kind == EstimateKind.HK2_INTERIOR:
        left = sobolev_norm(u, NormRequest(tag=SpaceTag.CALHK, weight=w, k=k, mask=inner))
        right = (sobolev_norm(f, NormRequest(tag=SpaceTag.WKP, weight=w, k=k, p=2.0, mask=outer))
                 + weighted_lp_norm(u, 2.0, w, outer))
    elif kind == EstimateKind.KOCH_GRADIENT:
        left = gradient_l2_norm(u, w, inner)
        right = (weighted_l2_moment_norm(f, w, outer, ONE_PLUS_Y)
                 + weighted_l2_moment_norm(u, w, outer, ONE_PLUS_Y_SQ))
    elif kind == EstimateKind.CKALPHAS_DOMAIN:
        left = holder_norm(u, NormRequest(tag=SpaceTag.CKALPHAS, weight=data, k=k, alpha=alpha, mask=inner,
                                          seed=seed))
        right = (sobolev_norm(f, NormRequest(tag=SpaceTag.WKP, weight=data, k=2 * k + 2, p=p, mask=outer))
                 + weighted_lp_norm(u, 2.0, data, outer))
    elif kind == EstimateKind.SCHAUDER:
        if k != 0:
            raise OrderTooHigh(f"the Schauder comparison is only evaluated for k = 0, got k={k}")
        left = holder_norm(u, NormRequest(tag=SpaceTag.CK2ALPHAS, weight=data, k=0, alpha=alpha, mask=inner,
                                          seed=seed))
        right = (holder_norm(f, NormRequest(tag=SpaceTag.CKALPHAS, weight=data, k=6, alpha=alpha, mask=outer,
                                            seed=seed))
                 + _sup(u, outer))
    else:
        raise ValueError(f"unknown estimate kind {kind}")
    return float(left), float(right)


def estimate_ratio(
    kind: EstimateKind,
    u: GridFunction,
    f: GridFunction,
    c: Coefficients,
    region_spec: EstimateRegion,
    alpha: float = DEFAULT_ALPHA,
    p: Optional[float] = None,
    k: int = 0,
    seed: int = 0,
) -> EstimateReport:
    """Measure both sides of one a priori estimate for a solved u with source f."""
    kind = EstimateKind(kind)
    start = time.perf_counter()
    inner, outer = region_masks(kind, region_spec, u.grid)
    if p is None and kind in (EstimateKind.SUPREMUM, EstimateKind.HOLDER, EstimateKind.CKALPHAS_DOMAIN):
        p = default_exponent(c.beta)
    left, right = estimate_sides(kind, u, f, c, inner, outer, alpha, p, k, seed)

    trivial = False
    if right == 0.0:
        if left != 0.0:
            raise ZeroData(f"{kind.value}: right side vanishes while the left side is {left:.3e}")
        trivial = True
        ratio = 0.0
    else:
        ratio = left / right
    uses_alpha = kind in (EstimateKind.HOLDER, EstimateKind.CKALPHAS_DOMAIN, EstimateKind.SCHAUDER)
    report = EstimateReport(
        kind=kind,
        region=region_spec,
        grid_nx=u.grid.nx,
        grid_ny=u.grid.ny,
        left=left,
        right=right,
        ratio=ratio,
        alpha=alpha if uses_alpha else None,
        p=p,
        k=k,
        trivial=trivial,
        runtime_ms=1000.0 * (time.perf_counter() - start),
    )
    logger.debug("%s on %s: left=%.6g right=%.6g ratio=%.6g", kind.value, u.grid.label(), left, right, ratio)
    return report


def holder_exponent_sweep(
    solutions: Sequence[Tuple[GridFunction, GridFunction]],
    c: Coefficients,
    region_spec: EstimateRegion,
    alphas: Iterable[float] = ALPHA_SWEEP,
    p: Optional[float] = None,
    seed: int = 0,
) -> Tuple[pd.DataFrame, Optional[float]]:
    """Holder-kind reports for each alpha on each ladder level, plus the
    largest alpha whose left side stays bounded under refinement."""
    rows: List[Dict[str, object]] = []
    for level, (u, f) in enumerate(solutions):
        for alpha in alphas:
            report = estimate_ratio(EstimateKind.HOLDER, u, f, c, region_spec, alpha=alpha, p=p, seed=seed)
            rows.append({"alpha": alpha, "level": level, "grid": u.grid.label(),
                         "value": report.left, "ratio": report.ratio})
    table = pd.DataFrame(rows)
    return table, empirical_holder_exponent(table)


def first_checked_level(n_levels: int) -> int:
    """Ladders of three or more levels skip the coarsest, pre-asymptotic one."""
    return 1 if n_levels >= 3 else 0


def check_stabilization(ratios: Sequence[float], band: float = MONOTONICITY_BAND, start: int = 0) -> bool:
    """True if the ratios never grow by more than `band` from index `start` on."""
    values = list(ratios)[start:]
    return all(b <= a * (1.0 + band) for a, b in zip(values, values[1:]))


def check_probe_band(values: Sequence[float], band: Tuple[float, float] = STABILIZATION_BAND,
                     floor: float = 0.0, start: int = 0) -> bool:
    """True if each successive ratio of ladder values from index `start` on lies in the band.

    Values at or below `floor` count as zero; two zeros in a row pass.
    """
    lo, hi = band
    values = [abs(v) if abs(v) > floor else 0.0 for v in list(values)[start:]]
    for a, b in zip(values, values[1:]):
        if a == 0.0 and b == 0.0:
            continue
        if a == 0.0 or not lo <= b / a <= hi:
            return False
    return True
