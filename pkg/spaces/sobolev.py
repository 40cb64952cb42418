# spaces/sobolev.py
"""Weighted Sobolev norms of grid functions.

Integrals are lumped: int q(y) F w_m ~ sum_n W_q[n] F_n with W_q[n] the
exact weight moment of the hat function at node n (see
`discretization.quadrature.node_weights`). Vector quantities such as
|D^j u| are Euclidean norms of (D_x^(j-m) D_y^m u : 0 <= m <= j).
"""
import logging
from typing import Dict, Optional, Sequence

import numpy as np

from discretization.finite_difference import derivative
from discretization.models import GridFunction
from discretization.quadrature import node_weights, polynomial_node_weights
from spaces.models import HeightInclusionReport, NormRequest, SpaceTag, WeightSpec
from utils.errors import EmptyMask, InvalidExponent, MissingDerivatives, OrderTooHigh, UnsupportedTag

logger = logging.getLogger(__name__)

# (1 + y) and (1 + y)^2 as coefficient lists in y
ONE_PLUS_Y = (1.0, 1.0)
ONE_PLUS_Y_SQ = (1.0, 2.0, 1.0)


def region(u: GridFunction, mask: Optional[np.ndarray]) -> np.ndarray:
    """Nodes where the norm is evaluated: the requested mask within u's domain."""
    sel = u.defined if mask is None else (np.asarray(mask, dtype=bool) & u.defined)
    if not sel.any():
        raise EmptyMask("the evaluation region contains no grid nodes")
    return sel


def grad_sq(u: GridFunction, order: int) -> np.ndarray:
    """|D^order u|^2 at every node."""
    try:
        comps = [derivative(u, order - m, m) for m in range(order + 1)]
    except OrderTooHigh as exc:
        raise MissingDerivatives(str(exc)) from exc
    return sum(c * c for c in comps)


def component_sq(u: GridFunction, i: int, j: int) -> np.ndarray:
    try:
        d = derivative(u, i, j)
    except OrderTooHigh as exc:
        raise MissingDerivatives(str(exc)) from exc
    return d * d


def _lumped(weights: np.ndarray, values: np.ndarray, sel: np.ndarray) -> float:
    return float(np.sum(weights[sel] * values[sel]))


def weighted_lp_norm(u: GridFunction, p: float, w: WeightSpec, mask: Optional[np.ndarray] = None) -> float:
    """(int |u|^p w_m)^(1/p) over the mask."""
    if not p >= 1:
        raise InvalidExponent(f"p must be at least 1, got {p}")
    sel = region(u, mask)
    return _lumped(node_weights(u.grid, w, 0), np.abs(u.values) ** p, sel) ** (1.0 / p)


def weighted_l2_moment_norm(u: GridFunction, w: WeightSpec, mask: Optional[np.ndarray],
                            y_poly: Sequence[float]) -> float:
    """(int q(y) u^2 w_m)^(1/2), q given by coefficients in powers of y."""
    sel = region(u, mask)
    return np.sqrt(_lumped(polynomial_node_weights(u.grid, w, y_poly), u.values ** 2, sel))


def gradient_l2_norm(u: GridFunction, w: WeightSpec, mask: Optional[np.ndarray] = None) -> float:
    """||Du||_{L2(w)}."""
    sel = region(u, mask)
    return np.sqrt(_lumped(node_weights(u.grid, w, 0), grad_sq(u, 1), sel))


def _h1_sq(u, w, sel):
    W = lambda p: node_weights(u.grid, w, p)
    return (_lumped(W(1), grad_sq(u, 1), sel)
            + _lumped(polynomial_node_weights(u.grid, w, ONE_PLUS_Y), u.values ** 2, sel))


def _hk_sq(u, w, k, sel):
    """int y^2 |D^(k+2) u|^2 + sum_{j=1}^{k+1} (1+y)^2 |D^j u|^2 + (1+y) u^2; k = 0 is H2."""
    grid = u.grid
    total = _lumped(node_weights(grid, w, 2), grad_sq(u, k + 2), sel)
    w_sq = polynomial_node_weights(grid, w, ONE_PLUS_Y_SQ)
    for j in range(1, k + 2):
        total += _lumped(w_sq, grad_sq(u, j), sel)
    total += _lumped(polynomial_node_weights(grid, w, ONE_PLUS_Y), u.values ** 2, sel)
    return total


def calhk_blocks(u: GridFunction, k: int, w: WeightSpec, mask: Optional[np.ndarray] = None) -> Dict[str, float]:
    """Squared contributions of each block of the calH^(k+2) norm.

    Mixed derivatives with m extra y-derivatives carry the weight w_m = y^m w.
    """
    sel = region(u, mask)
    grid = u.grid
    W = lambda p, m=0: node_weights(grid, w.shifted(m), p)
    sq1 = lambda m=0: polynomial_node_weights(grid, w.shifted(m), ONE_PLUS_Y_SQ)

    blocks = {
        "y2_top": _lumped(W(2), component_sq(u, k + 2, 0) + component_sq(u, k + 1, 1) + component_sq(u, k, 2), sel),
    }
    for m in range(1, k + 1):
        blocks[f"y2_dy{m + 2}_w{m}"] = _lumped(W(2, m), component_sq(u, k - m, m + 2), sel)
    for j in range(k + 1):
        blocks[f"first_{j}"] = _lumped(sq1(), component_sq(u, j + 1, 0) + component_sq(u, j, 1), sel)
    for j in range(1, k + 1):
        for m in range(1, j + 1):
            blocks[f"mixed_{j}_{m}"] = _lumped(sq1(m), component_sq(u, j - m, m + 1), sel)
    blocks["zeroth"] = _lumped(polynomial_node_weights(grid, w, ONE_PLUS_Y), u.values ** 2, sel)
    return blocks


def _wkp(u, w, k, p, sel):
    weights = node_weights(u.grid, w, 0)
    total = 0.0
    for j in range(k + 1):
        mag = np.abs(u.values) if j == 0 else np.sqrt(grad_sq(u, j))
        total += _lumped(weights, mag ** p, sel)
    return total ** (1.0 / p)


def c11s_norm(u: GridFunction, mask: Optional[np.ndarray] = None) -> float:
    """sup y |D^2 u| + sup |Du| + sup |u|."""
    sel = region(u, mask)
    Y = u.grid.mesh()[1]
    return float(np.max((Y * np.sqrt(grad_sq(u, 2)))[sel])
                 + np.max(np.sqrt(grad_sq(u, 1))[sel])
                 + np.max(np.abs(u.values)[sel]))


def sobolev_norm(u: GridFunction, req: NormRequest) -> float:
    tag, w = req.tag, req.weight
    if tag == SpaceTag.LP:
        return weighted_lp_norm(u, req.p, w, req.mask)
    if tag == SpaceTag.C11S:
        return c11s_norm(u, req.mask)
    sel = region(u, req.mask)
    if tag == SpaceTag.H1:
        return float(np.sqrt(_h1_sq(u, w, sel)))
    if tag == SpaceTag.H2:
        return float(np.sqrt(_hk_sq(u, w, 0, sel)))
    if tag == SpaceTag.HK:
        return float(np.sqrt(_hk_sq(u, w, req.k, sel)))
    if tag == SpaceTag.CALHK:
        if req.k == 0:
            return float(np.sqrt(_hk_sq(u, w, 0, sel)))
        return float(np.sqrt(sum(calhk_blocks(u, req.k, w, req.mask).values())))
    if tag == SpaceTag.WKP:
        if not req.p >= 1:
            raise InvalidExponent(f"p must be at least 1, got {req.p}")
        return float(_wkp(u, w, req.k, req.p, sel))
    raise UnsupportedTag(f"{tag.value} is not a Sobolev-type norm")


def finite_height_inclusion_check(u: GridFunction, w: WeightSpec, k: int = 1, ms: Sequence[int] = (1, 2, 3),
                                  mask: Optional[np.ndarray] = None) -> HeightInclusionReport:
    """Evaluate the calH^(k+2) / H^(k+2) and L2(w_m) / L2(w) inclusions of the
    domain's height on u."""
    report = HeightInclusionReport(
        height=u.grid.domain.y_max,
        k=k,
        calhk=sobolev_norm(u, NormRequest(tag=SpaceTag.CALHK, weight=w, k=k, mask=mask)),
        hk=sobolev_norm(u, NormRequest(tag=SpaceTag.HK, weight=w, k=k, mask=mask)),
        l2=weighted_lp_norm(u, 2.0, w, mask),
        shifted_l2={m: weighted_lp_norm(u, 2.0, w.shifted(m), mask) for m in ms},
    )
    if not report.passed:
        logger.warning("finite-height inclusion fails on %s: %s", u.grid.label(), report)
    return report
