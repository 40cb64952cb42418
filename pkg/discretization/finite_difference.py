# discretization/finite_difference.py
import logging
from functools import lru_cache
from math import factorial
from typing import Dict, Literal, NamedTuple, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from discretization.models import Grid, GridFunction
from spaces.models import WeightSpec
from spaces.weights import weight_array
from utils.errors import EmptyResult, GridTooCoarse, HNotOnGrid, OrderTooHigh, SupportTooClose

logger = logging.getLogger(__name__)

MAX_ORDER = 4


def stencil_width(order: int) -> int:
    """Odd width giving at least second order on non-uniform nodes."""
    return order + 2 if order % 2 else order + 3


def fd_weights(nodes: np.ndarray, x0: float, order: int) -> np.ndarray:
    """Weights w with sum w_i f(nodes_i) ~ f^(order)(x0), exact on polynomials
    of degree < len(nodes)."""
    offsets = np.asarray(nodes, dtype=float) - x0
    scale = np.max(np.abs(offsets))
    n = len(offsets)
    powers = np.arange(n)
    A = (offsets[None, :] / scale) ** powers[:, None]
    rhs = np.zeros(n)
    rhs[order] = factorial(order)
    return scipy.linalg.solve(A, rhs) / scale ** order


@lru_cache(maxsize=128)
def _derivative_matrix(coords: Tuple[float, ...], order: int) -> sp.csr_matrix:
    x = np.asarray(coords)
    n = len(x)
    width = stencil_width(order)
    if n < width:
        raise GridTooCoarse(f"order {order} stencil needs {width} nodes per direction, grid has {n}")
    rows, cols, vals = [], [], []
    half = width // 2
    for i in range(n):
        start = min(max(i - half, 0), n - width)
        idx = np.arange(start, start + width)
        rows.extend([i] * width)
        cols.extend(idx)
        vals.extend(fd_weights(x[idx], x[i], order))
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def derivative_matrix(grid: Grid, axis: Literal["x", "y"], order: int) -> sp.csr_matrix:
    coords = grid.x if axis == "x" else grid.y
    return _derivative_matrix(tuple(coords.tolist()), order)


def derivative(u: GridFunction, i: int, j: int) -> np.ndarray:
    """D_x^i D_y^j u at every node; exact cached values take precedence."""
    cached = u.cached((i, j))
    if cached is not None:
        return cached
    if i + j > MAX_ORDER:
        raise OrderTooHigh(f"discrete derivatives are limited to order {MAX_ORDER}, requested {i + j}")
    values = u.values
    if i:
        values = (derivative_matrix(u.grid, "x", i) @ values.T).T
    if j:
        values = derivative_matrix(u.grid, "y", j) @ values
    u.cache_derivative((i, j), values)
    return u.cached((i, j))


def discrete_derivatives(u: GridFunction, order: int) -> Dict[Tuple[int, int], np.ndarray]:
    """The vector D^order u = (D_x^(order-m) D_y^m u : 0 <= m <= order), cached on u."""
    if order > MAX_ORDER and any(u.cached((order - m, m)) is None for m in range(order + 1)):
        raise OrderTooHigh(f"discrete derivatives are limited to order {MAX_ORDER}, requested {order}")
    return {(order - m, m): derivative(u, order - m, m) for m in range(order + 1)}


def _shift_steps(grid: Grid, h: float) -> int:
    s = h / grid.hx
    steps = int(round(s))
    if steps == 0 or abs(s - steps) > 1e-9 * max(1.0, abs(s)):
        raise HNotOnGrid(f"h={h} is not a nonzero multiple of the x spacing {grid.hx}")
    return steps


def _shift(values: np.ndarray, steps: int) -> np.ndarray:
    """values(x + steps*hx), zero beyond the grid."""
    out = np.zeros_like(values)
    if steps > 0:
        out[:, :-steps] = values[:, steps:]
    else:
        out[:, -steps:] = values[:, :steps]
    return out


def fd_quotient(u: GridFunction, h: float, direction: Literal["x"] = "x") -> GridFunction:
    """(u(x + h, y) - u(x, y)) / h on nodes where both points are defined."""
    if direction != "x":
        raise HNotOnGrid("finite-difference quotients are taken in x only")
    steps = _shift_steps(u.grid, h)
    defined = u.defined
    valid = _shift(defined.astype(float), steps).astype(bool) & defined
    if not valid.any():
        raise EmptyResult(f"no node admits a shift by h={h}")
    values = np.where(valid, (_shift(u.values, steps) - u.values) / h, 0.0)
    return GridFunction(grid=u.grid, values=values, mask=valid)


class IbpResidual(NamedTuple):
    residual: float
    scale: float


def _support_columns(*arrays: np.ndarray) -> np.ndarray:
    cols = np.zeros(arrays[0].shape[1], dtype=bool)
    for a in arrays:
        cols |= np.any(a != 0, axis=0)
    return np.flatnonzero(cols)


def fd_integration_by_parts_check(f: GridFunction, v: GridFunction, h: float, w: WeightSpec) -> IbpResidual:
    """| -(f, d^{-h} v) - ((w^h/w) d^h f, v) - ((d^h w/w) f, v) | with the node-sum
    inner product (a, b) = sum w a b over rows y > 0."""
    grid = f.grid
    steps = _shift_steps(grid, h)
    margin = 2 * abs(steps)
    fv, vv = f.values[1:], v.values[1:]
    cols = _support_columns(fv, vv)
    if cols.size:
        if cols.min() <= margin or cols.max() >= grid.nx - margin:
            raise SupportTooClose(f"supports must stay more than 2|h| from the side boundary (h={h})")
        if np.any(fv[-1] != 0) or np.any(vv[-1] != 0):
            raise SupportTooClose("supports must stay off the top boundary")

    X, Y = grid.mesh()
    X, Y = X[1:], Y[1:]
    wt = weight_array(w, X, Y)
    wt_h = weight_array(w, X + h, Y)

    dv_minus = (_shift(vv, -steps) - vv) / -h
    df = (_shift(fv, steps) - fv) / h
    dw = (wt_h - wt) / h

    t0 = -wt * fv * dv_minus
    t1 = wt_h * df * vv
    t2 = dw * fv * vv
    residual = abs(t0.sum() - t1.sum() - t2.sum())
    scale = float(np.abs(t0).sum() + np.abs(t1).sum() + np.abs(t2).sum())
    return IbpResidual(float(residual), scale)


def fd_product_rule_residual(f: GridFunction, h: float, w: WeightSpec) -> float:
    """max | d^h(w f) - w^h d^h f - f d^h w | over rows y > 0 and valid columns."""
    steps = _shift_steps(f.grid, h)
    X, Y = f.grid.mesh()
    X, Y, fv = X[1:], Y[1:], f.values[1:]
    wt, wt_h = weight_array(w, X, Y), weight_array(w, X + h, Y)
    valid = _shift(np.ones_like(fv), steps).astype(bool)
    lhs = (wt_h * _shift(fv, steps) - wt * fv) / h
    rhs = wt_h * (_shift(fv, steps) - fv) / h + fv * (wt_h - wt) / h
    return float(np.max(np.abs(lhs - rhs)[valid]))
