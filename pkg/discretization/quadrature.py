# discretization/quadrature.py
"""Moments of the weight y^(beta+m-1+p) e^(-mu y) e^(-gamma sqrt(1+x^2)) against
bilinear hat functions.

Cells touching y = 0 use the closed form
    int_0^h t^n y^a e^(-mu y) dy = h^(a+1) Gamma(b) P(b, mu h) / (mu h)^b,  b = n + a + 1,
so the singular factor y^(beta-1) is integrated exactly for every beta > 0.
All other cells use Gauss-Legendre rules.
"""
import logging
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import special

from discretization.models import Grid
from spaces.models import WeightSpec
from utils.errors import NonpositiveBeta

logger = logging.getLogger(__name__)

GAUSS_POINTS = 12
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_POINTS)
# rule on [0, 1]
T_NODES = 0.5 * (_NODES + 1.0)
T_WEIGHTS = 0.5 * _WEIGHTS

Cell = Tuple[Tuple[float, float], Tuple[float, float]]


def _check_beta(w: WeightSpec) -> None:
    if not w.beta > 0:
        raise NonpositiveBeta(f"weight exponent beta must be positive, got {w.beta}")


def y_moments(y0: float, y1: float, a: float, mu: float, nmax: int = 2) -> np.ndarray:
    """[int_{y0}^{y1} t^n y^a e^(-mu y) dy for n = 0..nmax], t = (y - y0)/(y1 - y0)."""
    h = y1 - y0
    n = np.arange(nmax + 1)
    if y0 == 0.0:
        b = n + a + 1.0
        if mu == 0.0:
            core = 1.0 / b
        else:
            c = mu * h
            core = special.gamma(b) * special.gammainc(b, c) / c ** b
        return h ** (a + 1.0) * core
    y = y0 + h * T_NODES
    g = y ** a * np.exp(-mu * y)
    return h * (T_NODES[None, :] ** n[:, None] * (T_WEIGHTS * g)[None, :]).sum(axis=1)


def x_weight(gamma: float, x, drift: bool = False):
    x = np.asarray(x, dtype=float)
    root = np.sqrt(1.0 + x * x)
    out = np.exp(-gamma * root)
    return out * (x / root) if drift else out


def x_moments(x0: float, x1: float, gamma: float, nmax: int = 2, drift: bool = False) -> np.ndarray:
    """[int_{x0}^{x1} t^n X(x) dx], X = e^(-gamma sqrt(1+x^2)), times x/sqrt(1+x^2) if drift."""
    h = x1 - x0
    n = np.arange(nmax + 1)
    if gamma == 0.0 and not drift:
        return h / (n + 1.0)
    x = x0 + h * T_NODES
    g = x_weight(gamma, x, drift)
    return h * (T_NODES[None, :] ** n[:, None] * (T_WEIGHTS * g)[None, :]).sum(axis=1)


def _hat_moments(moments: np.ndarray) -> np.ndarray:
    """Moments of (1 - t, t) from t-moments."""
    return np.array([moments[0] - moments[1], moments[1]])


def cell_weight_moments(w: WeightSpec, cell: Cell, max_power: int) -> np.ndarray:
    """Table [p, corner] = int_cell phi_corner y^p w_m dx dy.

    Corners are ordered (x0 y0, x1 y0, x0 y1, x1 y1); summing a row gives
    the moment against phi = 1.
    """
    _check_beta(w)
    (x0, x1), (y0, y1) = cell
    if y0 < 0:
        raise NonpositiveBeta("cells must lie in the closed upper half-plane")
    xm = _hat_moments(x_moments(x0, x1, w.gamma, 1))
    table = np.empty((max_power + 1, 4))
    for p in range(max_power + 1):
        ym = _hat_moments(y_moments(y0, y1, w.beta + w.m - 1.0 + p, w.mu, 1))
        table[p] = [xm[0] * ym[0], xm[1] * ym[0], xm[0] * ym[1], xm[1] * ym[1]]
    return table


def y_element_tables(grid: Grid, w: WeightSpec, power: int) -> np.ndarray:
    """Per y-element t-moments (ny, 3) for exponent beta + m - 1 + power."""
    _check_beta(w)
    y = grid.y
    a = w.beta + w.m - 1.0 + power
    return np.array([y_moments(y[j], y[j + 1], a, w.mu, 2) for j in range(grid.ny)])


def x_element_tables(grid: Grid, gamma: float, drift: bool = False) -> np.ndarray:
    x = grid.x
    return np.array([x_moments(x[i], x[i + 1], gamma, 2, drift) for i in range(grid.nx)])


def _lumped(tables: np.ndarray) -> np.ndarray:
    """Hat-function integrals of the weight from element t-moments."""
    n = tables.shape[0]
    out = np.zeros(n + 1)
    out[:-1] += tables[:, 0] - tables[:, 1]
    out[1:] += tables[:, 1]
    return out


@lru_cache(maxsize=256)
def node_weights(grid: Grid, w: WeightSpec, power: int = 0) -> np.ndarray:
    """W[j, i] = int phi_(j,i) y^power w_m dx dy, shape (ny + 1, nx + 1)."""
    wy = _lumped(y_element_tables(grid, w, power))
    wx = _lumped(x_element_tables(grid, w.gamma))
    out = np.outer(wy, wx)
    out.flags.writeable = False
    return out


def polynomial_node_weights(grid: Grid, w: WeightSpec, y_poly) -> np.ndarray:
    """Node weights of q(y) w_m for q = sum_p y_poly[p] y^p."""
    out = np.zeros(grid.shape)
    for p, coef in enumerate(y_poly):
        if coef:
            out = out + coef * node_weights(grid, w, p)
    return out


def node_inner_product(u, v, w: WeightSpec) -> float:
    """Lumped (u, v)_{L2(w_m)} = sum_n W[n] u_n v_n for grid functions on one grid."""
    return float(np.sum(node_weights(u.grid, w, 0) * u.values * v.values))
