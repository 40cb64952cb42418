# discretization/assembly.py
"""Bilinear Galerkin assembly of

    a(u, v) = 1/2 int (u_x v_x + rs u_y v_x + rs u_x v_y + s^2 u_y v_y) y w
            - gamma/2 int (u_x + rs u_y) v x/sqrt(1+x^2) y w
            - int (a1 y + b1) u_x v w
            + c0 int u v w,          rs = rho sigma, s = sigma,

with the weight separated as Y(y) X(x). Every global matrix is a sum of
kron(Y_1d, X_1d) with one-dimensional matrices indexed [test, trial].
"""
import logging
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sp

from discretization.models import Grid, GridFunction, LinearSystem
from discretization.quadrature import x_element_tables, y_element_tables
from heston.coefficients import check_coefficients, derived_constants
from heston.models import Coefficients
from spaces.models import WeightSpec
from utils.errors import GridTooCoarse

logger = logging.getLogger(__name__)


def _element_matrices(tables: np.ndarray, coords: np.ndarray) -> Dict[str, sp.csr_matrix]:
    """1D mass, stiffness and first-derivative matrices from element t-moments.

    Hats on an element are (1 - t, t); entries are [test, trial].
    """
    n = len(coords)
    h = np.diff(coords)
    m0, m1, m2 = tables[:, 0], tables[:, 1], tables[:, 2]
    hat = np.stack([m0 - m1, m1])  # int phi_a w
    mass = np.array([[m0 - 2 * m1 + m2, m1 - m2], [m1 - m2, m2]])
    sign = np.array([-1.0, 1.0])

    out = {}
    left = np.arange(n - 1)
    blocks = {
        "mass": lambda a, b: mass[a, b],
        "stiff": lambda a, b: sign[a] * sign[b] * m0 / h ** 2,
        "trial_der": lambda a, b: sign[b] / h * hat[a],
        "test_der": lambda a, b: sign[a] / h * hat[b],
    }
    for name, entry in blocks.items():
        rows, cols, vals = [], [], []
        for a in (0, 1):
            for b in (0, 1):
                rows.append(left + a)
                cols.append(left + b)
                vals.append(entry(a, b))
        out[name] = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        ).tocsr()
    return out


def assemble_form(c: Coefficients, grid: Grid, diffusion_sign: float = 1.0) -> Dict[str, sp.csr_matrix]:
    """Full (unreduced) form matrix K[test, trial] = a(phi_trial, phi_test) and the
    weighted mass matrix M[test, trial] = (phi_trial, phi_test)_w."""
    if grid.nx < 2 or grid.ny < 2:
        raise GridTooCoarse(f"assembly needs at least 3 nodes per direction, got {grid.nx + 1}x{grid.ny + 1}")
    w = WeightSpec.from_coefficients(c)
    consts = derived_constants(c)
    rs, s2 = c.rho * c.sigma, c.sigma ** 2

    Y0 = _element_matrices(y_element_tables(grid, w, 0), grid.y)
    Y1 = _element_matrices(y_element_tables(grid, w, 1), grid.y)
    X = _element_matrices(x_element_tables(grid, c.gamma), grid.x)
    Xg = _element_matrices(x_element_tables(grid, c.gamma, drift=True), grid.x)

    kron = sp.kron
    diffusion = 0.5 * (
        kron(Y1["mass"], X["stiff"])
        + rs * kron(Y1["trial_der"], X["test_der"])
        + rs * kron(Y1["test_der"], X["trial_der"])
        + s2 * kron(Y1["stiff"], X["mass"])
    )
    form = diffusion_sign * diffusion
    if c.gamma:
        form = form - 0.5 * c.gamma * (kron(Y1["mass"], Xg["trial_der"]) + rs * kron(Y1["trial_der"], Xg["mass"]))
    form = form - consts.a1 * kron(Y1["mass"], X["trial_der"]) - consts.b1 * kron(Y0["mass"], X["trial_der"])
    mass = kron(Y0["mass"], X["mass"]).tocsr()
    if c.c0:
        form = form + c.c0 * mass
    form = sp.csr_matrix(form)
    form.sum_duplicates()
    return {"form": form, "mass": mass}


def assemble_system(
    c: Coefficients,
    grid: Grid,
    dirichlet: Optional[GridFunction],
    f: Optional[GridFunction],
    diffusion_sign: float = 1.0,
) -> LinearSystem:
    """Reduced system over interior and degenerate-boundary nodes.

    Non-degenerate boundary values come from `dirichlet` (zero if None);
    the right side is the weighted L2 product of the nodal interpolant of f
    with each test hat.
    """
    check_coefficients(c)
    parts = assemble_form(c, grid, diffusion_sign)
    form, mass = parts["form"], parts["mass"]

    on_boundary = grid.dirichlet_mask().ravel()
    free = np.flatnonzero(~on_boundary)
    fixed = np.flatnonzero(on_boundary)

    g = np.zeros(grid.n_nodes)
    if dirichlet is not None:
        g[fixed] = dirichlet.values.ravel()[fixed]
    source = np.zeros(grid.n_nodes) if f is None else mass @ f.values.ravel()

    matrix = form[free][:, free].tocsr()
    matrix.eliminate_zeros()
    rhs = source[free] - form[free][:, fixed] @ g[fixed]
    logger.debug("assembled %s grid: %d unknowns, %d nonzeros", grid.label(), matrix.shape[0], matrix.nnz)
    return LinearSystem(
        grid=grid, coefficients=c, matrix=matrix, rhs=rhs, free=free,
        dirichlet_values=g, form=form, mass=mass,
    )


def discrete_bilinear_form(sys: LinearSystem, u: GridFunction, v: GridFunction) -> float:
    """a(I_h u, I_h v) from the full form matrix."""
    return float(v.values.ravel() @ (sys.form @ u.values.ravel()))


def weighted_inner_product(sys: LinearSystem, u: GridFunction, v: GridFunction) -> float:
    """(I_h u, I_h v)_{L2(w)} from the consistent mass matrix."""
    return float(v.values.ravel() @ (sys.mass @ u.values.ravel()))
