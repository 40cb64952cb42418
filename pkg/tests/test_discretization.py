import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.integrate import quad

from discretization.assembly import assemble_form, assemble_system, weighted_inner_product
from discretization.finite_difference import (
    derivative,
    discrete_derivatives,
    fd_integration_by_parts_check,
    fd_product_rule_residual,
    fd_quotient,
    stencil_width,
)
from discretization.models import Grid, GridFunction, boundary_partition, interpolate
from discretization.quadrature import cell_weight_moments, node_inner_product, node_weights
from discretization.solver import solve_system
from geometry.models import HalfPlaneDomain
from heston.coefficients import validate_coefficients
from heston.fields import BumpField, PolynomialField
from spaces.models import WeightSpec
from utils.errors import GridTooCoarse, HNotOnGrid, NonpositiveBeta, OrderTooHigh, SingularSystem, SupportTooClose

DOMAIN = HalfPlaneDomain(x_min=0.0, x_max=math.pi, y_max=1.0)
COEFFS = validate_coefficients({"sigma": 1.0, "rho": -0.5, "kappa": 1.0, "theta": 0.5, "c0": 1.0})


# quadrature

def test_cell_moments_of_a_bottom_cell():
    h = 0.125
    cell = ((0.0, h), (0.0, h))
    flat = cell_weight_moments(WeightSpec.power(1.0), cell, max_power=1)
    assert flat[0].sum() == pytest.approx(h * h, rel=1e-14)
    assert flat[1].sum() == pytest.approx(h ** 3 / 2, rel=1e-14)
    singular = cell_weight_moments(WeightSpec.power(0.5), cell, max_power=0)
    assert singular[0].sum() == pytest.approx(2 * h ** 1.5, rel=1e-13)


def test_cell_moments_reject_nonpositive_beta():
    with pytest.raises(NonpositiveBeta):
        cell_weight_moments(WeightSpec(beta=0.0), ((0.0, 1.0), (0.0, 1.0)), 0)


def test_node_weights_integrate_the_weight():
    grid = Grid(domain=DOMAIN, nx=16, ny=12, grading=2.0)
    assert node_weights(grid, WeightSpec.power(1.0)).sum() == pytest.approx(math.pi, rel=1e-13)
    # int_0^1 y dy = 1/2
    assert node_weights(grid, WeightSpec.power(2.0)).sum() == pytest.approx(math.pi / 2, rel=1e-12)
    assert node_weights(grid, WeightSpec.power(1.0), power=1).sum() == pytest.approx(math.pi / 2, rel=1e-12)


def test_node_inner_product_of_constants():
    grid = Grid(domain=DOMAIN, nx=8, ny=8)
    one = interpolate(grid, PolynomialField({(0, 0): 1.0}))
    w = WeightSpec(beta=1.5, mu=2.0)
    assert node_inner_product(one, one, w) == pytest.approx(node_weights(grid, w).sum())


# finite differences

def test_stencil_widths():
    assert [stencil_width(k) for k in (1, 2, 3, 4)] == [3, 5, 5, 7]


def test_derivatives_of_polynomials_on_a_graded_grid():
    grid = Grid(domain=DOMAIN, nx=16, ny=16, grading=2.0)
    u = interpolate(grid, PolynomialField({(2, 0): 1.0, (0, 3): 1.0}))
    assert np.allclose(derivative(u, 2, 0), 2.0, atol=1e-8)
    assert np.allclose(derivative(u, 0, 3), 6.0, atol=1e-6)
    d = discrete_derivatives(u, 2)
    assert set(d) == {(2, 0), (1, 1), (0, 2)}
    assert np.allclose(d[(1, 1)], 0.0, atol=1e-8)


def test_cached_derivatives_take_precedence():
    grid = Grid(domain=DOMAIN, nx=8, ny=8)
    u = GridFunction.from_field(grid, PolynomialField({(0, 5): 1.0}), order=5)
    assert np.allclose(derivative(u, 0, 5), 120.0)
    v = interpolate(grid, PolynomialField({(0, 5): 1.0}))
    with pytest.raises(OrderTooHigh):
        derivative(v, 3, 2)


def test_stencil_needs_enough_nodes():
    grid = Grid(domain=DOMAIN, nx=2, ny=8)
    u = interpolate(grid, PolynomialField({(2, 0): 1.0}))
    with pytest.raises(GridTooCoarse):
        derivative(u, 2, 0)


def test_fd_quotient_of_x():
    grid = Grid(domain=DOMAIN, nx=8, ny=4)
    u = interpolate(grid, PolynomialField({(1, 0): 1.0}))
    q = fd_quotient(u, 2 * grid.hx)
    assert q.mask[:, :-2].all() and not q.mask[:, -2:].any()
    assert np.allclose(q.values[q.mask], 1.0)
    with pytest.raises(HNotOnGrid):
        fd_quotient(u, 0.5 * grid.hx)


def test_fd_product_rule():
    grid = Grid(domain=DOMAIN, nx=32, ny=16)
    f = interpolate(grid, BumpField((math.pi / 2, 0.4), (0.6, 0.3)))
    w = WeightSpec(beta=1.7, mu=0.5, gamma=0.5)
    assert fd_product_rule_residual(f, grid.hx, w) <= 1e-12


def test_fd_integration_by_parts():
    grid = Grid(domain=DOMAIN, nx=64, ny=32)
    f = interpolate(grid, BumpField((math.pi / 2, 0.4), (0.6, 0.3)))
    v = interpolate(grid, BumpField((1.4, 0.5), (0.5, 0.3)))
    w = WeightSpec(beta=1.2, mu=1.0, gamma=0.3)
    residual, scale = fd_integration_by_parts_check(f, v, 2 * grid.hx, w)
    assert scale > 0
    assert residual <= 1e-12 * scale


def test_fd_integration_by_parts_needs_room():
    grid = Grid(domain=DOMAIN, nx=64, ny=32)
    f = interpolate(grid, BumpField((0.15, 0.4), (0.12, 0.3)))
    with pytest.raises(SupportTooClose):
        fd_integration_by_parts_check(f, f, grid.hx, WeightSpec.power(1.0))


# assembly and solve

def test_boundary_partition():
    parts = boundary_partition(Grid(domain=DOMAIN, nx=4, ny=3))
    assert len(parts["degenerate"]) == 3
    assert len(parts["dirichlet"]) == 11
    assert len(parts["interior"]) == 6
    assert parts["degenerate"].tolist() == [1, 2, 3]


def test_form_annihilates_constants_up_to_c0():
    grid = Grid(domain=DOMAIN, nx=12, ny=12)
    parts = assemble_form(COEFFS, grid)
    ones = np.ones(grid.n_nodes)
    assert np.allclose(parts["form"] @ ones, COEFFS.c0 * (parts["mass"] @ ones), atol=1e-13)


def test_form_is_positive_on_functions_vanishing_on_the_outer_boundary():
    grid = Grid(domain=DOMAIN, nx=12, ny=12)
    outer = grid.dirichlet_mask()
    rng = np.random.default_rng(5)
    other = validate_coefficients({"sigma": 0.5, "rho": 0.7, "kappa": 2.0, "theta": 0.3, "c0": 0.5, "q": 0.2})
    for c in (COEFFS, other):
        parts = assemble_form(c, grid)
        for _ in range(100):
            values = rng.normal(size=grid.shape)
            values[outer] = 0.0
            u = values.ravel()
            a = u @ (parts["form"] @ u)
            # the first-order block is antisymmetric on such u
            assert a > 0
            assert a >= c.c0 * (u @ (parts["mass"] @ u)) * (1 - 1e-8)


def test_flipped_diffusion_loses_positivity():
    grid = Grid(domain=DOMAIN, nx=12, ny=12)
    J, I = np.indices(grid.shape)
    values = np.where(grid.dirichlet_mask(), 0.0, (-1.0) ** (I + J))
    u = values.ravel()
    assert u @ (assemble_form(COEFFS, grid)["form"] @ u) > 0
    assert u @ (assemble_form(COEFFS, grid, diffusion_sign=-1.0)["form"] @ u) < 0


def test_assembly_does_not_depend_on_node_order():
    grid = Grid(domain=DOMAIN, nx=6, ny=5)
    rng = np.random.default_rng(1)
    form = assemble_form(COEFFS, grid)["form"]
    perm = rng.permutation(grid.n_nodes)
    back = np.argsort(perm)
    assert (form[perm][:, perm][back][:, back] != form).nnz == 0

    sys = assemble_system(COEFFS, grid, None, None)
    free = sys.free[rng.permutation(len(sys.free))]
    order = np.argsort(free)
    assert (form[free][:, free][order][:, order] != sys.matrix).nnz == 0


def test_diagonal_entry_against_fine_quadrature():
    # rho = 0 and gamma = 0: only the diffusion and c0 blocks reach the diagonal
    c = validate_coefficients({"sigma": 1.0, "rho": 0.0, "kappa": 1.0, "theta": 0.5, "c0": 1.0})
    grid = Grid(domain=DOMAIN, nx=8, ny=8)
    j, i = 3, 4
    node = j * (grid.nx + 1) + i
    entry = assemble_form(c, grid)["form"][node, node]

    y = grid.y
    hl, hr = y[j] - y[j - 1], y[j + 1] - y[j]
    w = lambda t: math.exp(-c.mu * t)
    hat = lambda t: (t - y[j - 1]) / hl if t <= y[j] else (y[j + 1] - t) / hr

    def integral(f):
        return sum(quad(f, a, b, epsabs=0.0, epsrel=1e-13)[0] for a, b in ((y[j - 1], y[j]), (y[j], y[j + 1])))

    y_mass = integral(lambda t: hat(t) ** 2 * w(t))
    y_first = integral(lambda t: t * hat(t) ** 2 * w(t))
    y_stiff = (quad(lambda t: t * w(t), y[j - 1], y[j], epsabs=0.0, epsrel=1e-13)[0] / hl ** 2
               + quad(lambda t: t * w(t), y[j], y[j + 1], epsabs=0.0, epsrel=1e-13)[0] / hr ** 2)
    x_mass, x_stiff = 2.0 * grid.hx / 3.0, 2.0 / grid.hx

    expected = 0.5 * (x_stiff * y_first + c.sigma ** 2 * x_mass * y_stiff) + c.c0 * x_mass * y_mass
    assert entry == pytest.approx(expected, rel=1e-10)


def test_mass_integrates_the_weight():
    grid = Grid(domain=DOMAIN, nx=12, ny=12)
    sys = assemble_system(COEFFS, grid, None, None)
    one = interpolate(grid, PolynomialField({(0, 0): 1.0}))
    w = WeightSpec.from_coefficients(COEFFS)
    assert weighted_inner_product(sys, one, one) == pytest.approx(node_weights(grid, w).sum(), rel=1e-12)


def test_zero_data_gives_zero():
    grid = Grid(domain=DOMAIN, nx=8, ny=8)
    u = solve_system(assemble_system(COEFFS, grid, None, None))
    assert np.all(u.values == 0.0)


def test_c0_zero_warns():
    c = COEFFS.model_copy(update={"c0": 0.0})
    sys = assemble_system(c, Grid(domain=DOMAIN, nx=8, ny=8), None, None)
    with pytest.warns(RuntimeWarning):
        solve_system(sys)


def test_zeroed_row_is_singular():
    grid = Grid(domain=DOMAIN, nx=8, ny=8)
    one = interpolate(grid, PolynomialField({(0, 0): 1.0}))
    sys = assemble_system(COEFFS, grid, None, one)
    # the unknown at node (0, 1) of the degenerate boundary
    row = int(np.searchsorted(sys.free, 1))
    matrix = sys.matrix.tolil()
    matrix[row, :] = 0.0
    broken = sys.model_copy(update={"matrix": sp.csr_matrix(matrix)})
    with pytest.raises(SingularSystem):
        solve_system(broken)


def test_assembly_needs_three_nodes_per_direction():
    with pytest.raises(GridTooCoarse):
        assemble_form(COEFFS, Grid(domain=DOMAIN, nx=1, ny=4))


@pytest.mark.parametrize("method", ["gmres", "direct"])
def test_constant_solution_is_reproduced(method):
    grid = Grid(domain=DOMAIN, nx=16, ny=16)
    one = interpolate(grid, PolynomialField({(0, 0): 1.0}))
    sys = assemble_system(COEFFS, grid, one, one * COEFFS.c0)
    u = solve_system(sys, tol=1e-12, method=method)
    assert np.allclose(u.values, 1.0, atol=1e-6)
