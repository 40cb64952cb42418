import numpy as np
import pytest

from heston.checks import COMMUTATOR_TOL, commutator_battery
from heston.coefficients import random_coefficients, shift_coefficients, validate_coefficients
from heston.fields import (
    BumpField,
    PolynomialField,
    ProductField,
    SeparableField,
    constant,
    exponential,
    manufactured_field,
    polynomial,
    sine,
)
from heston.models import JetPoint
from heston.operator import (
    OperatorImage,
    apply_B,
    apply_operator,
    apply_operator_derivative,
    commutator_residual,
    commutator_terms,
    cutoff_commutator,
    dx_commutator_residual,
    dy_commutator_residual,
)
from utils.errors import InsufficientJetOrder, InvalidCoefficients, MissingDerivative, NonpositiveY

REFERENCE = {"sigma": 1.0, "rho": 0.0, "kappa": 1.0, "theta": 0.5, "c0": 0.0, "q": 0.0}


@pytest.fixture
def reference():
    return validate_coefficients(REFERENCE)


@pytest.fixture
def generic():
    return validate_coefficients({"sigma": 0.7, "rho": -0.4, "kappa": 1.3, "theta": 0.2, "c0": 0.6, "q": 0.1,
                                  "gamma": 0.3})


def jet(field, x, y, order=2):
    return JetPoint.from_field(field, x, y, order)


def test_jet_point_rejects_the_axis():
    with pytest.raises(NonpositiveY):
        JetPoint(x=0.0, y=0.0, derivatives={(0, 0): 1.0})


def test_jet_point_missing_derivative():
    j = JetPoint(x=0.0, y=1.0, derivatives={(0, 0): 1.0})
    with pytest.raises(MissingDerivative):
        apply_operator(validate_coefficients(REFERENCE), j)


def test_constant_maps_to_c0(generic):
    one = SeparableField(constant(1.0), constant(1.0))
    assert apply_operator(generic, jet(one, 0.3, 0.8)) == pytest.approx(generic.c0)


@pytest.mark.parametrize("point", [(0.0, 0.5), (2.0, 1.7), (-1.0, 0.01)])
def test_linear_in_x(generic, point):
    v = PolynomialField({(1, 0): 1.0})
    x, y = point
    expected = -(generic.c0 - generic.q - y / 2) + generic.c0 * x
    assert apply_operator(generic, jet(v, x, y)) == pytest.approx(expected, rel=1e-14, abs=1e-14)


def test_y_squared_hand_value(reference):
    v = PolynomialField({(0, 2): 1.0})
    assert apply_operator(reference, jet(v, 0.0, 1.0)) == pytest.approx(0.0, abs=1e-15)


def test_B():
    x2 = PolynomialField({(2, 0): 1.0})
    assert apply_B(jet(x2, 1.5, 1.0)) == pytest.approx(-1.0 + 1.5)
    ex = SeparableField(exponential(1.0), constant(1.0))
    assert apply_B(jet(ex, 0.7, 1.0)) == pytest.approx(0.0, abs=1e-15)
    x = PolynomialField({(1, 0): 1.0})
    assert apply_B(jet(x, 3.0, 1.0)) == pytest.approx(0.5)


def test_shifted_operator_on_constants(generic):
    one = SeparableField(constant(1.0), constant(1.0))
    s = shift_coefficients(generic, 2)
    assert apply_operator(s, jet(one, 0.0, 1.0)) == pytest.approx(generic.c0 + 2 * generic.kappa)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_commutator_vanishes_for_y_squared(generic, m):
    v = PolynomialField({(0, 2): 1.0})
    assert commutator_residual(generic, v, m, m, (0.4, 1.1)) == pytest.approx(0.0, abs=1e-13)


def test_commutator_for_x(generic):
    v = PolynomialField({(1, 0): 1.0})
    lhs, rhs, b_part, _ = commutator_terms(generic, v, 1, 1, (0.2, 0.9))
    # D_y(A x) - A(D_y x) = 1/2 and the B remainder carries it
    assert lhs - rhs == pytest.approx(0.5)
    assert b_part == pytest.approx(0.5)


def test_commutator_for_constants(generic):
    one = SeparableField(constant(3.0), constant(1.0))
    for m in (1, 2, 3):
        assert commutator_residual(generic, one, m, m, (1.0, 1.0)) == pytest.approx(0.0, abs=1e-14)


def test_commutator_needs_m_at_least_one(generic):
    with pytest.raises(InsufficientJetOrder):
        commutator_terms(generic, manufactured_field("sin_exp"), 0, 0, (0.0, 1.0))


def test_commutator_rejects_insufficient_smoothness(generic):
    rough = BumpField((0.0, 1.0), (1.0, 0.5), smoothness=3)
    with pytest.raises(InsufficientJetOrder):
        commutator_terms(generic, rough, 3, 3, (0.1, 1.0))


def test_operator_needs_positive_y(generic):
    with pytest.raises(NonpositiveY):
        apply_operator_derivative(generic, manufactured_field("sin_exp"), 0, 0, (0.0, 0.0))


def test_commutator_battery_small():
    table = commutator_battery(n_sets=5, seed=11)
    assert set(table["identity"]) == {"A_m/B", "D_x", "D_y"}
    assert len(table[table["identity"] == "A_m/B"]) == 12
    assert table["passed"].all()
    assert (table["max_scaled_residual"] <= COMMUTATOR_TOL).all()


def test_dx_and_dy_commutators_on_random_fields():
    rng = np.random.default_rng(5)
    for _ in range(10):
        c = random_coefficients(rng)
        v = PolynomialField.random(rng, 4)
        point = (rng.uniform(-1, 1), rng.uniform(0.1, 2))
        for residual, scale in (dx_commutator_residual(c, v, point), dy_commutator_residual(c, v, point)):
            assert residual <= 1e-11 * max(scale, 1.0)


def test_cutoff_commutator_matches_product(generic):
    zeta = BumpField((0.0, 1.0), (1.5, 0.8))
    v = SeparableField(sine(1.3, 0.2), exponential(-0.7))
    for point in [(0.1, 0.9), (-0.6, 1.3), (0.9, 0.4)]:
        x, y = point
        product = apply_operator(generic, jet(ProductField(zeta, v), x, y))
        expected = product - zeta(x, y) * apply_operator(generic, jet(v, x, y))
        got = cutoff_commutator(generic, jet(zeta, x, y), jet(v, x, y))
        assert got == pytest.approx(expected, rel=1e-10, abs=1e-12)


def test_operator_image_derivatives(generic):
    v = SeparableField(sine(), exponential(-1.0))
    image = OperatorImage(generic, v)
    x, y = 0.8, 0.6
    assert image(x, y) == pytest.approx(apply_operator(generic, jet(v, x, y)))
    assert image.derivative(1, 2)(x, y) == pytest.approx(apply_operator_derivative(generic, v, 1, 2, (x, y)))


def test_operator_image_matches_finite_differences(generic):
    v = ProductField(PolynomialField({(1, 1): 1.0, (0, 2): -0.5}), SeparableField(polynomial([1.0, 0.2]),
                                                                                 exponential(0.3)))
    image = OperatorImage(generic, v)
    x, y, h = 0.3, 0.9, 1e-5
    fd = (image(x, y + h) - image(x, y - h)) / (2 * h)
    assert image.derivative(0, 1)(x, y) == pytest.approx(fd, rel=1e-7)


def test_manufactured_registry():
    f = manufactured_field("sin_exp")
    assert f(np.pi / 2, 0.0) == pytest.approx(1.0)
    g = manufactured_field("y_beta_x", beta=1.5)
    assert g(2.0, 4.0) == pytest.approx(2.0 * 8.0)
    assert manufactured_field("constant", value=3.0)(1.0, 1.0) == pytest.approx(3.0)
    with pytest.raises(InvalidCoefficients):
        manufactured_field("nope")
