# heston/operator.py
import logging
from typing import Callable, List, Tuple

import numpy as np

from heston.coefficients import AnyCoefficients, as_shifted, shift_coefficients
from heston.fields import AnalyticField
from heston.models import Coefficients, JetPoint
from utils.errors import InsufficientJetOrder, NonpositiveY

logger = logging.getLogger(__name__)

Derivs = Callable[[int, int], np.ndarray]


def operator_terms(c: AnyCoefficients, y, d: Derivs, a: int = 0, b: int = 0) -> List[np.ndarray]:
    """Individual terms of D_x^a D_y^b (A_m v), Leibniz-expanded in y.

    `d(i, j)` returns D_x^i D_y^j v. With a = b = 0 these are the eight
    terms of A_m v itself.
    """
    s = as_shifted(c)
    rs = s.rho * s.sigma
    s2 = s.sigma ** 2

    def S(i, j):
        return d(i + 2, j) + 2.0 * rs * d(i + 1, j + 1) + s2 * d(i, j + 2)

    terms = [
        -0.5 * y * S(a, b),
        -(s.r - s.q) * d(a + 1, b),
        0.5 * y * d(a + 1, b),
        -s.kappa * s.theta * d(a, b + 1),
        s.kappa * y * d(a, b + 1),
        s.c0 * d(a, b),
    ]
    if b > 0:
        terms += [
            -0.5 * b * S(a, b - 1),
            0.5 * b * d(a + 1, b - 1),
            s.kappa * b * d(a, b),
        ]
    return terms


def _sum(terms) -> np.ndarray:
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


def _scale(terms) -> np.ndarray:
    out = np.abs(terms[0])
    for t in terms[1:]:
        out = out + np.abs(t)
    return out


def evaluate_operator(c: AnyCoefficients, y, d: Derivs) -> np.ndarray:
    """A_m v on arrays of derivative values."""
    return _sum(operator_terms(c, y, d))


def apply_operator(s: AnyCoefficients, j: JetPoint) -> float:
    """A_m v at a jet point; a plain Coefficients argument means m = 0."""
    return float(evaluate_operator(s, j.y, j.get))


def apply_B(j: JetPoint) -> float:
    return -0.5 * j.get(2, 0) + 0.5 * j.get(1, 0)


def _field_derivs(field: AnalyticField, x, y) -> Derivs:
    cache = {}

    def d(i, j):
        if (i, j) not in cache:
            cache[(i, j)] = field.derivative(i, j)(x, y)
        return cache[(i, j)]
    return d


def _check_point(point: Tuple[float, float]) -> Tuple[float, float]:
    x, y = point
    if not y > 0:
        raise NonpositiveY(f"operator is evaluated on the open half-plane, got y={y}")
    return float(x), float(y)


def apply_operator_derivative(c: AnyCoefficients, field: AnalyticField, a: int, b: int, point) -> float:
    """D_x^a D_y^b (A v) from the field's closures, without going through A_m."""
    x, y = _check_point(point)
    field.require_order(a + b + 2)
    return float(_sum(operator_terms(c, y, _field_derivs(field, x, y), a, b)))


def commutator_terms(c: Coefficients, field: AnalyticField, k: int, m: int, point) -> Tuple[float, float, float, float]:
    """(D_x^a D_y^m A v, A_m D_x^a D_y^m v, m B D_x^a D_y^(m-1) v), a = max(k - m, 0),
    plus the scale of the compared terms as a fourth entry."""
    if m < 1:
        raise InsufficientJetOrder(f"commutator order m must be >= 1, got {m}")
    x, y = _check_point(point)
    a = max(k - m, 0)
    field.require_order(a + m + 2)
    d = _field_derivs(field, x, y)

    lhs_terms = operator_terms(c, y, d, a, m)
    shifted = shift_coefficients(c, m)
    rhs_terms = operator_terms(shifted, y, lambda i, j: d(i + a, j + m))
    b_terms = [-0.5 * m * d(a + 2, m - 1), 0.5 * m * d(a + 1, m - 1)]
    scale = max(float(_scale(lhs_terms)), float(_scale(rhs_terms)), float(_scale(b_terms)))
    return float(_sum(lhs_terms)), float(_sum(rhs_terms)), float(_sum(b_terms)), scale


def commutator_residual(c: Coefficients, field: AnalyticField, k: int, m: int, point) -> float:
    """|D_x^(k-m) D_y^m A v - A_m D_x^(k-m) D_y^m v - m B D_x^(k-m) D_y^(m-1) v|.

    For k < m the x order is taken as zero, which is the pure-y identity.
    """
    lhs, rhs, b_part, _ = commutator_terms(c, field, k, m, point)
    return abs(lhs - rhs - b_part)


def commutator_scale(c: Coefficients, field: AnalyticField, k: int, m: int, point) -> float:
    return commutator_terms(c, field, k, m, point)[3]


def dx_commutator_residual(c: Coefficients, field: AnalyticField, point) -> Tuple[float, float]:
    """(|A D_x v - D_x A v|, scale); the coefficients do not depend on x."""
    x, y = _check_point(point)
    field.require_order(3)
    d = _field_derivs(field, x, y)
    lhs = operator_terms(c, y, lambda i, j: d(i + 1, j))
    rhs = operator_terms(c, y, d, 1, 0)
    return abs(float(_sum(lhs) - _sum(rhs))), max(float(_scale(lhs)), float(_scale(rhs)))


def dy_commutator_residual(c: Coefficients, field: AnalyticField, point) -> Tuple[float, float]:
    """Residual of [D_y, A]v = -(v_xx + 2 rho sigma v_xy + sigma^2 v_yy)/2 + v_x/2 + kappa v_y."""
    x, y = _check_point(point)
    field.require_order(3)
    d = _field_derivs(field, x, y)
    rs, s2 = c.rho * c.sigma, c.sigma ** 2
    lhs = operator_terms(c, y, d, 0, 1)
    a_dy = operator_terms(c, y, lambda i, j: d(i, j + 1))
    bracket = [-0.5 * d(2, 0), -rs * d(1, 1), -0.5 * s2 * d(0, 2), 0.5 * d(1, 0), c.kappa * d(0, 1)]
    residual = _sum(lhs) - _sum(a_dy) - _sum(bracket)
    scale = max(float(_scale(lhs)), float(_scale(a_dy)), float(_scale(bracket)))
    return abs(float(residual)), scale


def cutoff_commutator(c: Coefficients, zeta: JetPoint, v: JetPoint) -> float:
    """[A, zeta] v = A(zeta v) - zeta A v from first derivatives of v and
    second derivatives of zeta."""
    y = v.y
    rs, s2 = c.rho * c.sigma, c.sigma ** 2
    zx, zy = zeta.get(1, 0), zeta.get(0, 1)
    zxx, zxy, zyy = zeta.get(2, 0), zeta.get(1, 1), zeta.get(0, 2)
    w, wx, wy = v.get(0, 0), v.get(1, 0), v.get(0, 1)
    second = (zxx * w + 2.0 * zx * wx
              + 2.0 * rs * (zxy * w + zx * wy + zy * wx)
              + s2 * (zyy * w + 2.0 * zy * wy))
    return -0.5 * y * second - (c.c0 - c.q - 0.5 * y) * zx * w - c.kappa * (c.theta - y) * zy * w


class OperatorImage(AnalyticField):
    """The field A v with exact derivatives of every order v supplies."""

    def __init__(self, c: AnyCoefficients, field: AnalyticField, a: int = 0, b: int = 0):
        self.c, self.field, self.a, self.b = c, field, a, b
        self.max_order = None if field.max_order is None else field.max_order - 2 - a - b

    def __call__(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return _sum(operator_terms(self.c, y, _field_derivs(self.field, x, y), self.a, self.b))

    def derivative(self, i: int, j: int) -> "OperatorImage":
        return OperatorImage(self.c, self.field, self.a + i, self.b + j)
