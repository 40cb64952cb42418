# heston/fields.py
"""Analytic test fields with exact partial derivatives.

A field is callable on (x, y) arrays and returns another field from
`derivative(i, j)` = D_x^i D_y^j. Everything is closed form; there is no
symbolic engine.
"""
from math import comb
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from utils.errors import InsufficientJetOrder, InvalidCoefficients

Array = np.ndarray


class Factor:
    """One-dimensional factor t -> g^(order)(t).

    `nth` maps a derivative order to a vectorised callable.
    """

    def __init__(self, nth: Callable[[int], Callable[[Array], Array]], name: str, order: int = 0,
                 max_order: Optional[int] = None):
        self._nth = nth
        self.name = name
        self.order = order
        self.max_order = max_order

    def __call__(self, t):
        return self._nth(self.order)(np.asarray(t, dtype=float))

    def derivative(self, n: int = 1) -> "Factor":
        return Factor(self._nth, self.name, self.order + n, self.max_order)

    def __repr__(self):
        return f"{self.name}^({self.order})" if self.order else self.name


def sine(omega: float = 1.0, phase: float = 0.0) -> Factor:
    def nth(n):
        return lambda t: omega ** n * np.sin(omega * t + phase + n * np.pi / 2.0)
    return Factor(nth, f"sin({omega}t+{phase})")


def exponential(lam: float) -> Factor:
    def nth(n):
        return lambda t: lam ** n * np.exp(lam * t)
    return Factor(nth, f"exp({lam}t)")


def power(p: float) -> Factor:
    """t^p; non-integer p is allowed for t >= 0."""
    def nth(n):
        coef = 1.0
        for i in range(n):
            coef *= p - i
        if coef == 0.0:
            return lambda t: np.zeros_like(t)
        return lambda t: coef * np.power(t, p - n)
    return Factor(nth, f"t^{p}")


def polynomial(coefficients: Sequence[float]) -> Factor:
    base = Polynomial(coefficients)

    def nth(n):
        return base.deriv(n) if n else base
    return Factor(nth, f"poly{tuple(coefficients)}")


def constant(value: float) -> Factor:
    return polynomial([value])


def bump(center: float, half_width: float, smoothness: int = 6) -> Factor:
    """(1 - s^2)^smoothness for |s| < 1, s = (t - center)/half_width, else 0.

    C^(smoothness-1) with compact support, so max_order = smoothness - 1.
    """
    base = Polynomial([1.0, 0.0, -1.0]) ** smoothness

    def nth(n):
        p = base.deriv(n) if n else base

        def g(t):
            s = (t - center) / half_width
            return np.where(np.abs(s) < 1.0, p(s) / half_width ** n, 0.0)
        return g
    return Factor(nth, f"bump({center},{half_width})", max_order=smoothness - 1)


class AnalyticField:
    max_order: Optional[int] = None

    def __call__(self, x, y):
        raise NotImplementedError

    def derivative(self, i: int, j: int) -> "AnalyticField":
        raise NotImplementedError

    def require_order(self, order: int) -> None:
        if self.max_order is not None and order > self.max_order:
            raise InsufficientJetOrder(f"field supplies derivatives up to {self.max_order}, {order} requested")

    def __add__(self, other: "AnalyticField") -> "AnalyticField":
        return LinearCombination([(1.0, self), (1.0, other)])

    def __mul__(self, scalar: float) -> "AnalyticField":
        return LinearCombination([(float(scalar), self)])

    __rmul__ = __mul__


def _min_order(*orders: Optional[int]) -> Optional[int]:
    known = [o for o in orders if o is not None]
    return min(known) if known else None


class SeparableField(AnalyticField):
    """scale * fx(x) * fy(y)."""

    def __init__(self, fx: Factor, fy: Factor, scale: float = 1.0):
        self.fx, self.fy, self.scale = fx, fy, scale
        self.max_order = _min_order(
            None if fx.max_order is None else fx.max_order - fx.order,
            None if fy.max_order is None else fy.max_order - fy.order,
        )

    def __call__(self, x, y):
        return self.scale * self.fx(x) * self.fy(y)

    def derivative(self, i: int, j: int) -> "SeparableField":
        return SeparableField(self.fx.derivative(i), self.fy.derivative(j), self.scale)

    def __repr__(self):
        return f"{self.scale}*{self.fx!r}(x)*{self.fy!r}(y)"


class PolynomialField(AnalyticField):
    """sum of c * x^a * y^b keyed by (a, b)."""

    def __init__(self, terms: Dict[Tuple[int, int], float]):
        self.terms = {k: float(v) for k, v in terms.items() if v != 0.0}

    @property
    def degree(self) -> int:
        return max((a + b for a, b in self.terms), default=0)

    def __call__(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for (a, b), c in self.terms.items():
            out = out + c * x ** a * y ** b
        return out

    def derivative(self, i: int, j: int) -> "PolynomialField":
        terms: Dict[Tuple[int, int], float] = {}
        for (a, b), c in self.terms.items():
            if a < i or b < j:
                continue
            factor = c
            for n in range(i):
                factor *= a - n
            for n in range(j):
                factor *= b - n
            key = (a - i, b - j)
            terms[key] = terms.get(key, 0.0) + factor
        return PolynomialField(terms)

    @classmethod
    def random(cls, rng: np.random.Generator, degree: int) -> "PolynomialField":
        return cls({(a, n - a): rng.uniform(-1.0, 1.0) for n in range(degree + 1) for a in range(n + 1)})


class LinearCombination(AnalyticField):
    def __init__(self, terms: List[Tuple[float, AnalyticField]]):
        self.terms = list(terms)
        self.max_order = _min_order(*(f.max_order for _, f in self.terms))

    def __call__(self, x, y):
        out = 0.0
        for w, f in self.terms:
            out = out + w * f(x, y)
        return out

    def derivative(self, i: int, j: int) -> "LinearCombination":
        return LinearCombination([(w, f.derivative(i, j)) for w, f in self.terms])


class ProductField(AnalyticField):
    """f * g with derivatives by the two-variable Leibniz rule."""

    def __init__(self, f: AnalyticField, g: AnalyticField):
        self.f, self.g = f, g
        self.max_order = _min_order(f.max_order, g.max_order)

    def __call__(self, x, y):
        return self.f(x, y) * self.g(x, y)

    def derivative(self, i: int, j: int) -> AnalyticField:
        if i == 0 and j == 0:
            return self
        terms = []
        for a in range(i + 1):
            for b in range(j + 1):
                terms.append((comb(i, a) * comb(j, b),
                              ProductField(self.f.derivative(a, b), self.g.derivative(i - a, j - b))))
        return LinearCombination(terms)


def BumpField(center: Tuple[float, float], half_widths: Tuple[float, float], smoothness: int = 6) -> SeparableField:
    """Smooth compactly supported cutoff around `center`."""
    return SeparableField(bump(center[0], half_widths[0], smoothness), bump(center[1], half_widths[1], smoothness))


def manufactured_field(name: str, beta: float = 1.0, value: float = 1.0) -> AnalyticField:
    """Named manufactured solutions used by the solve and convergence commands."""
    if name == "sin_exp":
        return SeparableField(sine(), exponential(-1.0))
    if name == "constant":
        return SeparableField(constant(value), constant(1.0))
    if name == "y_beta_x":
        return SeparableField(polynomial([0.0, 1.0]), power(beta))
    raise InvalidCoefficients(f"unknown manufactured field {name!r}")


def battery(rng: np.random.Generator) -> List[AnalyticField]:
    """Analytic fields for the commutator checks: polynomials up to degree 5
    and exp/trig products."""
    fields: List[AnalyticField] = [PolynomialField.random(rng, d) for d in (1, 2, 3, 4, 5)]
    fields += [
        SeparableField(sine(), exponential(-1.0)),
        SeparableField(sine(2.0, 0.3), exponential(0.5)),
        SeparableField(exponential(0.3), sine(1.5, 0.1)),
        SeparableField(sine(1.0, 1.0), sine(0.7, 0.2)),
        ProductField(PolynomialField({(1, 1): 1.0, (0, 2): -0.5}), SeparableField(exponential(-0.2), exponential(0.4))),
    ]
    return fields
