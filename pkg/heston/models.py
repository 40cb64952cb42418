# heston/models.py
from dataclasses import dataclass, field
from typing import Dict, Tuple

from pydantic import BaseModel, ConfigDict, Field

from utils.errors import MissingDerivative, NonpositiveY

MultiIndex = Tuple[int, int]


class Coefficients(BaseModel):
    """Heston operator parameters; build through `validate_coefficients`."""
    model_config = ConfigDict(frozen=True)

    sigma: float
    rho: float
    kappa: float
    theta: float
    c0: float
    q: float = 0.0
    gamma: float = 0.0

    @property
    def r(self) -> float:
        """Rate in the first-order x coefficient; equals c0."""
        return self.c0

    @property
    def m(self) -> int:
        return 0

    @property
    def beta(self) -> float:
        return 2.0 * self.kappa * self.theta / self.sigma ** 2

    @property
    def mu(self) -> float:
        return 2.0 * self.kappa / self.sigma ** 2


class DerivedConstants(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    nu0: float
    lam: float = Field(alias="lambda")
    beta: float
    mu: float
    a1: float
    b1: float
    b1_is_zero: bool


class ShiftedCoefficients(BaseModel):
    """Coefficients of A_m. Shifted fields are derived from `base` and `m`,
    so composing shifts only adds orders."""
    model_config = ConfigDict(frozen=True)

    base: Coefficients
    m: int = Field(default=0, ge=0)

    @property
    def sigma(self) -> float:
        return self.base.sigma

    @property
    def rho(self) -> float:
        return self.base.rho

    @property
    def kappa(self) -> float:
        return self.base.kappa

    @property
    def gamma(self) -> float:
        return self.base.gamma

    @property
    def theta(self) -> float:
        b = self.base
        return b.theta + self.m * b.sigma ** 2 / (2.0 * b.kappa)

    @property
    def q(self) -> float:
        b = self.base
        return b.q - self.m * b.rho * b.sigma

    @property
    def r(self) -> float:
        # the x-drift keeps the unshifted rate; only the killing term moves
        return self.base.c0

    @property
    def c0(self) -> float:
        return self.base.c0 + self.m * self.base.kappa

    @property
    def beta(self) -> float:
        return self.base.beta + self.m

    @property
    def mu(self) -> float:
        return self.base.mu

    def as_dict(self) -> Dict[str, float]:
        return {
            "sigma": self.sigma,
            "rho": self.rho,
            "kappa": self.kappa,
            "theta": self.theta,
            "r": self.r,
            "c0": self.c0,
            "q": self.q,
            "gamma": self.gamma,
            "beta": self.beta,
            "m": self.m,
        }


@dataclass(frozen=True)
class JetPoint:
    """Partial derivatives of a scalar field at one point of the open half-plane.

    `derivatives` maps (i, j) to D_x^i D_y^j v; (0, 0) is the value.
    """
    x: float
    y: float
    derivatives: Dict[MultiIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.y > 0:
            raise NonpositiveY(f"jet point needs y > 0, got y={self.y}")

    @property
    def order(self) -> int:
        return max((i + j for i, j in self.derivatives), default=-1)

    def get(self, i: int, j: int) -> float:
        try:
            return self.derivatives[(i, j)]
        except KeyError:
            raise MissingDerivative(f"jet at ({self.x}, {self.y}) lacks D_x^{i} D_y^{j}") from None

    @classmethod
    def from_field(cls, fld, x: float, y: float, order: int) -> "JetPoint":
        derivatives = {
            (i, n - i): float(fld.derivative(i, n - i)(x, y))
            for n in range(order + 1)
            for i in range(n + 1)
        }
        return cls(x=x, y=y, derivatives=derivatives)
