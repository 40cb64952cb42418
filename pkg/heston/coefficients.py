# heston/coefficients.py
import logging
import math
from typing import Mapping, Optional, Union

import numpy as np

from heston.models import Coefficients, DerivedConstants, ShiftedCoefficients
from utils.errors import (
    InvalidCoefficients,
    NegativeC0,
    NegativeGamma,
    NonpositiveKappaTheta,
    RhoOutOfRange,
    SigmaZero,
)

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("sigma", "rho", "kappa", "theta", "c0")
OPTIONAL_FIELDS = {"q": 0.0, "gamma": 0.0}

# |b1| below this counts as zero in the derived report
B1_ZERO_TOL = 1e-14

AnyCoefficients = Union[Coefficients, ShiftedCoefficients]


def _check_values(sigma, rho, kappa, theta, c0, gamma) -> None:
    if sigma == 0:
        raise SigmaZero("sigma must be nonzero")
    if not -1.0 < rho < 1.0:
        raise RhoOutOfRange(f"rho must satisfy -1 < rho < 1, got {rho}")
    if not (kappa > 0 and theta > 0):
        raise NonpositiveKappaTheta(f"kappa and theta must be positive, got kappa={kappa}, theta={theta}")
    if not c0 >= 0:
        raise NegativeC0(f"c0 must be nonnegative, got {c0}")
    if not gamma >= 0:
        raise NegativeGamma(f"gamma must be nonnegative, got {gamma}")


def validate_coefficients(raw: Union[Mapping[str, float], Coefficients]) -> Coefficients:
    """Check a raw parameter record and return validated Coefficients."""
    if isinstance(raw, Coefficients):
        raw = raw.model_dump()
    missing = [name for name in REQUIRED_FIELDS if name not in raw]
    if missing:
        raise InvalidCoefficients(f"missing coefficient(s): {', '.join(missing)}")
    unknown = set(raw) - set(REQUIRED_FIELDS) - set(OPTIONAL_FIELDS)
    if unknown:
        raise InvalidCoefficients(f"unknown coefficient(s): {', '.join(sorted(unknown))}")

    values = {}
    for name in (*REQUIRED_FIELDS, *OPTIONAL_FIELDS):
        value = raw.get(name, OPTIONAL_FIELDS.get(name))
        try:
            values[name] = float(value)
        except (TypeError, ValueError):
            raise InvalidCoefficients(f"{name} is not a real number: {value!r}") from None
        if not math.isfinite(values[name]):
            raise InvalidCoefficients(f"{name} must be finite, got {value!r}")

    _check_values(values["sigma"], values["rho"], values["kappa"], values["theta"], values["c0"], values["gamma"])
    return Coefficients(**values)


def check_coefficients(c: AnyCoefficients) -> None:
    """Raise the named error (SigmaZero, RhoOutOfRange, ...) for the first
    admissibility condition `c` breaks."""
    base = c.base if isinstance(c, ShiftedCoefficients) else c
    validate_coefficients(base)


def smallest_eigenvalue(sigma: float, rho: float) -> float:
    """Smaller eigenvalue of ((1, rho*sigma), (rho*sigma, sigma^2)).

    Computed as det / largest eigenvalue, which avoids the cancellation
    in (1 + sigma^2 - sqrt(disc)) / 2 when the two are close.
    """
    s2 = sigma * sigma
    disc = (1.0 - s2) ** 2 + 4.0 * rho * rho * s2
    largest = 0.5 * (1.0 + s2 + math.sqrt(disc))
    return s2 * (1.0 - rho * rho) / largest


def derived_constants(c: Coefficients) -> DerivedConstants:
    sigma, rho, kappa, theta, c0, q = c.sigma, c.rho, c.kappa, c.theta, c.c0, c.q
    nu0 = smallest_eigenvalue(sigma, rho)
    # r is read as c0 in the coefficient sum
    lam = 1.0 + 2.0 * abs(rho * sigma) + sigma ** 2 + kappa * theta + abs(c0 - q) + c0
    b1 = c0 - q - kappa * theta * rho / sigma
    return DerivedConstants(
        nu0=nu0,
        lam=lam,
        beta=c.beta,
        mu=c.mu,
        a1=kappa * rho / sigma - 0.5,
        b1=b1,
        b1_is_zero=abs(b1) <= B1_ZERO_TOL * max(1.0, abs(c0), abs(q), abs(kappa * theta * rho / sigma)),
    )


def shift_coefficients(c: AnyCoefficients, m: int) -> ShiftedCoefficients:
    """Coefficients of A_m; shifting a shifted family adds the orders."""
    if m < 0:
        raise InvalidCoefficients(f"shift order must be nonnegative, got {m}")
    if isinstance(c, ShiftedCoefficients):
        return ShiftedCoefficients(base=c.base, m=c.m + m)
    return ShiftedCoefficients(base=c, m=m)


def as_shifted(c: AnyCoefficients) -> ShiftedCoefficients:
    return c if isinstance(c, ShiftedCoefficients) else ShiftedCoefficients(base=c, m=0)


def ellipticity_margin(c: Coefficients, xi1, xi2, y) -> np.ndarray:
    """(y/2)(xi1^2 + 2 rho sigma xi1 xi2 + sigma^2 xi2^2) - (nu0/2) y |xi|^2.

    The unscaled quadratic form is bounded below by nu0 |xi|^2, so the
    y/2-scaled form is bounded by half of that.
    """
    xi1, xi2, y = np.asarray(xi1, float), np.asarray(xi2, float), np.asarray(y, float)
    nu0 = smallest_eigenvalue(c.sigma, c.rho)
    quad = xi1 ** 2 + 2.0 * c.rho * c.sigma * xi1 * xi2 + c.sigma ** 2 * xi2 ** 2
    return 0.5 * y * quad - 0.5 * nu0 * y * (xi1 ** 2 + xi2 ** 2)


def random_coefficients(rng: np.random.Generator, gamma: Optional[float] = None) -> Coefficients:
    """Draw a valid coefficient set over the ranges the property checks use."""
    sign = rng.choice([-1.0, 1.0])
    raw = {
        "sigma": sign * rng.uniform(0.2, 2.0),
        "rho": rng.uniform(-0.95, 0.95),
        "kappa": rng.uniform(0.2, 3.0),
        "theta": rng.uniform(0.05, 1.0),
        "c0": rng.uniform(0.0, 2.0),
        "q": rng.uniform(-1.0, 1.0),
        "gamma": rng.uniform(0.0, 1.0) if gamma is None else gamma,
    }
    return validate_coefficients(raw)
