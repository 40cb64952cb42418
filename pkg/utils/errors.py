# utils/errors.py
from typing import List, Optional

import numpy as np


class HestonError(Exception):
    """Base error; `exit_code` is what the CLI returns for it."""
    exit_code = 1

    def __init__(self, message: str = ""):
        name = type(self).__name__
        text = f"{name}: {message}" if message else name
        super().__init__(text)


class InputError(HestonError, ValueError):
    exit_code = 1


class NumericalError(HestonError, ArithmeticError):
    exit_code = 2


class PropertyCheckFailure(HestonError):
    exit_code = 3


# Coefficients
class SigmaZero(InputError):
    pass


class RhoOutOfRange(InputError):
    pass


class NonpositiveKappaTheta(InputError):
    pass


class NegativeC0(InputError):
    pass


class NegativeGamma(InputError):
    pass


class InvalidCoefficients(InputError):
    pass


# Jets and fields
class MissingDerivative(InputError):
    pass


class MissingDerivatives(InputError):
    pass


class InsufficientJetOrder(InputError):
    pass


# Geometry and weights
class NegativeY(InputError):
    pass


class NonpositiveY(InputError):
    pass


class NonpositiveBeta(InputError):
    pass


class RegionOutsideDomain(InputError):
    pass


# Norm evaluation
class EmptyMask(InputError):
    pass


class UnsupportedTag(InputError):
    pass


class AlphaOutOfRange(InputError):
    pass


class InvalidExponent(InputError):
    pass


# Grids and stencils
class HNotOnGrid(InputError):
    pass


class EmptyResult(InputError):
    pass


class SupportTooClose(InputError):
    pass


class GridTooCoarse(InputError):
    pass


class OrderTooHigh(InputError):
    pass


class ZeroData(InputError):
    pass


class ConfigError(InputError):
    pass


class SingularSystem(NumericalError):
    pass


class NotConverged(NumericalError):
    def __init__(
        self,
        message: str = "",
        best_iterate: Optional[np.ndarray] = None,
        residual_history: Optional[List[float]] = None,
    ):
        super().__init__(message)
        self.best_iterate = best_iterate
        self.residual_history = list(residual_history or [])
