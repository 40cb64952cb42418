# spaces/weights.py
import numpy as np

from spaces.models import WeightSpec
from utils.errors import NonpositiveY


def weight_value(w: WeightSpec, point) -> float:
    """y^(beta+m-1) e^(-gamma sqrt(1+x^2) - mu y) at a point of the open half-plane."""
    x, y = float(point[0]), float(point[1])
    if not y > 0:
        raise NonpositiveY(f"weight is evaluated for y > 0, got y={y}")
    return float(weight_array(w, x, y))


def weight_array(w: WeightSpec, x, y) -> np.ndarray:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise NonpositiveY("weight is evaluated for y > 0")
    return y ** (w.beta + w.m - 1.0) * np.exp(-w.gamma * np.sqrt(1.0 + x * x) - w.mu * y)
