# geometry/models.py
import math
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

Point = Tuple[float, float]


class BallKind(str, Enum):
    EUCLIDEAN_HALF = "euclidean_half"
    CYCLOIDAL = "cycloidal"


class HalfPlaneDomain(BaseModel):
    """Open rectangle (x_min, x_max) x (0, y_max).

    The degenerate boundary is the open bottom edge; the other three edges
    (and the two bottom corners) form the non-degenerate boundary.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    x_min: float
    x_max: float
    y_max: float

    @model_validator(mode="after")
    def _check_extent(self):
        if not self.x_min < self.x_max:
            raise ValueError(f"x_min must be below x_max, got {self.x_min} >= {self.x_max}")
        if not (0 < self.y_max and math.isfinite(self.y_max)):
            raise ValueError(f"y_max must be positive and finite, got {self.y_max}")
        return self

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max

    def shrink(self, d1: float) -> "HalfPlaneDomain":
        """Subdomain whose non-degenerate boundary is at distance d1 from ours."""
        return HalfPlaneDomain(x_min=self.x_min + d1, x_max=self.x_max - d1, y_max=self.y_max - d1)

    def translate(self, dx: float) -> "HalfPlaneDomain":
        return HalfPlaneDomain(x_min=self.x_min + dx, x_max=self.x_max + dx, y_max=self.y_max)

    def contains_domain(self, other: "HalfPlaneDomain") -> bool:
        return self.x_min <= other.x_min and other.x_max <= self.x_max and other.y_max <= self.y_max

    def contains_ball(self, ball: "BallSpec") -> bool:
        x0, y0 = ball.center
        reach = ball.euclidean_reach
        return (self.x_min <= x0 - reach and x0 + reach <= self.x_max
                and y0 + reach <= self.y_max)


class BallSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    center: Tuple[float, float]
    radius: float = Field(gt=0)
    kind: BallKind = BallKind.EUCLIDEAN_HALF

    @model_validator(mode="after")
    def _check_center(self):
        if self.center[1] < 0:
            raise ValueError(f"ball center must lie in the closed half-plane, got y0={self.center[1]}")
        return self

    @property
    def euclidean_reach(self) -> float:
        """Radius of a Euclidean ball about the center that contains this ball."""
        if self.kind == BallKind.EUCLIDEAN_HALF:
            return self.radius
        r, y0 = self.radius, self.center[1]
        return 2.0 * r * r + r * math.sqrt(2.0 * y0)


class InclusionReport(BaseModel):
    center: Tuple[float, float]
    radius: float
    samples: int
    outer_radius: float
    inner_violations: int = 0
    outer_violations: int = 0
    witnesses: List[Point] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.inner_violations == 0 and self.outer_violations == 0


class DistanceReport(BaseModel):
    samples: int
    symmetry_violations: int = 0
    square_root_violations: int = 0
    axis_violations: int = 0
    witness: Optional[Tuple[Point, Point]] = None

    @property
    def passed(self) -> bool:
        return self.symmetry_violations == 0 and self.square_root_violations == 0 and self.axis_violations == 0
