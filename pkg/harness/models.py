# harness/models.py
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from geometry.models import HalfPlaneDomain


class EstimateKind(str, Enum):
    SUPREMUM = "supremum"
    HOLDER = "holder"
    H2_INTERIOR = "h2_interior"
    HK2_INTERIOR = "hk2_interior"
    KOCH_GRADIENT = "koch_gradient"
    CKALPHAS_DOMAIN = "ckalphas_domain"
    SCHAUDER = "schauder"


HALF_BALL_KINDS = {EstimateKind.SUPREMUM, EstimateKind.HOLDER, EstimateKind.H2_INTERIOR, EstimateKind.HK2_INTERIOR}

CSV_COLUMNS = ["kind", "grid_nx", "grid_ny", "R", "R0", "z0_x", "z0_y", "alpha", "p", "left", "right", "ratio",
               "runtime_ms"]


class EstimateRegion(BaseModel):
    """Either nested half-balls B_R^+(z0) in B_R0^+(z0) or nested rectangles inner in outer."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    z0: Optional[Tuple[float, float]] = None
    R: Optional[float] = Field(default=None, gt=0)
    R0: Optional[float] = Field(default=None, gt=0)
    inner: Optional[HalfPlaneDomain] = None
    outer: Optional[HalfPlaneDomain] = None


class EstimateReport(BaseModel):
    kind: EstimateKind
    region: EstimateRegion
    grid_nx: int
    grid_ny: int
    left: float
    right: float
    ratio: float
    alpha: Optional[float] = None
    p: Optional[float] = None
    k: int = 0
    trivial: bool = False
    runtime_ms: float = 0.0

    @property
    def implied_constant(self) -> float:
        return self.ratio

    def to_row(self) -> Dict[str, object]:
        z0 = self.region.z0 or (None, None)
        return {
            "kind": self.kind.value,
            "grid_nx": self.grid_nx,
            "grid_ny": self.grid_ny,
            "R": self.region.R,
            "R0": self.region.R0,
            "z0_x": z0[0],
            "z0_y": z0[1],
            "alpha": self.alpha,
            "p": self.p,
            "left": self.left,
            "right": self.right,
            "ratio": self.ratio,
            "runtime_ms": self.runtime_ms,
        }


class ProbeReport(BaseModel):
    k: int
    strip_height: float
    levels: List[str]
    maxima: Dict[str, List[float]]
    ratios: Dict[str, List[float]]
    passed_by_derivative: Dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.passed_by_derivative.values())
