# spaces/models.py
from enum import Enum
from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class SpaceTag(str, Enum):
    LP = "Lp"
    H1 = "H1"
    H2 = "H2"
    HK = "Hk"
    CALHK = "calHk"
    WKP = "Wkp"
    CALPHAS = "Calphas"
    CKALPHAS = "Ckalphas"
    CK2ALPHAS = "Ck2alphas"
    C11S = "C11s"


HOLDER_TAGS = {SpaceTag.CALPHAS, SpaceTag.CKALPHAS, SpaceTag.CK2ALPHAS}


class WeightSpec(BaseModel):
    """w_m(x, y) = y^(beta+m-1) e^(-gamma sqrt(1+x^2) - mu y)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    beta: float
    mu: float = Field(default=0.0, ge=0.0)
    gamma: float = Field(default=0.0, ge=0.0)
    m: int = Field(default=0, ge=0)

    @classmethod
    def from_coefficients(cls, c, m: int = 0) -> "WeightSpec":
        return cls(beta=c.beta, mu=c.mu, gamma=c.gamma, m=m)

    @classmethod
    def power(cls, beta: float) -> "WeightSpec":
        """The single weight y^(beta-1)."""
        return cls(beta=beta)

    def shifted(self, m: int) -> "WeightSpec":
        return self.model_copy(update={"m": self.m + m})


class NormRequest(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    tag: SpaceTag
    weight: WeightSpec
    k: int = Field(default=0, ge=0)
    p: float = Field(default=2.0, ge=1.0)
    alpha: float = 0.5
    mask: Optional[np.ndarray] = None
    # sampling seed for Hölder pair subsampling on large masks
    seed: int = 0


# relative rounding allowance on both inclusion bounds
INCLUSION_SLACK = 1e-10


class HeightInclusionReport(BaseModel):
    """Both sides of the finite-height inclusions on a domain of height `height`:
    calH^(k+2) <= (1 + height)^k H^(k+2) and ||u||_{L2(w_m)} <= height^(m/2) ||u||_{L2(w)}."""
    model_config = ConfigDict(frozen=True)

    height: float
    k: int
    calhk: float
    hk: float
    l2: float
    shifted_l2: Dict[int, float]

    @property
    def calhk_bound(self) -> float:
        return (1.0 + self.height) ** self.k * self.hk

    def shifted_bound(self, m: int) -> float:
        return self.height ** (0.5 * m) * self.l2

    @property
    def passed(self) -> bool:
        if self.calhk > self.calhk_bound * (1.0 + INCLUSION_SLACK):
            return False
        return all(v <= self.shifted_bound(m) * (1.0 + INCLUSION_SLACK) for m, v in self.shifted_l2.items())
