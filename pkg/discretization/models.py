# discretization/models.py
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from geometry.models import HalfPlaneDomain
from heston.models import Coefficients


class Grid(BaseModel):
    """Tensor grid: uniform in x, y_j = y_max (j/ny)^grading.

    Node arrays have shape (ny + 1, nx + 1) with the y = 0 row first; the
    flat index of node (j, i) is j * (nx + 1) + i.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    domain: HalfPlaneDomain
    nx: int = Field(ge=1)
    ny: int = Field(ge=1)
    grading: float = Field(default=2.0, ge=1.0)

    @classmethod
    def uniform(cls, domain: HalfPlaneDomain, n: int, grading: float = 1.0) -> "Grid":
        return cls(domain=domain, nx=n, ny=n, grading=grading)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.ny + 1, self.nx + 1)

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def hx(self) -> float:
        return self.domain.width / self.nx

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.domain.x_min, self.domain.x_max, self.nx + 1)

    @property
    def y(self) -> np.ndarray:
        t = np.arange(self.ny + 1) / self.ny
        return self.domain.y_max * t ** self.grading

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y)

    def degenerate_mask(self) -> np.ndarray:
        """Nodes of the open bottom edge."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, 1:-1] = True
        return mask

    def dirichlet_mask(self) -> np.ndarray:
        """Side columns, top row and both bottom corners."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[:, 0] = mask[:, -1] = True
        mask[-1, :] = True
        return mask

    def label(self) -> str:
        return f"{self.nx}x{self.ny}"


class GridFunction(BaseModel):
    """Node values on a grid, plus cached derivative fields keyed (i, j)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: Grid
    values: np.ndarray
    mask: Optional[np.ndarray] = None

    _derivatives: Dict[Tuple[int, int], np.ndarray] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _check_shape(self):
        values = np.array(self.values, dtype=float)
        if values.size != self.grid.n_nodes:
            raise ValueError(f"value array has {values.size} entries, grid has {self.grid.n_nodes} nodes")
        values = values.reshape(self.grid.shape)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.mask is not None:
            mask = np.array(self.mask, dtype=bool).reshape(self.grid.shape)
            mask.flags.writeable = False
            object.__setattr__(self, "mask", mask)
        return self

    @classmethod
    def from_field(cls, grid: Grid, field, order: int = 0) -> "GridFunction":
        """Sample an analytic field; exact derivatives up to `order` are cached."""
        X, Y = grid.mesh()
        gf = cls(grid=grid, values=np.broadcast_to(field(X, Y), grid.shape))
        for n in range(1, order + 1):
            for i in range(n + 1):
                gf.cache_derivative((i, n - i), np.broadcast_to(field.derivative(i, n - i)(X, Y), grid.shape))
        return gf

    @property
    def defined(self) -> np.ndarray:
        return np.ones(self.grid.shape, dtype=bool) if self.mask is None else self.mask

    def cached(self, key: Tuple[int, int]) -> Optional[np.ndarray]:
        if key == (0, 0):
            return self.values
        return self._derivatives.get(key)

    def cache_derivative(self, key: Tuple[int, int], values: np.ndarray) -> None:
        arr = np.array(values, dtype=float)
        arr.flags.writeable = False
        self._derivatives[key] = arr

    def with_mask(self, mask: Optional[np.ndarray]) -> "GridFunction":
        out = GridFunction(grid=self.grid, values=self.values, mask=mask)
        out._derivatives.update(self._derivatives)
        return out

    def _combine(self, a: float, other: Optional["GridFunction"], b: float) -> "GridFunction":
        if other is None:
            out = GridFunction(grid=self.grid, values=a * self.values, mask=self.mask)
            for key, val in self._derivatives.items():
                out.cache_derivative(key, a * val)
            return out
        if other.grid != self.grid:
            raise ValueError("grid functions live on different grids")
        mask = self.mask if other.mask is None else (other.mask if self.mask is None else self.mask & other.mask)
        out = GridFunction(grid=self.grid, values=a * self.values + b * other.values, mask=mask)
        for key in self._derivatives.keys() & other._derivatives.keys():
            out.cache_derivative(key, a * self._derivatives[key] + b * other._derivatives[key])
        return out

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return self._combine(1.0, other, 1.0)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return self._combine(1.0, other, -1.0)

    def __mul__(self, scalar: float) -> "GridFunction":
        return self._combine(float(scalar), None, 0.0)

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return self._combine(-1.0, None, 0.0)


def interpolate(grid: Grid, field) -> GridFunction:
    return GridFunction.from_field(grid, field, 0)


class LinearSystem(BaseModel):
    """Reduced Galerkin system over the non-Dirichlet nodes.

    `free` lists flat node indices of the unknowns (interior and
    degenerate-boundary nodes); `dirichlet_values` is a full node vector
    holding the boundary data.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    grid: Grid
    coefficients: Coefficients
    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    dirichlet_values: np.ndarray
    form: sp.csr_matrix
    mass: sp.csr_matrix

    @field_validator("matrix", "form", "mass", mode="before")
    @classmethod
    def _as_csr(cls, value):
        return sp.csr_matrix(value)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def boundary_partition(grid: Grid) -> Dict[str, np.ndarray]:
    """Flat node indices of the degenerate boundary, the Dirichlet boundary and the rest."""
    degenerate = grid.degenerate_mask().ravel()
    dirichlet = grid.dirichlet_mask().ravel()
    return {
        "degenerate": np.flatnonzero(degenerate),
        "dirichlet": np.flatnonzero(dirichlet),
        "interior": np.flatnonzero(~(degenerate | dirichlet)),
    }
