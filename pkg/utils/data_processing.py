# utils/data_processing.py

import json
import math
import os
from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from discretization.models import Grid, GridFunction
from geometry.models import HalfPlaneDomain
from harness.config import (
    ALPHA_SWEEP, DEFAULT_ALPHA, DEFAULT_GRADING, DEFAULT_LADDER, DEFAULT_MAX_ITER, DEFAULT_RESTART, DEFAULT_TOLERANCE,
    MONOTONICITY_BAND,
)
from harness.models import EstimateKind
from spaces.models import SpaceTag
from utils.errors import ConfigError


class Command(str, Enum):
    VALIDATE = "validate"
    SOLVE = "solve"
    NORMS = "norms"
    COMMUTATORS = "commutators"
    SWEEP = "sweep"
    CONVERGENCE = "convergence"
    PROBE = "probe"


class SourceKind(str, Enum):
    MANUFACTURED = "manufactured"
    CONSTANT = "constant"
    # |x - x0|, non-differentiable across x = x0
    KINK = "kink"


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _default_domain() -> HalfPlaneDomain:
    return HalfPlaneDomain(x_min=0.0, x_max=math.pi, y_max=1.0)


class GridBlock(_Block):
    nx: int = Field(default=32, ge=2)
    ny: int = Field(default=32, ge=2)
    grading: float = Field(default=DEFAULT_GRADING, ge=1.0)
    ladder: List[int] = Field(default_factory=lambda: list(DEFAULT_LADDER))

    @model_validator(mode="after")
    def _check_ladder(self):
        if any(n < 2 for n in self.ladder):
            raise ValueError("ladder levels need at least 2 cells per direction")
        if list(self.ladder) != sorted(set(self.ladder)):
            raise ValueError("ladder levels must be strictly increasing")
        return self


class WeightBlock(_Block):
    """Overrides of the weight parameters derived from the coefficients."""
    beta: Optional[float] = Field(default=None, gt=0)
    mu: Optional[float] = Field(default=None, ge=0)
    gamma: Optional[float] = Field(default=None, ge=0)


class SolverBlock(_Block):
    tol: float = Field(default=DEFAULT_TOLERANCE, gt=0)
    max_iter: int = Field(default=DEFAULT_MAX_ITER, ge=1)
    restart: int = Field(default=DEFAULT_RESTART, ge=1)
    method: Literal["gmres", "direct"] = "gmres"


class SourceBlock(_Block):
    kind: SourceKind = SourceKind.MANUFACTURED
    field: str = "sin_exp"
    value: float = 1.0
    kink_center: Optional[float] = None


class EstimateBlock(_Block):
    kinds: List[EstimateKind] = Field(default_factory=lambda: [EstimateKind.H2_INTERIOR])
    z0: Optional[Tuple[float, float]] = None
    R: float = Field(default=0.25, gt=0)
    R0: float = Field(default=0.5, gt=0)
    d1: float = Field(default=0.25, gt=0)
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0, lt=1)
    p: Optional[float] = Field(default=None, ge=1)
    k: int = Field(default=0, ge=0)
    alpha_sweep: bool = False
    alphas: List[float] = Field(default_factory=lambda: list(ALPHA_SWEEP))
    # allowed growth of the implied constant per refinement
    band: float = Field(default=MONOTONICITY_BAND, ge=0)
    negative_control: bool = False


class ProbeBlock(_Block):
    k: int = Field(default=3, ge=0)
    strip_height: float = Field(default=0.25, gt=0)
    x_margin: float = Field(default=0.25, ge=0, lt=0.5)


class NormsBlock(_Block):
    tags: List[SpaceTag] = Field(default_factory=lambda: [SpaceTag.LP, SpaceTag.H1, SpaceTag.H2])
    k: int = Field(default=1, ge=0)
    p: float = Field(default=2.0, ge=1)
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0, lt=1)


class ChecksBlock(_Block):
    coefficient_sets: int = Field(default=100, ge=1)
    ellipticity_sets: int = Field(default=1000, ge=1)
    ellipticity_points: int = Field(default=1000, ge=1)
    geometry_samples: int = Field(default=100_000, ge=1)
    ms: List[int] = Field(default_factory=lambda: [1, 2, 3])
    ks: List[int] = Field(default_factory=lambda: [0, 1, 2, 3])


class OutputBlock(_Block):
    directory: Optional[str] = None


class RunConfig(_Block):
    command: Command = Command.SOLVE
    # kept raw so coefficient errors surface under their own names
    coefficients: Dict[str, float]
    domain: HalfPlaneDomain = Field(default_factory=_default_domain)
    grid: GridBlock = Field(default_factory=GridBlock)
    weight: WeightBlock = Field(default_factory=WeightBlock)
    solver: SolverBlock = Field(default_factory=SolverBlock)
    source: SourceBlock = Field(default_factory=SourceBlock)
    estimate: EstimateBlock = Field(default_factory=EstimateBlock)
    probe: ProbeBlock = Field(default_factory=ProbeBlock)
    norms: NormsBlock = Field(default_factory=NormsBlock)
    checks: ChecksBlock = Field(default_factory=ChecksBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)
    seed: int = Field(default=0, ge=0)

    def grid_for(self, n: Optional[int] = None) -> Grid:
        nx, ny = (self.grid.nx, self.grid.ny) if n is None else (n, n)
        return Grid(domain=self.domain, nx=nx, ny=ny, grading=self.grid.grading)

    def ladder(self) -> List[Grid]:
        return [self.grid_for(n) for n in self.grid.ladder]


def load_run_config(json_data: Union[Dict, str]) -> RunConfig:
    if isinstance(json_data, str):
        # If a string is provided, assume it's a file path
        try:
            with open(json_data, 'r') as f:
                data = json.load(f)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {json_data!r} does not exist") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {json_data!r} is not valid JSON: {exc}") from exc
    else:
        data = json_data
    if not isinstance(data, dict):
        raise ConfigError("a run configuration must be a JSON object")
    return RunConfig.model_validate(data)


def write_resolved_config(config: RunConfig, directory: str) -> str:
    """Write the configuration with every default filled in."""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "resolved_config.json")
    with open(path, 'w') as f:
        f.write(config.model_dump_json(indent=2))
        f.write("\n")
    return path


def write_json(payload: Dict, directory: str, name: str) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    with open(path, 'w') as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_csv(df: pd.DataFrame, directory: str, name: str, columns: Optional[List[str]] = None) -> str:
    """CSV with a fixed float format so identical runs give identical bytes."""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    if columns is not None:
        df = df.reindex(columns=columns)
    df.to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
    return path


def save_grid_function(u: GridFunction, path: str) -> None:
    """Header `nx ny x_min x_max y_max g`, then one line per row, y = 0 first."""
    g = u.grid
    d = g.domain
    header = f"{g.nx} {g.ny} {d.x_min!r} {d.x_max!r} {d.y_max!r} {g.grading!r}"
    np.savetxt(path, u.values, fmt="%.17g", delimiter=" ", header=header, comments="")


def load_grid_function(path: str) -> GridFunction:
    with open(path, 'r') as f:
        fields = f.readline().split()
    if len(fields) != 6:
        raise ConfigError(f"{path}: header must read 'nx ny x_min x_max y_max g'")
    try:
        nx, ny = int(fields[0]), int(fields[1])
        x_min, x_max, y_max, grading = (float(v) for v in fields[2:])
    except ValueError as exc:
        raise ConfigError(f"{path}: malformed header {fields}") from exc
    grid = Grid(domain=HalfPlaneDomain(x_min=x_min, x_max=x_max, y_max=y_max), nx=nx, ny=ny, grading=grading)
    values = np.loadtxt(path, skiprows=1, ndmin=2)
    if values.shape != grid.shape:
        raise ConfigError(f"{path}: expected {grid.shape[0]} rows of {grid.shape[1]} values, got {values.shape}")
    return GridFunction(grid=grid, values=values)
