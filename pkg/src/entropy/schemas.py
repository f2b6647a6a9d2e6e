# Grid densities on boxes in R^n (n <= 3)
from typing import Annotated, Callable, Optional

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

from src.config import Config as settings
from src.linops import Vector


def as_grid_values(value) -> np.ndarray:
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ValueError(f"grid values are not numeric: {e}")
    if arr.ndim not in (1, 2, 3):
        raise ValueError(f"grid values must be 1-, 2- or 3-dimensional, got {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("grid values must be finite")
    arr.setflags(write=False)
    return arr


GridValues = Annotated[np.ndarray, BeforeValidator(as_grid_values)]


class GridSpec(BaseModel):
    """Uniform cell-centered grid on the box prod_i [lo_i, hi_i]."""
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    counts: tuple[int, ...]

    @model_validator(mode="after")
    def check_axes(self):
        if not 1 <= len(self.counts) <= 3:
            raise ValueError(f"grids have 1 to 3 axes, got {len(self.counts)}")
        if not len(self.lo) == len(self.hi) == len(self.counts):
            raise ValueError("lo, hi and counts must have the same length")
        for lo, hi, count in zip(self.lo, self.hi, self.counts):
            if not hi > lo:
                raise ValueError(f"empty axis [{lo}, {hi}]")
            if count < 2:
                raise ValueError("each axis needs at least 2 cells")
        return self

    @classmethod
    def symmetric(cls, dim: int, half_width: Optional[float] = None, count: Optional[int] = None) -> "GridSpec":
        half_width = settings.GRID_HALF_WIDTH if half_width is None else half_width
        count = settings.grid_count(dim) if count is None else count
        return cls(lo=(-half_width,) * dim, hi=(half_width,) * dim, counts=(count,) * dim)

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / count for lo, hi, count in zip(self.lo, self.hi, self.counts))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return [lo + (np.arange(count) + 0.5) * h
                for lo, count, h in zip(self.lo, self.counts, self.spacing)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def points(self) -> np.ndarray:
        """Cell centers, shape (cells, dim), row-major order."""
        return np.stack([axis.reshape(-1) for axis in self.mesh()], axis=1)


class DensityGrid(BaseModel):
    """Nonnegative values at cell centers; values.shape gives the cell counts."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    values: GridValues

    @model_validator(mode="after")
    def check_shape(self):
        if len(self.lo) != self.values.ndim or len(self.hi) != self.values.ndim:
            raise ValueError("box dimension does not match the value array")
        if np.any(self.values < 0.0):
            raise ValueError("density values must be nonnegative")
        GridSpec(lo=self.lo, hi=self.hi, counts=self.values.shape)
        return self

    @classmethod
    def on(cls, grid: GridSpec, values) -> "DensityGrid":
        return cls(lo=grid.lo, hi=grid.hi, values=np.asarray(values, dtype=np.float64).reshape(grid.counts))

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable[[np.ndarray], np.ndarray], normalize: bool = True) -> "DensityGrid":
        values = np.asarray(fn(grid.points()), dtype=np.float64).reshape(grid.counts)
        if normalize:
            values = values / (values.sum() * grid.cell_volume)
        return cls.on(grid, values)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(lo=self.lo, hi=self.hi, counts=self.values.shape)

    @property
    def dim(self) -> int:
        return int(self.values.ndim)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(int(k) for k in self.values.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return self.grid.spacing

    @property
    def cell_volume(self) -> float:
        return self.grid.cell_volume

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def axes(self) -> list[np.ndarray]:
        return self.grid.axes()

    def points(self) -> np.ndarray:
        return self.grid.points()

    def with_values(self, values) -> "DensityGrid":
        return DensityGrid(lo=self.lo, hi=self.hi, values=values)

    def normalized(self) -> "DensityGrid":
        return self.with_values(self.values / (self.values.sum() * self.cell_volume))


class MarginalGrid(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    density: DensityGrid
    direction: Vector


class FisherCheck(BaseModel):
    lhs: float
    rhs: float
    tolerance: float
    holds: bool
    slack: float


class HeatScanRecord(BaseModel):
    t: float
    info_gap: float
    gap: float


class HeatScan(BaseModel):
    records: list[HeatScanRecord] = Field(default_factory=list)
    integral: float
    gap_change: float
    identity_residual: float
    tolerance: float
    nonnegative: bool
