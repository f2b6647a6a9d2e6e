from typing import Annotated

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

from src.entropy import DensityGrid
from src.verdict import Verdict


class FactorSet(BaseModel):
    """Nonnegative one-dimensional factors f_j sampled at cell centres; masses are arbitrary."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    factors: list[DensityGrid] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_one_dimensional(self):
        for j, f in enumerate(self.factors):
            if f.dim != 1:
                raise ValueError(f"factor {j} is {f.dim}-dimensional")
        return self

    @property
    def m(self) -> int:
        return len(self.factors)

    def scaled(self, j: int, s: float) -> "FactorSet":
        if not s > 0:
            raise ValueError("scale must be positive")
        factors = list(self.factors)
        factors[j] = factors[j].with_values(factors[j].values * s)
        return FactorSet(factors=factors)


def as_log_values(value) -> np.ndarray:
    arr = np.array(value, dtype=np.float64).reshape(-1)
    if arr.size < 2:
        raise ValueError("log factor needs at least 2 samples")
    if not np.all(np.isfinite(arr)):
        raise ValueError("log factor values must be finite")
    arr.setflags(write=False)
    return arr


class LogFactor(BaseModel):
    """phi_j sampled at the cell centres of [lo, hi]; e^{phi_j} vanishes outside the sampled range."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lo: float
    hi: float
    values: Annotated[np.ndarray, BeforeValidator(as_log_values)]

    @model_validator(mode="after")
    def check_range(self):
        if not self.hi > self.lo:
            raise ValueError(f"empty range [{self.lo}, {self.hi}]")
        return self

    @classmethod
    def from_function(cls, lo: float, hi: float, count: int, fn) -> "LogFactor":
        h = (hi - lo) / count
        centers = lo + (np.arange(count) + 0.5) * h
        return cls(lo=lo, hi=hi, values=np.asarray(fn(centers), dtype=np.float64))

    @classmethod
    def from_factor(cls, f: DensityGrid, floor: float = 1e-300) -> "LogFactor":
        return cls(lo=f.lo[0], hi=f.hi[0], values=np.log(np.maximum(f.values, floor)))

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / self.values.size

    @property
    def centers(self) -> np.ndarray:
        return self.lo + (np.arange(self.values.size) + 0.5) * self.spacing


class BLReport(BaseModel):
    lhs: float
    rhs: float
    ratio: float
    D: float
    tolerance: float
    holds: bool
    verdict: Verdict


class DualityChain(BaseModel):
    entropy: float
    pairings: list[float]
    log_partitions: list[float]
    lower_bound: float
    D: float
    log_partition: float
    identity_residual: float
    tolerance: float
    holds: bool


class EqualityCorrespondence(BaseModel):
    product_residual: float
    marginal_match: float
    D: float
    tolerance: float

    @property
    def is_extremal(self) -> bool:
        return self.product_residual <= self.tolerance and self.marginal_match <= self.tolerance
