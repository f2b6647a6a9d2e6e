# Instance (A, c) value types and the reports derived from them
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.config import Config as settings
from src.linops import Matrix, Subspace, Vector, rank_tol

Subset = tuple[int, ...]


class ColumnFamily(BaseModel):
    """n x m matrix whose columns a_j are the linear functionals x -> a_j.x.

    Columns must be nonzero but need not span; see SpanningFamily.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: Matrix

    @model_validator(mode="after")
    def check_columns(self):
        n, m = self.matrix.shape
        if n < 1 or m < 1:
            raise ValueError(f"family needs n >= 1 and m >= 1, got {n} x {m}")
        norms = np.linalg.norm(self.matrix, axis=0)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise ValueError(f"column(s) {zero.tolist()} are zero")
        return self

    @classmethod
    def from_columns(cls, columns):
        cols = [np.asarray(col, dtype=np.float64).reshape(-1) for col in columns]
        return cls(matrix=np.column_stack(cols))

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def m(self) -> int:
        return int(self.matrix.shape[1])

    def column(self, j: int) -> np.ndarray:
        return self.matrix[:, j]

    def sub(self, indices) -> np.ndarray:
        return self.matrix[:, list(indices)]

    def transformed(self, T) -> "ColumnFamily":
        return type(self)(matrix=np.asarray(T, dtype=np.float64) @ self.matrix)

    def scaled(self, factors) -> "ColumnFamily":
        return type(self)(matrix=self.matrix * np.asarray(factors, dtype=np.float64)[None, :])

    def permuted(self, order) -> "ColumnFamily":
        return type(self)(matrix=self.matrix[:, list(order)])

    def is_unit(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(np.linalg.norm(self.matrix, axis=0) - 1.0) <= tol))


class SpanningFamily(ColumnFamily):
    """Column family whose columns span R^n."""

    @model_validator(mode="after")
    def check_spanning(self):
        r = rank_tol(self.matrix, settings.RANK_TOL)
        if r != self.n:
            raise ValueError(f"columns span a {r}-dimensional space, need {self.n}")
        return self


class WeightVector(BaseModel):
    """Exponents c_j in [0, 1]."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: Vector

    @model_validator(mode="after")
    def check_range(self):
        if self.values.size == 0:
            raise ValueError("weight vector is empty")
        if np.any(self.values < 0.0) or np.any(self.values > 1.0 + 1e-12):
            raise ValueError(f"weights must lie in [0, 1], got {self.values.tolist()}")
        return self

    @classmethod
    def of(cls, *values: float) -> "WeightVector":
        return cls(values=np.array(values, dtype=np.float64))

    @property
    def m(self) -> int:
        return int(self.values.size)

    @property
    def total(self) -> float:
        return float(np.sum(self.values))

    def sub(self, indices) -> "WeightVector":
        return WeightVector(values=self.values[list(indices)])

    def permuted(self, order) -> "WeightVector":
        return WeightVector(values=self.values[list(order)])


class SubsetRecord(BaseModel):
    subset: Subset
    weight: float
    dim: int


class FeasibilityReport(BaseModel):
    n: int
    m: int
    sum_c: float
    tol: float
    scaling_ok: bool
    in_KA: bool
    in_interior: bool
    violations: list[SubsetRecord] = Field(default_factory=list)
    critical: list[Subset] = Field(default_factory=list)

    @property
    def first_violation(self) -> Optional[SubsetRecord]:
        return self.violations[0] if self.violations else None


class SplitInstance(BaseModel):
    """The two sub-problems obtained by peeling a critical subset J."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    subset: Subset
    inner: SpanningFamily
    inner_weights: WeightVector
    inner_indices: Subset
    inner_space: Subspace
    outer: SpanningFamily
    outer_weights: WeightVector
    outer_indices: Subset
    outer_space: Subspace


class ReducibilityStatus(str, Enum):
    TOTALLY_REDUCIBLE = "totally_reducible"
    NOT_TOTALLY_REDUCIBLE = "not_totally_reducible"


class ReducibleBlock(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    indices: Subset
    space: Subspace

    @property
    def dim(self) -> int:
        return self.space.dim


class ReducibilityReport(BaseModel):
    status: ReducibilityStatus
    zero_block: Subset = ()
    blocks: list[ReducibleBlock] = Field(default_factory=list)
    certificate: Optional[Subset] = None
    order_mattered: bool = False

    @property
    def totally_reducible(self) -> bool:
        return self.status == ReducibilityStatus.TOTALLY_REDUCIBLE
