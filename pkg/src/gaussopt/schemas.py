# Optimizer, constant, frame and extremizer reports
import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.config import Config as settings
from src.family import FeasibilityReport, ReducibilityReport, Subset
from src.linops import Matrix, Subspace, Vector


class GaussianSpec(BaseModel):
    """Centered Gaussian on R^n given by its covariance."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    covariance: Matrix

    @model_validator(mode="after")
    def check_spd(self):
        S = self.covariance
        if S.shape[0] != S.shape[1]:
            raise ValueError(f"covariance must be square, got {S.shape}")
        scale = max(1.0, float(np.max(np.abs(S))))
        if np.max(np.abs(S - S.T)) > 1e-12 * scale:
            raise ValueError("covariance is not symmetric")
        if np.linalg.eigvalsh(0.5 * (S + S.T))[0] <= 0.0:
            raise ValueError("covariance is not positive definite")
        return self

    @classmethod
    def isotropic(cls, n: int, variance: float = 1.0) -> "GaussianSpec":
        return cls(covariance=variance * np.eye(n))

    @property
    def n(self) -> int:
        return int(self.covariance.shape[0])


class OptimizerOptions(BaseModel):
    max_iter: int = Field(default_factory=lambda: settings.NEWTON_MAX_ITER)
    grad_tol: float = Field(default_factory=lambda: settings.NEWTON_GRAD_TOL)
    recession_bound: float = Field(default_factory=lambda: settings.RECESSION_BOUND)
    tol: float = Field(default_factory=lambda: settings.EQ_TOL)


class ScalingPoint(BaseModel):
    """t_j = ln s_j^2 for the columns listed in indices (zero weights excluded)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: Vector
    indices: Subset


class GaussOptResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    t_star: ScalingPoint
    value: float
    grad_norm: float
    attained: bool
    converged: bool
    iterations: int
    recession: Optional[Vector] = None
    recession_subset: Optional[Subset] = None
    history: list[float] = Field(default_factory=list)


class AlternativeSplit(BaseModel):
    subset: Subset
    D: float


class SplitNode(BaseModel):
    """Node of the splitting tree; labels are original column indices."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    labels: Subset
    dim: int
    kind: Literal["line", "interior", "split"]
    D: float
    critical: Optional[Subset] = None
    children: list["SplitNode"] = Field(default_factory=list)
    optimizer: Optional[GaussOptResult] = None
    alternatives: list[AlternativeSplit] = Field(default_factory=list)

    def leaves(self) -> list["SplitNode"]:
        if not self.children:
            return [self]
        return [leaf for child in self.children for leaf in child.leaves()]


SplitNode.model_rebuild()


class ConstantReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    D: float
    feasibility: FeasibilityReport
    tree: Optional[SplitNode] = None
    attained: bool = False
    reducibility: Optional[ReducibilityReport] = None

    @property
    def finite(self) -> bool:
        return math.isfinite(self.D)

    @property
    def exp_D(self) -> float:
        return math.exp(self.D) if self.finite else math.inf


class FrameMatrix(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    R: Matrix
    residual: float
    trace_R2: float
    unit_frame: Matrix


class ExtremizerBlock(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    indices: Subset
    dim: int
    free: bool
    covariance: Optional[Matrix] = None


class ExtremizerDescription(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    exists: bool
    zero_block: Subset = ()
    blocks: list[ExtremizerBlock] = Field(default_factory=list)
    transform: Optional[Matrix] = None
    gaussian_covariance: Optional[Matrix] = None
    certificate: Optional[Subset] = None

    @property
    def all_free(self) -> bool:
        return self.exists and all(block.free for block in self.blocks)


class HadamardCheck(BaseModel):
    """lhs and rhs are inf when they overflow; the verdict uses the logs."""
    lhs: float
    rhs: float
    log_lhs: float
    log_rhs: float
    holds: bool
    slack: float


class DivergenceWitness(BaseModel):
    """Gaussian family X_lambda along which the entropy gap grows without bound.

    The gap behaves like rate * ln(lambda) as lambda tends to ``limit``.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: Literal["span", "scaling", "subset"]
    subset: Optional[Subset] = None
    closure: Optional[Subset] = None
    space: Optional[Subspace] = None
    limit: Literal["infinity", "zero"]
    predicted_rate: float
    fitted_rate: float
    lambdas: tuple[float, float]
    gaps: tuple[float, float]
    validated: bool


class BoundaryJump(BaseModel):
    D_boundary: float
    interior_point: Vector
    epsilons: list[float]
    D_inside: list[float]

    model_config = ConfigDict(arbitrary_types_allowed=True)
