import math
from pathlib import Path
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.family import SpanningFamily, WeightVector
from src.linops import Matrix, Vector
from src.verdict import Verdict

REPORT_SCHEMA = "blentropy.report.v1"
WHICH_CHOICES = ("entropy", "bl", "fisher", "eigen")


class Instance(BaseModel):
    """Parsed instance file; columns holds a_j as the columns of an n x m matrix."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    columns: Matrix
    weights: Vector
    files: dict[str, Path] = Field(default_factory=dict)
    tolerances: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_instance(self):
        if self.columns.shape[1] != self.weights.size:
            raise ValueError(f"{self.columns.shape[1]} columns but {self.weights.size} weights")
        SpanningFamily(matrix=self.columns)
        WeightVector(values=self.weights)
        return self

    @property
    def n(self) -> int:
        return int(self.columns.shape[0])

    @property
    def m(self) -> int:
        return int(self.columns.shape[1])

    def family(self) -> SpanningFamily:
        return SpanningFamily(matrix=self.columns)

    def weight_vector(self) -> WeightVector:
        return WeightVector(values=self.weights)

    def indexed_files(self, prefix: str) -> Optional[list[Path]]:
        """factor0..factor{m-1} style references; None unless all m are present."""
        paths = [self.files.get(f"{prefix}{j}") for j in range(self.m)]
        if all(p is None for p in paths):
            return None
        missing = [j for j, p in enumerate(paths) if p is None]
        if missing:
            raise ValueError(f"instance {self.name} lists {prefix} files but misses indices {missing}")
        return paths


class ReportEntry(BaseModel):
    key: str
    value: Any = None
    indent: int = 0


class ReportSection(BaseModel):
    title: str
    entries: list[ReportEntry] = Field(default_factory=list)

    def add(self, key: str, value: Any = None, indent: int = 0) -> "ReportSection":
        self.entries.append(ReportEntry(key=key, value=value, indent=indent))
        return self


class VerificationBlock(BaseModel):
    name: str
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    tolerance: Optional[float] = None
    verdict: Optional[Verdict] = None
    details: dict[str, Any] = Field(default_factory=dict)
    note: Optional[str] = None
    error: Optional[str] = None
    exit_code: int = 0

    @property
    def evaluated(self) -> bool:
        return self.verdict is not None

    @property
    def margin(self) -> Optional[float]:
        if not self.evaluated or self.lhs is None or self.rhs is None:
            return None
        return self.rhs - self.lhs


class Report(BaseModel):
    schema_tag: str = REPORT_SCHEMA
    instance: str
    timestamp: Optional[str] = None
    sections: list[ReportSection] = Field(default_factory=list)
    blocks: list[VerificationBlock] = Field(default_factory=list)
    exit_code: int = 0

    def section(self, title: str) -> ReportSection:
        section = ReportSection(title=title)
        self.sections.append(section)
        return section


def format_D(D: float) -> str:
    if math.isinf(D):
        return "inf"
    text = f"{D:.6f}"
    return "0.000000" if text == "-0.000000" else text


class SummaryRow(BaseModel):
    name: str
    feasible: Optional[bool] = None
    D: Optional[float] = None
    attained: Optional[bool] = None
    worst_margin: Optional[float] = None
    error: Optional[str] = None

    @property
    def line(self) -> str:
        if self.error is not None:
            return f"{self.name:<24} {self.error}"
        feasible = "yes" if self.feasible else "no"
        attained = "yes" if self.attained else "no"
        margin = "-" if self.worst_margin is None else f"{self.worst_margin:.3e}"
        return f"{self.name:<24} {feasible:<10} {format_D(self.D):>14} {attained:<9} {margin}"


def matrix_rows(M: np.ndarray) -> list[str]:
    rounded = np.round(np.asarray(M, dtype=np.float64), 9) + 0.0
    return [" ".join(f"{x: .9f}" for x in row) for row in rounded]
