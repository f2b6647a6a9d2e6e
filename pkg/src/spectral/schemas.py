# Potentials on node grids and ground states of -4 Laplacian - V
from typing import Annotated, Callable, Optional

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

from src.entropy import DensityGrid
from src.verdict import Verdict


def as_node_values(value) -> np.ndarray:
    arr = np.array(value, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise ValueError(f"potentials are 1- or 2-dimensional, got {arr.ndim}")
    if min(arr.shape) < 3:
        raise ValueError("each axis needs at least 3 nodes")
    if not np.all(np.isfinite(arr)):
        raise ValueError("potential values must be finite")
    arr.setflags(write=False)
    return arr


NodeValues = Annotated[np.ndarray, BeforeValidator(as_node_values)]


class Potential(BaseModel):
    """V sampled at nodes linspace(lo_i, hi_i, count_i); Dirichlet walls sit one spacing outside."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    values: NodeValues

    @model_validator(mode="after")
    def check_box(self):
        if len(self.lo) != self.values.ndim or len(self.hi) != self.values.ndim:
            raise ValueError("box dimension does not match the value array")
        for lo, hi in zip(self.lo, self.hi):
            if not hi > lo:
                raise ValueError(f"empty axis [{lo}, {hi}]")
        return self

    @classmethod
    def from_function(cls, lo, hi, counts, fn: Callable[..., np.ndarray]) -> "Potential":
        """fn receives one coordinate array per axis (ij-indexed mesh)."""
        lo, hi, counts = tuple(lo), tuple(hi), tuple(counts)
        axes = [np.linspace(a, b, k) for a, b, k in zip(lo, hi, counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        values = np.broadcast_to(np.asarray(fn(*mesh), dtype=np.float64), tuple(counts))
        return cls(lo=lo, hi=hi, values=values)

    @property
    def dim(self) -> int:
        return int(self.values.ndim)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(int(k) for k in self.values.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (k - 1) for lo, hi, k in zip(self.lo, self.hi, self.counts))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def nodes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, k) for lo, hi, k in zip(self.lo, self.hi, self.counts)]

    def scaled(self, s: float) -> "Potential":
        return Potential(lo=self.lo, hi=self.hi, values=self.values * s)

    def shifted(self, s: float) -> "Potential":
        return Potential(lo=self.lo, hi=self.hi, values=self.values + s)

    def resampled(self, spacing: float) -> "Potential":
        """Linear resampling of a 1-dim potential onto nodes lo + k*spacing inside [lo, hi]."""
        if self.dim != 1:
            raise ValueError("only 1-dim potentials are resampled")
        count = int(np.floor((self.hi[0] - self.lo[0]) / spacing + 1e-9)) + 1
        nodes = self.lo[0] + spacing * np.arange(count)
        values = np.interp(nodes, self.nodes()[0], self.values)
        return Potential(lo=self.lo, hi=(float(nodes[-1]),), values=values)


class GroundState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    lam: float
    eigenfunction: np.ndarray
    potential: Potential
    residual: float = 0.0
    iterations: int = 0
    boundary_amplitude: float = 0.0

    def density(self) -> DensityGrid:
        """phi^2 on cells centred at the potential's nodes."""
        h = self.potential.spacing
        lo = tuple(a - 0.5 * s for a, s in zip(self.potential.lo, h))
        hi = tuple(b + 0.5 * s for b, s in zip(self.potential.hi, h))
        rho = self.eigenfunction ** 2
        return DensityGrid(lo=lo, hi=hi, values=rho / (rho.sum() * self.potential.cell_volume))


class EigenCheck(BaseModel):
    lhs: float
    rhs_terms: list[float] = Field(default_factory=list)
    rhs: float
    tolerance: float
    holds: bool
    margin: float
    verdict: Verdict


class LegendreFisherCheck(BaseModel):
    pairing: float
    lam: float
    fisher: float
    bound: float
    tolerance: float
    holds: bool
    verdict: Verdict


class BoxRefinementRecord(BaseModel):
    half_width: float
    lam: float
    boundary_amplitude: float
    nodes: int
    note: Optional[str] = None
