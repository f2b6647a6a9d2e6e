# Linear-algebra value types shared across modules
from typing import Annotated

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator


def as_matrix(value) -> np.ndarray:
    """Coerce to a read-only finite float64 2-d array."""
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ValueError(f"not a numeric matrix: {e}")
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    arr.setflags(write=False)
    return arr


def as_vector(value) -> np.ndarray:
    """Coerce to a read-only finite float64 1-d array."""
    try:
        arr = np.array(value, dtype=np.float64).reshape(-1)
    except (TypeError, ValueError) as e:
        raise ValueError(f"not a numeric vector: {e}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite entries")
    arr.setflags(write=False)
    return arr


Matrix = Annotated[np.ndarray, BeforeValidator(as_matrix)]
Vector = Annotated[np.ndarray, BeforeValidator(as_vector)]


class Subspace(BaseModel):
    """Linear subspace of R^ambient_dim held by an orthonormal basis (columns)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ambient_dim: int = Field(ge=1)
    basis: Matrix

    @model_validator(mode="after")
    def check_orthonormal(self):
        if self.basis.shape[0] != self.ambient_dim:
            raise ValueError(
                f"basis has {self.basis.shape[0]} rows, ambient dimension is {self.ambient_dim}"
            )
        gram = self.basis.T @ self.basis
        if gram.size and np.max(np.abs(gram - np.eye(gram.shape[0]))) > 1e-12:
            raise ValueError("basis columns are not orthonormal")
        return self

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def coordinates(self, vectors: np.ndarray) -> np.ndarray:
        """Coordinates of ambient vectors (columns) in this basis."""
        return self.basis.T @ np.asarray(vectors, dtype=np.float64)
