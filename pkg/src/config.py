from contextlib import contextmanager
from typing import Optional

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Rank / equality tolerances (relative singular-value cut and subset sums)
    RANK_TOL: float = 1e-9
    EQ_TOL: float = 1e-9

    # Exhaustive enumeration envelopes
    SUBSET_MAX: int = 24
    BIPARTITION_MAX: int = 20

    # Newton optimizer for the log-det program
    NEWTON_MAX_ITER: int = 200
    NEWTON_GRAD_TOL: float = 1e-10
    RECESSION_BOUND: float = 60.0
    SPLIT_AGREE_TOL: float = 1e-8

    # Density grids (cell-centered on [-GRID_HALF_WIDTH, GRID_HALF_WIDTH]^n)
    GRID_1D: int = 2048
    GRID_2D: int = 256
    GRID_3D: int = 96
    GRID_HALF_WIDTH: float = 12.0
    MASS_TOL: float = 1e-6
    SUPPORT_TOL: float = 1e-8
    FISHER_FLOOR: float = 1e-300
    HEAT_SIGMAS: float = 8.0
    HEAT_TIMES: str = "0,0.05,0.1,0.2,0.4,0.8"

    # Verification tolerances
    ENTROPY_SLACK: float = 5e-3
    BL_TOL: float = 2e-3
    FISHER_GRID_TOL: float = 1e-2
    EIGEN_TOL: float = 1e-4

    # Ground-state solver
    EIGEN_BOX_HALF_WIDTH: float = 8.0
    INVERSE_ITER_MAX: int = 1000

    # Logging Configuration
    LOG_LEVEL: str = "WARNING"
    LOG_FILE: Optional[str] = None

    @field_validator('RANK_TOL', 'EQ_TOL', 'NEWTON_GRAD_TOL', 'SPLIT_AGREE_TOL',
                     'MASS_TOL', 'SUPPORT_TOL', 'ENTROPY_SLACK', 'BL_TOL',
                     'FISHER_GRID_TOL', 'EIGEN_TOL')
    @classmethod
    def validate_tolerance(cls, v):
        """Tolerances live strictly inside (0, 1)"""
        if not 0.0 < v < 1.0:
            raise ValueError(f"tolerance must lie in (0, 1), got {v}")
        return v

    @field_validator('GRID_1D', 'GRID_2D', 'GRID_3D')
    @classmethod
    def validate_grid(cls, v):
        if v < 8:
            raise ValueError(f"grid count must be at least 8, got {v}")
        return v

    @field_validator('LOG_LEVEL')
    @classmethod
    def validate_log_level(cls, v):
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {v}")
        return level

    @field_validator('HEAT_TIMES')
    @classmethod
    def validate_heat_times(cls, v):
        """Comma list of non-negative flow times"""
        try:
            times = [float(item) for item in v.split(",") if item.strip()]
        except ValueError:
            raise ValueError(f"HEAT_TIMES must be a comma separated list of numbers, got {v!r}")
        if not times or min(times) < 0:
            raise ValueError("HEAT_TIMES needs at least one non-negative time")
        return ",".join(repr(t) for t in sorted(set(times)))

    @property
    def heat_times(self) -> tuple[float, ...]:
        return tuple(float(t) for t in self.HEAT_TIMES.split(","))

    def grid_count(self, dim: int) -> int:
        return {1: self.GRID_1D, 2: self.GRID_2D, 3: self.GRID_3D}[dim]

    model_config = SettingsConfigDict(env_file=".env", extra="ignore")


Config = Settings()


@contextmanager
def overrides(**changes):
    """Temporarily replace fields of the shared Config; None values are ignored."""
    changes = {key: value for key, value in changes.items() if value is not None}
    checked = Settings(**{**Config.model_dump(), **changes})
    saved = {key: getattr(Config, key) for key in changes}
    for key in changes:
        setattr(Config, key, getattr(checked, key))
    try:
        yield Config
    finally:
        for key, value in saved.items():
            setattr(Config, key, value)
