# Entropy, Fisher information, marginals and heat flow on grid densities
import math
from math import fsum
from typing import Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.ndimage import convolve1d
from scipy.special import xlogy
from scipy.stats import multivariate_normal

from src.config import Config as settings
from src.errors import AccuracyError, InputError, PreconditionError
from src.entropy.schemas import DensityGrid, FisherCheck, GridSpec, HeatScan, HeatScanRecord, MarginalGrid
from src.family import ColumnFamily, WeightVector
from src.gaussopt import GaussianSpec
from src.linops import logdet_pd
from src.logger import setup_logger
from src.logging_util import log_operation

logger = setup_logger(__name__)


def ensure_mass(f: DensityGrid, tol: Optional[float] = None) -> None:
    tol = settings.MASS_TOL if tol is None else tol
    if abs(f.mass - 1.0) > tol:
        raise InputError(f"density has mass {f.mass:.9g}, expected 1 within {tol:g}")


def boundary_mass(f: DensityGrid) -> float:
    """Mass carried by the outermost layer of cells."""
    mask = np.zeros(f.values.shape, dtype=bool)
    for axis in range(f.dim):
        index = [slice(None)] * f.dim
        index[axis] = 0
        mask[tuple(index)] = True
        index[axis] = -1
        mask[tuple(index)] = True
    return float(f.values[mask].sum() * f.cell_volume)


def ensure_support(f: DensityGrid, tol: Optional[float] = None) -> None:
    tol = settings.SUPPORT_TOL if tol is None else tol
    edge = boundary_mass(f)
    if edge > tol:
        raise AccuracyError(f"density reaches the box boundary (edge mass {edge:.3e}); enlarge the box")


def gaussian_entropy(Sigma) -> float:
    """S(G) = -1/2 ln((2 pi e)^n det Sigma) under the f ln f convention."""
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=np.float64))
    n = Sigma.shape[0]
    return -0.5 * (n * math.log(2.0 * math.pi * math.e) + logdet_pd(Sigma))


def gaussian_density(grid: GridSpec, Sigma, mean=None) -> DensityGrid:
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=np.float64))
    mean = np.zeros(grid.dim) if mean is None else np.asarray(mean, dtype=np.float64)
    law = multivariate_normal(mean=mean, cov=Sigma)
    return DensityGrid.from_function(grid, lambda pts: law.pdf(pts))


@log_operation("entropy")
def entropy(f: DensityGrid) -> float:
    """Riemann sum of f ln f with 0 ln 0 = 0; f must vanish near the box boundary."""
    ensure_mass(f)
    ensure_support(f)
    return float(np.sum(xlogy(f.values, f.values)) * f.cell_volume)


@log_operation("marginal")
def marginal(f: DensityGrid, a, resolution: Optional[float] = None) -> MarginalGrid:
    """Pushforward of f under x -> a.x.

    Each cell mass is split linearly between the two nearest bin centres, so the
    total mass is preserved exactly.
    """
    ensure_mass(f)
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if a.size != f.dim:
        raise InputError(f"direction has {a.size} entries, density lives in R^{f.dim}")
    if not np.any(a):
        raise InputError("marginal along the zero direction")

    width = max(max(h * abs(ai) for h, ai in zip(f.spacing, a)), resolution or 0.0)
    t = f.points() @ a
    mass = f.values.reshape(-1) * f.cell_volume
    t0 = float(t.min()) - 1.5 * width
    pos = (t - t0) / width - 0.5
    k = np.floor(pos).astype(np.int64)
    frac = pos - k
    nbins = int(k.max()) + 3
    hist = np.bincount(k, weights=mass * (1.0 - frac), minlength=nbins) \
        + np.bincount(k + 1, weights=mass * frac, minlength=nbins)
    hist = hist[:nbins]
    density = DensityGrid(lo=(t0,), hi=(t0 + nbins * width,), values=hist / width)
    return MarginalGrid(density=density, direction=a)


@log_operation("fisher")
def fisher(f: DensityGrid) -> float:
    """Riemann sum of |grad f|^2 / f with central differences; cells below the floor are skipped."""
    ensure_mass(f)
    floor = settings.FISHER_FLOOR
    grads = np.gradient(f.values, *f.spacing)
    if f.dim == 1:
        grads = [grads]
    squared = sum(g * g for g in grads)
    positive = f.values > floor
    _warn_interior_zeros(positive)
    return float(np.sum(squared[positive] / f.values[positive]) * f.cell_volume)


def _warn_interior_zeros(positive: np.ndarray) -> None:
    interior = np.zeros(positive.shape, dtype=bool)
    for axis in range(positive.ndim):
        before = np.maximum.accumulate(positive, axis=axis)
        after = np.flip(np.maximum.accumulate(np.flip(positive, axis=axis), axis=axis), axis=axis)
        interior |= ~positive & before & after
    count = int(interior.sum())
    if count > 1:
        logger.warning(f"density vanishes on {count} interior cells; Fisher information taken on the positive region")


@log_operation("heat_step")
def heat_step(f: DensityGrid, tau: float) -> DensityGrid:
    """e^{tau Laplacian} f: separable Gaussian convolution with variance 2 tau per axis."""
    if not tau > 0.0:
        raise InputError(f"heat flow time must be positive, got {tau}")
    sigma = math.sqrt(2.0 * tau)
    out = np.array(f.values, dtype=np.float64)
    for axis, (h, count) in enumerate(zip(f.spacing, f.counts)):
        half = int(math.ceil(settings.HEAT_SIGMAS * sigma / h))
        if half >= count:
            raise InputError(
                f"heat kernel ({settings.HEAT_SIGMAS:g} sigma = {settings.HEAT_SIGMAS * sigma:.3g}) "
                f"is wider than the box along axis {axis}; use a larger box"
            )
        offsets = np.arange(-half, half + 1) * h
        kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
        kernel /= kernel.sum()
        out = convolve1d(out, kernel, axis=axis, mode="constant", cval=0.0)
    lost = f.values.sum() * f.cell_volume - out.sum() * f.cell_volume
    if lost > 1e-9:
        raise InputError(f"heat flow pushed mass {lost:.3e} outside the box; use a larger box")
    return f.with_values(out)


def _check_instance(f: DensityGrid, A: ColumnFamily, c: WeightVector) -> None:
    if A.n != f.dim:
        raise InputError(f"family lives in R^{A.n} but the density in R^{f.dim}")
    if A.m != c.m:
        raise InputError(f"family has {A.m} columns but {c.m} weights were given")


@log_operation("subadditivity_gap")
def subadditivity_gap(f: DensityGrid, A: ColumnFamily, c: WeightVector) -> float:
    """sum_j c_j S(f_(a_j)) - S(f)."""
    _check_instance(f, A, c)
    if abs(c.total - A.n) > settings.EQ_TOL:
        raise PreconditionError(f"subadditivity gap needs sum c = n, got {c.total:.12g}")
    marginals = fsum(
        float(c.values[j]) * entropy(marginal(f, A.column(j)).density)
        for j in range(A.m) if c.values[j] > 0.0
    )
    return marginals - entropy(f)


def check_frame(U: ColumnFamily, c: WeightVector, tol: float = 1e-9) -> None:
    """Unit vectors with sum_j c_j u_j u_j^t = Id."""
    if U.m != c.m:
        raise InputError(f"frame has {U.m} vectors but {c.m} weights were given")
    if not U.is_unit(tol):
        raise PreconditionError("frame vectors must have unit length")
    S = (U.matrix * c.values[None, :]) @ U.matrix.T
    if np.max(np.abs(S - np.eye(U.n))) > tol:
        raise PreconditionError("sum_j c_j u_j u_j^t is not the identity")


def fisher_superadditivity_check(source: Union[GaussianSpec, DensityGrid], U: ColumnFamily, c: WeightVector,
                                 tol: Optional[float] = None) -> FisherCheck:
    """sum_j c_j I(u_j.X) <= I(X) under the frame condition."""
    check_frame(U, c)
    if isinstance(source, GaussianSpec):
        tol = 1e-12 if tol is None else tol
        Sigma = source.covariance
        q = np.einsum("ij,ik,kj->j", U.matrix, Sigma, U.matrix)
        lhs = fsum(float(cj) / float(qj) for cj, qj in zip(c.values, q))
        rhs = float(np.trace(np.linalg.inv(Sigma)))
    else:
        tol = settings.FISHER_GRID_TOL if tol is None else tol
        _check_instance(source, U, c)
        lhs = fsum(
            float(c.values[j]) * fisher(marginal(source, U.column(j)).density)
            for j in range(U.m) if c.values[j] > 0.0
        )
        rhs = fisher(source)
    return FisherCheck(lhs=lhs, rhs=rhs, tolerance=tol, holds=lhs <= rhs + tol, slack=rhs - lhs)


@log_operation("heat_monotonicity_scan")
def heat_monotonicity_scan(f: DensityGrid, U: ColumnFamily, c: WeightVector,
                           times: Optional[Sequence[float]] = None, tol: Optional[float] = None) -> HeatScan:
    """Information gap along the heat flow and the integrated flow identity.

    d/dt gap(t) = info_gap(t), so the trapezoid integral of info_gap matches
    gap(T) - gap(t_0).
    """
    check_frame(U, c)
    if f.dim != 2:
        raise PreconditionError(f"heat monotonicity scan runs on planar densities, got dim {f.dim}")
    tol = settings.FISHER_GRID_TOL if tol is None else tol
    times = sorted(settings.heat_times if times is None else times)
    if not times or times[0] < 0:
        raise InputError("scan times must be non-negative")

    records = []
    for t in times:
        flowed = f if t == 0 else heat_step(f, t)
        info = fisher(flowed) - fsum(
            float(c.values[j]) * fisher(marginal(flowed, U.column(j)).density) for j in range(U.m)
        )
        gap = subadditivity_gap(flowed, U, c)
        records.append(HeatScanRecord(t=float(t), info_gap=info, gap=gap))
        logger.debug(f"heat scan t={t:g}: info_gap={info:.6g} gap={gap:.6g}")

    integral, gap_change, residual = heat_gap_identity(records)
    return HeatScan(
        records=records,
        integral=integral,
        gap_change=gap_change,
        identity_residual=residual,
        tolerance=tol,
        nonnegative=all(r.info_gap >= -tol for r in records),
    )


def heat_gap_identity(records: Sequence[HeatScanRecord]) -> tuple[float, float, float]:
    """Trapezoid integral of info_gap, the gap change over the same window, and their difference."""
    if not records:
        raise InputError("heat gap identity needs at least one scan record")
    if len(records) == 1:
        return 0.0, 0.0, 0.0
    integral = float(trapezoid([r.info_gap for r in records], [r.t for r in records]))
    gap_change = records[-1].gap - records[0].gap
    return integral, gap_change, abs(integral - gap_change)
