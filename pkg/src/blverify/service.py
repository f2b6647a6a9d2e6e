# Brascamp-Lieb inequality, duality density and equality correspondence on grids
import math
from math import fsum
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from src.blverify.schemas import BLReport, DualityChain, EqualityCorrespondence, FactorSet, LogFactor
from src.config import Config as settings
from src.entropy import DensityGrid, GridSpec, boundary_mass, ensure_support, entropy, marginal
from src.errors import AccuracyError, InfeasibleError, InputError
from src.family import ColumnFamily, SpanningFamily, WeightVector
from src.gaussopt import constant
from src.logger import setup_logger
from src.logging_util import log_operation
from src.verdict import judge

logger = setup_logger(__name__)

# share of the quadrature carried by the outer cell layer above which the box is too small
_EDGE_SHARE = 1e-4


def _centers(f: DensityGrid) -> np.ndarray:
    return f.axes()[0]


def _evaluate(f: DensityGrid, t: np.ndarray) -> np.ndarray:
    return np.interp(t, _centers(f), f.values, left=0.0, right=0.0)


def _grid_for(n: int, grid: Optional[GridSpec]) -> GridSpec:
    if n > 3:
        raise InputError(f"grid quadrature runs in dimension at most 3, got {n}")
    grid = GridSpec.symmetric(n) if grid is None else grid
    if grid.dim != n:
        raise InputError(f"grid is {grid.dim}-dimensional, family lives in R^{n}")
    return grid


def _finite_constant(A: SpanningFamily, c: WeightVector, D: Optional[float]) -> float:
    if D is not None:
        return D
    report = constant(A, c)
    if not report.finite:
        raise InfeasibleError("Brascamp-Lieb constant is infinite for this instance",
                              violation=report.feasibility.first_violation)
    return report.D


@log_operation("bl_lhs")
def bl_lhs(A: ColumnFamily, factors: FactorSet, grid: Optional[GridSpec] = None) -> float:
    """Riemann sum of prod_j f_j(a_j.x) over the grid, factors linearly interpolated."""
    if factors.m != A.m:
        raise InputError(f"family has {A.m} columns but {factors.m} factors were given")
    grid = _grid_for(A.n, grid)
    pts = grid.points()
    integrand = np.ones(pts.shape[0])
    for j, f in enumerate(factors.factors):
        integrand *= _evaluate(f, pts @ A.column(j))
    values = integrand.reshape(grid.counts)
    total = float(values.sum() * grid.cell_volume)
    if total == 0.0:
        return 0.0
    edge = boundary_mass(DensityGrid.on(grid, values))
    if edge > _EDGE_SHARE * total:
        raise AccuracyError(f"integrand carries {edge / total:.2e} of its mass on the box boundary; enlarge the box")
    return total


def log_norm(f: DensityGrid, c: float) -> float:
    """ln ||f||_{1/c} on the factor grid, with ||f||_inf for c = 0."""
    positive = f.values[f.values > 0.0]
    if positive.size == 0:
        return -math.inf
    if c == 0.0:
        return float(np.log(positive.max()))
    h = f.spacing[0]
    return c * (float(logsumexp(np.log(positive) / c)) + math.log(h))


@log_operation("bl_check")
def bl_check(A: SpanningFamily, c: WeightVector, factors: FactorSet, grid: Optional[GridSpec] = None,
             tol: Optional[float] = None, D: Optional[float] = None) -> BLReport:
    """lhs = int prod f_j(a_j.x) against rhs = e^D prod ||f_j||_{1/c_j}."""
    if c.m != A.m:
        raise InputError(f"family has {A.m} columns but {c.m} weights were given")
    tol = settings.BL_TOL if tol is None else tol
    D = _finite_constant(A, c, D)
    lhs = bl_lhs(A, factors, grid)
    log_rhs = D + fsum(log_norm(f, float(cj)) for f, cj in zip(factors.factors, c.values))
    rhs = math.exp(log_rhs) if math.isfinite(log_rhs) else 0.0
    ratio = lhs / rhs if rhs > 0.0 else 0.0
    verdict = judge(ratio, 1.0, tol)
    logger.info(f"BL check: lhs={lhs:.6g} rhs={rhs:.6g} ratio={ratio:.6f} ({verdict.value})")
    return BLReport(lhs=lhs, rhs=rhs, ratio=ratio, D=D, tolerance=tol, holds=ratio <= 1.0 + tol, verdict=verdict)


def _log_potential(A: ColumnFamily, c: WeightVector, log_factors: list[LogFactor], pts: np.ndarray) -> np.ndarray:
    """phi(x) = sum_j c_j phi_j(a_j.x); -inf where some projection leaves its sampled range."""
    if len(log_factors) != A.m:
        raise InputError(f"family has {A.m} columns but {len(log_factors)} log factors were given")
    phi = np.zeros(pts.shape[0])
    for j, lf in enumerate(log_factors):
        t = pts @ A.column(j)
        centers = lf.centers
        inside = (t >= centers[0]) & (t <= centers[-1])
        phi = np.where(inside, phi, -np.inf)
        if c.values[j] > 0.0:
            phi = phi + float(c.values[j]) * np.interp(t, centers, lf.values)
    return phi


@log_operation("duality_density")
def duality_density(A: ColumnFamily, c: WeightVector, log_factors: list[LogFactor],
                    grid: Optional[GridSpec] = None) -> DensityGrid:
    """Normalized e^{phi} with phi(x) = sum_j c_j phi_j(a_j.x)."""
    grid = _grid_for(A.n, grid)
    phi = _log_potential(A, c, log_factors, grid.points())
    if not np.any(np.isfinite(phi)):
        raise AccuracyError("e^phi vanishes on the whole grid")
    weights = np.exp(phi - np.max(phi[np.isfinite(phi)]))
    f = DensityGrid.on(grid, weights / (weights.sum() * grid.cell_volume))
    try:
        ensure_support(f)
    except AccuracyError as e:
        raise AccuracyError(f"e^phi is not integrable on the box: {e.detail}")
    return f


def _pairing(f: DensityGrid, lf: LogFactor) -> float:
    """<f, phi> for a one-dimensional density; phi held constant beyond its sampled range."""
    t = _centers(f)
    return float(np.sum(f.values * np.interp(t, lf.centers, lf.values)) * f.spacing[0])


def _log_integral(lf: LogFactor) -> float:
    return float(logsumexp(lf.values)) + math.log(lf.spacing)


@log_operation("duality_chain")
def duality_chain(A: SpanningFamily, c: WeightVector, log_factors: list[LogFactor], grid: Optional[GridSpec] = None,
                  tol: Optional[float] = None, D: Optional[float] = None) -> DualityChain:
    """S(f) >= sum_j c_j(<f_(a_j), phi_j> - ln int e^{phi_j}) - D for the duality density f.

    Also records ln int e^phi = sum_j c_j <f_(a_j), phi_j> - S(f), which holds exactly for this f.
    """
    tol = settings.ENTROPY_SLACK if tol is None else tol
    D = _finite_constant(A, c, D)
    grid = _grid_for(A.n, grid)
    f = duality_density(A, c, log_factors, grid)
    S = entropy(f)

    pairings, log_partitions = [], []
    for j, lf in enumerate(log_factors):
        pairings.append(_pairing(marginal(f, A.column(j)).density, lf))
        log_partitions.append(_log_integral(lf))
    weighted = fsum(float(cj) * p for cj, p in zip(c.values, pairings))
    lower = weighted - fsum(float(cj) * z for cj, z in zip(c.values, log_partitions)) - D

    phi = _log_potential(A, c, log_factors, grid.points())
    log_Z = float(logsumexp(phi[np.isfinite(phi)])) + math.log(grid.cell_volume)
    residual = abs(log_Z - (weighted - S))
    return DualityChain(
        entropy=S,
        pairings=pairings,
        log_partitions=log_partitions,
        lower_bound=lower,
        D=D,
        log_partition=log_Z,
        identity_residual=residual,
        tolerance=tol,
        holds=S >= lower - tol,
    )


def extremal_factors(A: ColumnFamily, c: WeightVector, f: DensityGrid) -> FactorSet:
    """Factors f_j = (f_(a_j))^{c_j} read off the marginals of f."""
    if c.m != A.m:
        raise InputError(f"family has {A.m} columns but {c.m} weights were given")
    factors = []
    for j in range(A.m):
        g = marginal(f, A.column(j)).density
        values = np.where(g.values > 0.0, np.power(g.values, float(c.values[j])), 0.0)
        factors.append(g.with_values(values))
    return FactorSet(factors=factors)


def _marginal_product(A: ColumnFamily, c: WeightVector, marginals: list[DensityGrid], pts: np.ndarray,
                      D: float) -> np.ndarray:
    log_prod = np.full(pts.shape[0], -D)
    for j, g in enumerate(marginals):
        cj = float(c.values[j])
        val = _evaluate(g, pts @ A.column(j))
        if cj == 0.0:
            log_prod = np.where(val > 0.0, log_prod, -np.inf)
            continue
        with np.errstate(divide="ignore"):
            log_prod = log_prod + cj * np.log(val)
    return np.exp(log_prod)


@log_operation("equality_correspondence")
def equality_correspondence(A: SpanningFamily, c: WeightVector, f: DensityGrid, D: Optional[float] = None,
                            tol: float = 1e-2) -> EqualityCorrespondence:
    """How far f is from e^{-D} prod_j f_(a_j)(a_j.x)^{c_j}, and whether that product reproduces the marginals."""
    if f.dim != A.n:
        raise InputError(f"density is {f.dim}-dimensional, family lives in R^{A.n}")
    D = _finite_constant(A, c, D)
    pts = f.points()
    marginals = [marginal(f, A.column(j)).density for j in range(A.m)]
    product = _marginal_product(A, c, marginals, pts, D).reshape(f.counts)
    product_residual = float(np.max(np.abs(f.values - product)) / np.max(f.values))

    mass = product.sum() * f.cell_volume
    if mass <= 0.0:
        return EqualityCorrespondence(product_residual=product_residual, marginal_match=math.inf, D=D, tolerance=tol)
    rebuilt = f.with_values(product / mass)
    match = 0.0
    for j, g in enumerate(marginals):
        h = marginal(rebuilt, A.column(j)).density
        match = max(match, float(np.max(np.abs(h.values - g.values)) / np.max(g.values)))
    logger.debug(f"equality correspondence: product residual {product_residual:.3e}, marginal match {match:.3e}")
    return EqualityCorrespondence(product_residual=product_residual, marginal_match=match, D=D, tolerance=tol)
