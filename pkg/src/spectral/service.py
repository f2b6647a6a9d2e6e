# Finite-difference ground states and the eigenvalue subadditivity check
import math
from math import fsum
from typing import Callable, Iterable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import splu

from src.config import Config as settings
from src.entropy import DensityGrid, check_frame, fisher
from src.errors import AccuracyError, InputError, NumericError, PreconditionError
from src.family import ColumnFamily, WeightVector
from src.logger import setup_logger
from src.logging_util import log_operation
from src.spectral.schemas import BoxRefinementRecord, EigenCheck, GroundState, LegendreFisherCheck, Potential
from src.verdict import judge

logger = setup_logger(__name__)

# ground-state amplitude on the outer nodes relative to its maximum
BOUNDARY_AMPLITUDE = 1e-6


def harmonic_well(b: float, half_width: float, count: int) -> Potential:
    """V(t) = -b t^2 on [-half_width, half_width]; lambda(V) = -2 sqrt(b)."""
    return Potential.from_function((-half_width,), (half_width,), (count,), lambda t: -b * t * t)


def _boundary_amplitude(phi: np.ndarray) -> float:
    edge = 0.0
    for axis in range(phi.ndim):
        edge = max(edge, float(np.max(np.abs(np.take(phi, [0, -1], axis=axis)))))
    return edge / float(np.max(np.abs(phi)))


def _check_boundary(amplitude: float, strict: bool) -> None:
    if amplitude <= BOUNDARY_AMPLITUDE:
        return
    if strict:
        raise AccuracyError(
            f"ground state has boundary amplitude {amplitude:.2e} of its maximum; use a larger box"
        )
    logger.warning(
        f"ground state touches the Dirichlet walls (amplitude {amplitude:.2e}); "
        "the value carries the box gap and converges to lambda(V) from below as the box grows"
    )


def _normalize(phi: np.ndarray, volume: float) -> np.ndarray:
    phi = np.abs(phi)
    return phi / math.sqrt(float(np.sum(phi * phi)) * volume)


@log_operation("lambda_1d")
def lambda_1d(V: Potential, strict: bool = True) -> GroundState:
    """lambda(V) = -(lowest eigenvalue of the tridiagonal -4 d^2/dx^2 - V with Dirichlet walls)."""
    if V.dim != 1:
        raise InputError(f"lambda_1d needs a 1-dim potential, got dim {V.dim}")
    h = V.spacing[0]
    diag = 8.0 / (h * h) - V.values
    off = np.full(V.counts[0] - 1, -4.0 / (h * h))
    w, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    phi = _normalize(vecs[:, 0], h)
    amplitude = _boundary_amplitude(phi)
    _check_boundary(amplitude, strict)
    return GroundState(lam=-float(w[0]), eigenfunction=phi, potential=V, boundary_amplitude=amplitude)


def _second_difference(count: int, h: float) -> sp.csc_matrix:
    main = np.full(count, 2.0 / (h * h))
    side = np.full(count - 1, -1.0 / (h * h))
    return sp.diags([side, main, side], [-1, 0, 1], format="csc")


def hamiltonian(V: Potential) -> sp.csc_matrix:
    """Sparse -4 Laplacian - V with the 5-point stencil, row-major node order."""
    if V.dim != 2:
        raise InputError(f"hamiltonian is assembled for 2-dim potentials, got dim {V.dim}")
    (nx, ny), (hx, hy) = V.counts, V.spacing
    laplacian = sp.kron(_second_difference(nx, hx), sp.identity(ny)) + sp.kron(sp.identity(nx), _second_difference(ny, hy))
    return (4.0 * laplacian - sp.diags(V.values.reshape(-1))).tocsc()


def _gershgorin_lower(H: sp.csc_matrix) -> float:
    A = abs(H).tocsr()
    diag = H.diagonal()
    radius = np.asarray(A.sum(axis=1)).reshape(-1) - np.abs(diag)
    return float(np.min(diag - radius))


@log_operation("lambda_2d")
def lambda_2d(V: Potential, strict: bool = True, max_iter: Optional[int] = None) -> GroundState:
    """Inverse iteration with a fixed Gershgorin shift from the all-ones vector."""
    if V.dim != 2:
        raise InputError(f"lambda_2d needs a 2-dim potential, got dim {V.dim}")
    max_iter = settings.INVERSE_ITER_MAX if max_iter is None else max_iter
    H = hamiltonian(V)
    size = H.shape[0]
    sigma = _gershgorin_lower(H)
    try:
        lu = splu((H - sigma * sp.identity(size, format="csc")).tocsc())
    except RuntimeError:
        sigma -= 1e-3 * max(1.0, abs(sigma))
        lu = splu((H - sigma * sp.identity(size, format="csc")).tocsc())

    phi = np.ones(size) / math.sqrt(size)
    mu = float(phi @ (H @ phi))
    history = []
    for iteration in range(1, max_iter + 1):
        y = lu.solve(phi)
        phi = y / np.linalg.norm(y)
        Hphi = H @ phi
        mu_next = float(phi @ Hphi)
        residual = float(np.linalg.norm(Hphi - mu_next * phi))
        history.append(residual)
        settled = abs(mu_next - mu) <= 1e-8 * max(1.0, abs(mu_next))
        mu = mu_next
        if settled and residual <= 1e-6:
            break
    else:
        raise NumericError(
            f"inverse iteration did not settle in {max_iter} steps (residual {history[-1]:.3e})",
            history=history,
        )

    values = _normalize(phi.reshape(V.counts), V.cell_volume)
    amplitude = _boundary_amplitude(values)
    _check_boundary(amplitude, strict)
    logger.debug(f"lambda_2d: shift {sigma:.6g}, {iteration} iterations, residual {residual:.2e}")
    return GroundState(lam=-mu, eigenfunction=values, potential=V, residual=residual,
                       iterations=iteration, boundary_amplitude=amplitude)


def ground_state(V: Potential, strict: bool = True) -> GroundState:
    return lambda_1d(V, strict) if V.dim == 1 else lambda_2d(V, strict)


def rayleigh_quotient(V: Potential, psi) -> float:
    """sum V psi^2 - 4 sum |D psi|^2 over sum psi^2, forward differences including the walls."""
    psi = np.asarray(psi, dtype=np.float64)
    if psi.shape != V.values.shape:
        raise InputError(f"trial function has shape {psi.shape}, potential {V.values.shape}")
    norm = float(np.sum(psi * psi))
    if norm == 0.0:
        raise InputError("trial function vanishes")
    kinetic = 0.0
    for axis, h in enumerate(V.spacing):
        padded = np.pad(psi, [(1, 1) if k == axis else (0, 0) for k in range(psi.ndim)])
        kinetic += float(np.sum((np.diff(padded, axis=axis) / h) ** 2))
    return (float(np.sum(V.values * psi * psi)) - 4.0 * kinetic) / norm


@log_operation("combine_potential")
def combine_potential(U: ColumnFamily, potentials: list[Potential], half_width: Optional[float] = None,
                      count: Optional[int] = None) -> Potential:
    """V(x) = sum_j V_j(u_j.x) on the square [-half_width, half_width]^2."""
    if U.n != 2:
        raise InputError(f"combined potentials live in the plane, frame is in R^{U.n}")
    if len(potentials) != U.m:
        raise InputError(f"frame has {U.m} vectors but {len(potentials)} potentials were given")
    half_width = settings.EIGEN_BOX_HALF_WIDTH if half_width is None else half_width
    count = settings.GRID_2D if count is None else count
    axis = np.linspace(-half_width, half_width, count)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    total = np.zeros_like(X)
    for j, Vj in enumerate(potentials):
        if Vj.dim != 1:
            raise InputError(f"potential {j} is not 1-dimensional")
        u = U.column(j)
        t = u[0] * X + u[1] * Y
        slack = 1e-12 * max(1.0, abs(Vj.lo[0]), abs(Vj.hi[0]))
        if t.min() < Vj.lo[0] - slack or t.max() > Vj.hi[0] + slack:
            raise InputError(
                f"projection onto u_{j} spans [{t.min():.4g}, {t.max():.4g}] but V_{j} is sampled on "
                f"[{Vj.lo[0]:.4g}, {Vj.hi[0]:.4g}]"
            )
        total += np.interp(t, Vj.nodes()[0], Vj.values)
    return Potential(lo=(-half_width, -half_width), hi=(half_width, half_width), values=total)


@log_operation("eigen_subadditivity_check")
def eigen_subadditivity_check(U: ColumnFamily, c: WeightVector, potentials: list[Potential],
                              half_width: Optional[float] = None, count: Optional[int] = None,
                              tol: Optional[float] = None) -> EigenCheck:
    """lambda(sum_j V_j(u_j.x)) <= sum_j c_j lambda(V_j / c_j).

    The 1-dim problems are solved at the spacing of the planar grid so that the
    discretization errors of both sides match.
    """
    check_frame(U, c)
    if np.any(c.values <= 0.0):
        raise PreconditionError("eigenvalue subadditivity needs positive weights")
    tol = settings.EIGEN_TOL if tol is None else tol
    V = combine_potential(U, potentials, half_width, count)
    lhs = lambda_2d(V).lam
    h = V.spacing[0]
    terms = []
    for cj, Vj in zip(c.values, potentials):
        terms.append(float(cj) * lambda_1d(Vj.scaled(1.0 / float(cj)).resampled(h)).lam)
    rhs = fsum(terms)
    verdict = judge(lhs, rhs, tol)
    logger.info(f"eigen check: lhs={lhs:.8g} rhs={rhs:.8g} ({verdict.value})")
    return EigenCheck(lhs=lhs, rhs_terms=terms, rhs=rhs, tolerance=tol, holds=lhs <= rhs + tol,
                      margin=rhs - lhs, verdict=verdict)


@log_operation("legendre_fisher_check")
def legendre_fisher_check(V: Potential, f: DensityGrid, state: Optional[GroundState] = None,
                          tol: float = 1e-3, eq_tol: float = 2e-3) -> LegendreFisherCheck:
    """int V f <= lambda(V) + I(f), with equality at f = phi^2."""
    if f.dim != V.dim:
        raise InputError(f"density is {f.dim}-dimensional, potential {V.dim}-dimensional")
    state = ground_state(V) if state is None else state
    pts = f.points()
    nodes = V.nodes()
    inside = np.all([(pts[:, k] >= nodes[k][0]) & (pts[:, k] <= nodes[k][-1]) for k in range(V.dim)], axis=0)
    mass = f.values.reshape(-1) * f.cell_volume
    outside = float(mass[~inside].sum())
    if outside > 1e-10:
        raise InputError(f"density puts mass {outside:.3e} outside the potential's box")
    interpolant = RegularGridInterpolator(nodes, V.values)
    pairing = float(np.sum(interpolant(pts[inside]) * mass[inside]))
    info = fisher(f)
    bound = state.lam + info
    return LegendreFisherCheck(pairing=pairing, lam=state.lam, fisher=info, bound=bound, tolerance=tol,
                               holds=pairing <= bound + tol, verdict=judge(pairing, bound, eq_tol))


def box_refinement(factory: Callable[[float], Potential], half_widths: Iterable[float]) -> list[BoxRefinementRecord]:
    """lambda on a sequence of boxes; the Dirichlet value approaches lambda(V) from below."""
    records = []
    for L in sorted(half_widths):
        V = factory(L)
        state = ground_state(V, strict=False)
        note = None if state.boundary_amplitude <= BOUNDARY_AMPLITUDE else "boundary amplitude above threshold"
        records.append(BoxRefinementRecord(half_width=float(L), lam=state.lam,
                                           boundary_amplitude=state.boundary_amplitude,
                                           nodes=int(np.prod(V.counts)), note=note))
    return records
