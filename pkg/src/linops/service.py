# Dense linear-algebra kernels: ranks, subspaces, SPD functions
import numpy as np
import scipy.linalg as sla

from src.config import Config as settings
from src.errors import InputError, NumericDomainError
from src.linops.schemas import Subspace
from src.logger import setup_logger

logger = setup_logger(__name__)


def _checked(M) -> np.ndarray:
    try:
        arr = np.asarray(M, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise InputError(f"not a numeric matrix: {e}")
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InputError(f"expected a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("matrix has non-finite entries")
    return arr


def _check_symmetric(M: np.ndarray) -> None:
    if M.shape[0] != M.shape[1]:
        raise InputError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * scale:
        raise InputError("matrix is not symmetric")


def rank_tol(M, rel_tol: float | None = None) -> int:
    """Number of singular values above rel_tol times the largest one."""
    rel_tol = settings.RANK_TOL if rel_tol is None else rel_tol
    if not 0.0 < rel_tol < 1.0:
        raise InputError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    arr = _checked(M)
    if arr.size == 0:
        return 0
    s = sla.svd(arr, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def _canonical_signs(basis: np.ndarray) -> np.ndarray:
    # first entry of noticeable size made positive, so bases are reproducible
    out = basis.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        pivot = np.flatnonzero(np.abs(col) > 1e-12)
        if pivot.size and col[pivot[0]] < 0:
            out[:, k] = -col
    return out


def orthonormalize(vectors, rel_tol: float | None = None) -> Subspace:
    """Orthonormal basis of the column span."""
    rel_tol = settings.RANK_TOL if rel_tol is None else rel_tol
    arr = _checked(vectors)
    if arr.size == 0 or not np.any(arr):
        raise InputError("cannot orthonormalize an all-zero family")
    U, s, _ = sla.svd(arr, full_matrices=False)
    r = int(np.count_nonzero(s > rel_tol * s[0]))
    return Subspace(ambient_dim=arr.shape[0], basis=_canonical_signs(U[:, :r]))


def complement(S: Subspace) -> Subspace:
    """Orthogonal complement within the ambient space."""
    if S.dim >= S.ambient_dim:
        raise InputError("full-dimensional subspace has a trivial complement")
    if S.dim == 0:
        return Subspace(ambient_dim=S.ambient_dim, basis=np.eye(S.ambient_dim))
    null = sla.null_space(S.basis.T)
    # re-orthonormalize against S to clean residual overlap
    null = null - S.basis @ (S.basis.T @ null)
    Q, _ = np.linalg.qr(null)
    return Subspace(ambient_dim=S.ambient_dim, basis=_canonical_signs(Q))


def span_dim(vectors, rel_tol: float | None = None) -> int:
    return rank_tol(vectors, rel_tol)


def sym_eig(M) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenpairs of a symmetric matrix."""
    arr = _checked(M)
    _check_symmetric(arr)
    return sla.eigh(0.5 * (arr + arr.T))


def _spd_eig(M) -> tuple[np.ndarray, np.ndarray]:
    w, V = sym_eig(M)
    if w.size == 0:
        raise InputError("empty matrix")
    floor = np.finfo(np.float64).eps * max(1.0, float(abs(w[-1]))) * w.size
    if w[0] <= floor:
        raise NumericDomainError(
            f"matrix is not positive definite: smallest eigenvalue {w[0]:.3e}",
            eigenvalue=float(w[0]),
            direction=V[:, 0].copy(),
        )
    return w, V


def inv_sqrt_pd(M) -> np.ndarray:
    """Symmetric X with X M X = Id."""
    w, V = _spd_eig(M)
    X = (V * (1.0 / np.sqrt(w))) @ V.T
    return 0.5 * (X + X.T)


def sqrt_psd(M) -> np.ndarray:
    """Principal square root of a symmetric positive semidefinite matrix."""
    w, V = sym_eig(M)
    if w.size and w[0] < -1e-10 * max(1.0, float(abs(w[-1]))):
        raise NumericDomainError(
            f"matrix is indefinite: smallest eigenvalue {w[0]:.3e}",
            eigenvalue=float(w[0]),
            direction=V[:, 0].copy(),
        )
    X = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return 0.5 * (X + X.T)


def logdet_pd(M) -> float:
    """ln det M from a Cholesky factor."""
    arr = _checked(M)
    _check_symmetric(arr)
    try:
        L = sla.cholesky(arr, lower=True, check_finite=False)
    except sla.LinAlgError:
        w, V = sla.eigh(0.5 * (arr + arr.T))
        raise NumericDomainError(
            f"matrix is not positive definite: smallest eigenvalue {w[0]:.3e}",
            eigenvalue=float(w[0]),
            direction=V[:, 0].copy(),
        )
    return float(2.0 * np.sum(np.log(np.diag(L))))
