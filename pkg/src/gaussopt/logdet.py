# Phi_A(t) = ln det(sum_j e^{t_j} a_j a_j^t) and its first two derivatives
import numpy as np
import scipy.linalg as sla

from src.errors import InputError, NumericDomainError

# Cholesky pivots below this fraction of the largest one are treated as zero
_PIVOT_RATIO = 1e-150


def family_matrix(A) -> np.ndarray:
    return np.asarray(getattr(A, "matrix", A), dtype=np.float64)


def _factor(A, t):
    """Cholesky factor of the shifted Gram matrix.

    Phi(t + s*1) = Phi(t) + n*s, so t is shifted by its maximum before exponentiating.
    """
    mat = family_matrix(A)
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    if t.size != mat.shape[1]:
        raise InputError(f"scaling point has {t.size} entries, family has {mat.shape[1]} columns")
    if not np.all(np.isfinite(t)):
        raise InputError("scaling point has non-finite entries")
    shift = float(np.max(t))
    B = mat * np.exp(0.5 * (t - shift))[None, :]
    M = B @ B.T
    try:
        cf = sla.cho_factor(M, lower=True, check_finite=False)
    except sla.LinAlgError:
        cf = None
    diag = np.abs(np.diag(cf[0])) if cf is not None else None
    if cf is None or diag.min() <= _PIVOT_RATIO * diag.max():
        w, V = sla.eigh(0.5 * (M + M.T))
        raise NumericDomainError(
            f"Gram matrix is numerically singular at this scaling (smallest eigenvalue {w[0]:.3e})",
            eigenvalue=float(w[0]),
            direction=V[:, 0].copy(),
        )
    return B, cf, shift


def phi(A, t) -> float:
    B, cf, shift = _factor(A, t)
    return float(2.0 * np.sum(np.log(np.abs(np.diag(cf[0])))) + B.shape[0] * shift)


def phi_grad(A, t) -> np.ndarray:
    """g_j = e^{t_j} a_j^t (A e^T A^t)^{-1} a_j, the diagonal of the projection P."""
    B, cf, _ = _factor(A, t)
    X = sla.cho_solve(cf, B, check_finite=False)
    return np.einsum("ij,ij->j", B, X)


def phi_hess(A, t) -> np.ndarray:
    """H = diag(g) - P o P with P = B^t (B B^t)^{-1} B."""
    B, cf, _ = _factor(A, t)
    X = sla.cho_solve(cf, B, check_finite=False)
    P = B.T @ X
    P = 0.5 * (P + P.T)
    H = np.diag(np.diag(P)) - P * P
    return 0.5 * (H + H.T)


def objective(A, c, t) -> float:
    """F(t) = sum_j c_j t_j - Phi_A(t)."""
    t = np.asarray(t, dtype=np.float64)
    return float(np.dot(np.asarray(c, dtype=np.float64), t) - phi(A, t))
