# Sharp constant D(A, c) via the log-det program, frame matrices and extremizers
import math
from math import fsum
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.special import xlogy

from src.config import Config as settings
from src.errors import (
    ConsistencyError,
    InfeasibleError,
    InputError,
    LogicError,
    NotTotallyReducibleError,
    NumericDomainError,
    NumericError,
    PreconditionError,
)
from src.family import (
    ColumnFamily,
    FeasibilityReport,
    ReducibilityReport,
    SpanningFamily,
    Subset,
    WeightVector,
    critical_closure,
    drop_zero_weights,
    feasibility,
    minimal_critical,
    split,
    total_reducibility,
)
from src.gaussopt.logdet import family_matrix, objective, phi_grad, phi_hess
from src.gaussopt.schemas import (
    AlternativeSplit,
    BoundaryJump,
    ConstantReport,
    DivergenceWitness,
    ExtremizerBlock,
    ExtremizerDescription,
    FrameMatrix,
    GaussianSpec,
    GaussOptResult,
    HadamardCheck,
    OptimizerOptions,
    ScalingPoint,
    SplitNode,
)
from src.linops import complement, inv_sqrt_pd, logdet_pd, orthonormalize, rank_tol, sqrt_psd
from src.logger import setup_logger
from src.logging_util import descend, log_operation

logger = setup_logger(__name__)

_EPS = np.finfo(np.float64).eps
_LOG_MAX = math.log(np.finfo(np.float64).max)


def entropy_of_weights(c) -> float:
    """sum_j c_j ln c_j with 0 ln 0 = 0."""
    return fsum(float(v) for v in xlogy(np.asarray(c, dtype=np.float64), np.asarray(c, dtype=np.float64)))


def _gauge_basis(k: int) -> np.ndarray:
    """Orthonormal basis of the hyperplane sum(t) = 0 in R^k."""
    if k <= 1:
        return np.zeros((k, 0))
    ones = np.ones((k, 1)) / math.sqrt(k)
    return sla.null_space(ones.T)


def _safe_objective(A, c, t) -> float:
    try:
        return objective(A, c, t)
    except NumericDomainError:
        return -math.inf


def _recession_direction(A: np.ndarray, c: np.ndarray, t: np.ndarray, labels: Subset,
                         critical: list[Subset], reach: float = 10.0):
    """Centred 0/1 pattern of a critical subset along which F does not decrease."""
    k = len(labels)
    base = _safe_objective(A, c, t)
    best = None
    for J in critical:
        pattern = np.zeros(k)
        pattern[list(J)] = 1.0
        pattern -= pattern.mean()
        norm = np.linalg.norm(pattern)
        if norm == 0.0:
            continue
        pattern /= norm
        for sign in (1.0, -1.0):
            gain = _safe_objective(A, c, t + sign * reach * pattern) - base
            if best is None or gain > best[0] + 1e-12:
                best = (gain, sign * pattern, J)
    if best is None:
        return None, None
    _, direction, J = best
    return direction, tuple(labels[j] for j in J)


@log_operation("maximize_gap")
def maximize_gap(A: SpanningFamily, c: WeightVector, opts: Optional[OptimizerOptions] = None, *,
                 report: Optional[FeasibilityReport] = None,
                 reducible: Optional[bool] = None) -> GaussOptResult:
    """Maximize F(t) = sum c_j t_j - Phi_A(t) by damped Newton in the gauge sum(t) = 0.

    Zero weights are dropped first; t_star refers to the remaining columns.
    """
    opts = opts or OptimizerOptions()
    report = report or feasibility(A, c, opts.tol)
    if not report.in_KA:
        raise InfeasibleError("maximize_gap needs c in K_A", violation=report.first_violation)

    _, active = drop_zero_weights(A, c, opts.tol)
    mat = A.sub(active)
    cw = c.values[list(active)]
    k = len(active)
    if abs(float(cw.sum()) - A.n) > opts.tol:
        raise PreconditionError(f"maximize_gap needs sum c = n, got {cw.sum():.12g}")

    Z = _gauge_basis(k)
    t = np.zeros(k)
    F = objective(mat, cw, t)
    history: list[float] = []
    converged = False
    drifted = False
    iterations = 0

    for iterations in range(1, opts.max_iter + 1):
        grad = cw - phi_grad(mat, t)
        gnorm = float(np.max(np.abs(grad)))
        history.append(gnorm)
        if gnorm <= opts.grad_tol:
            converged = True
            break

        Hz = Z.T @ phi_hess(mat, t) @ Z
        gz = Z.T @ grad
        if Hz.size:
            w, V = sla.eigh(0.5 * (Hz + Hz.T))
            keep = w > 1e-12 * max(1.0, float(w[-1]))
            dz = V[:, keep] @ ((V[:, keep].T @ gz) / w[keep]) if keep.any() else gz
        else:
            dz = gz
        d = Z @ dz
        slope = float(grad @ d)
        if slope <= 0.0:
            # Newton direction lost ascent; plain gradient in the gauge
            d = Z @ gz
            slope = float(grad @ d)

        step = 1.0
        accepted = False
        noise = 64.0 * _EPS * (1.0 + abs(F))
        for _ in range(60):
            trial = t + step * d
            F_trial = _safe_objective(mat, cw, trial)
            if F_trial >= F + 1e-4 * step * slope - noise:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            logger.debug(f"line search stalled at iteration {iterations}, |grad|={gnorm:.3e}")
            break

        t = trial - trial.mean()
        F = objective(mat, cw, t)
        if float(np.max(np.abs(t))) > opts.recession_bound:
            drifted = True
            logger.info(f"scaling point left the box |t| <= {opts.recession_bound} at iteration {iterations}")
            break

    grad_norm = float(np.max(np.abs(cw - phi_grad(mat, t))))
    converged = converged or grad_norm <= opts.grad_tol

    recession = None
    recession_subset = None
    # interiority of the instance without its zero-weight columns
    local = SpanningFamily(matrix=mat)
    local_c = WeightVector(values=cw)
    local_report = report if len(active) == A.m else feasibility(local, local_c, opts.tol)
    if not local_report.in_interior:
        critical = minimal_critical(local, local_c, opts.tol, report=local_report)
        recession, recession_subset = _recession_direction(mat, cw, t, active, critical)
        if reducible is None:
            reducible = total_reducibility(A, c, opts.tol, report=report).totally_reducible
    else:
        reducible = True

    if not converged and recession is None:
        raise NumericError(
            f"Newton iteration did not converge in {iterations} iterations (|grad| = {grad_norm:.3e})",
            history=history,
        )

    attained = bool(reducible and converged and not drifted)
    logger.info(
        f"maximize_gap: F*={F:.12g} |grad|={grad_norm:.2e} iterations={iterations} "
        f"attained={attained} recession={recession_subset}"
    )
    return GaussOptResult(
        t_star=ScalingPoint(values=t, indices=active),
        value=F,
        grad_norm=grad_norm,
        attained=attained,
        converged=converged,
        iterations=iterations,
        recession=recession,
        recession_subset=recession_subset,
        history=history,
    )


def _solve(A: SpanningFamily, c: WeightVector, labels: Subset, tol: float, cross_check: bool,
           opts: OptimizerOptions) -> SplitNode:
    with descend(",".join(str(j) for j in labels)):
        if A.n == 1:
            D = -fsum(float(cj) * math.log(abs(float(aj))) for cj, aj in zip(c.values, A.matrix[0]))
            return SplitNode(labels=labels, dim=1, kind="line", D=D)

        report = feasibility(A, c, tol)
        if report.in_interior:
            result = maximize_gap(A, c, opts, report=report, reducible=True)
            D = 0.5 * (result.value - entropy_of_weights(c.values))
            return SplitNode(labels=labels, dim=A.n, kind="interior", D=D, optimizer=result)

        candidates = minimal_critical(A, c, tol, report=report)
        node = _split_node(A, c, labels, candidates[0], tol, cross_check, opts)
        if cross_check and len(candidates) > 1:
            for J in candidates[1:]:
                other = _split_node(A, c, labels, J, tol, False, opts)
                node.alternatives.append(AlternativeSplit(subset=other.critical, D=other.D))
                if abs(other.D - node.D) > settings.SPLIT_AGREE_TOL * max(1.0, abs(node.D)):
                    raise ConsistencyError(
                        f"splitting along {node.critical} gives D = {node.D:.12g} but along "
                        f"{other.critical} gives {other.D:.12g}"
                    )
        return node


def _split_node(A: SpanningFamily, c: WeightVector, labels: Subset, J: Subset, tol: float,
                cross_check: bool, opts: OptimizerOptions) -> SplitNode:
    pieces = split(A, c, J, tol)
    inner = _solve(pieces.inner, pieces.inner_weights,
                   tuple(labels[j] for j in pieces.inner_indices), tol, cross_check, opts)
    outer = _solve(pieces.outer, pieces.outer_weights,
                   tuple(labels[j] for j in pieces.outer_indices), tol, cross_check, opts)
    return SplitNode(
        labels=labels,
        dim=A.n,
        kind="split",
        D=inner.D + outer.D,
        critical=tuple(labels[j] for j in J),
        children=[inner, outer],
    )


@log_operation("constant")
def constant(A: SpanningFamily, c: WeightVector, tol: Optional[float] = None, *,
             cross_check: bool = True, opts: Optional[OptimizerOptions] = None) -> ConstantReport:
    """D(A, c) with its splitting tree; +inf outside K_A."""
    tol = settings.EQ_TOL if tol is None else tol
    opts = opts or OptimizerOptions(tol=tol)
    report = feasibility(A, c, tol)
    if not report.in_KA:
        logger.info(f"constant: c outside K_A, first violation {report.first_violation}")
        return ConstantReport(D=math.inf, feasibility=report)

    reducibility = total_reducibility(A, c, tol, report=report)
    _, active = drop_zero_weights(A, c, tol)
    tree = _solve(SpanningFamily(matrix=A.sub(active)), c.sub(active), active, tol, cross_check, opts)
    logger.info(f"constant: D={tree.D:.12g} attained={reducibility.totally_reducible}")
    return ConstantReport(
        D=tree.D,
        feasibility=report,
        tree=tree,
        attained=reducibility.totally_reducible,
        reducibility=reducibility,
    )


def _quadratic_forms(A, Sigma: np.ndarray) -> np.ndarray:
    mat = family_matrix(A)
    return np.einsum("ij,ik,kj->j", mat, Sigma, mat)


def gaussian_gap_general(A, c, Sigma) -> float:
    """sum_j c_j S(a_j.G) - S(G) for a centred Gaussian G, any weights."""
    Sigma = np.asarray(Sigma, dtype=np.float64)
    cw = np.asarray(getattr(c, "values", c), dtype=np.float64)
    n = Sigma.shape[0]
    q = _quadratic_forms(A, Sigma)
    if np.any(q <= 0.0):
        raise NumericDomainError("a_j^t Sigma a_j vanished")
    two_pi_e = 2.0 * math.pi * math.e
    marginal = -0.5 * fsum(float(cj) * math.log(two_pi_e * float(qj)) for cj, qj in zip(cw, q))
    joint = -0.5 * (n * math.log(two_pi_e) + logdet_pd(Sigma))
    return marginal - joint


def gaussian_gap(A: ColumnFamily, c: WeightVector, G: GaussianSpec) -> float:
    """0.5 (ln det Sigma - sum_j c_j ln a_j^t Sigma a_j), valid when sum c = n."""
    if abs(c.total - A.n) > settings.EQ_TOL:
        raise PreconditionError(f"gaussian_gap needs sum c = n, got {c.total:.12g}")
    if G.n != A.n:
        raise InputError(f"covariance is {G.n}x{G.n} but the family lives in R^{A.n}")
    q = _quadratic_forms(A, G.covariance)
    return 0.5 * (logdet_pd(G.covariance) - fsum(float(cj) * math.log(float(qj)) for cj, qj in zip(c.values, q)))


def frame_residual(A, c, R) -> tuple[float, np.ndarray]:
    """Operator norm of sum c_j u_j u_j^t - Id for u_j = R a_j / |R a_j|."""
    mat = family_matrix(A)
    cw = np.asarray(getattr(c, "values", c), dtype=np.float64)
    U = np.asarray(R) @ mat
    U = U / np.linalg.norm(U, axis=0)[None, :]
    S = (U * cw[None, :]) @ U.T
    return float(np.linalg.norm(S - np.eye(mat.shape[0]), ord=2)), U


def _interior_R(local: np.ndarray, weights: np.ndarray, opts: OptimizerOptions) -> np.ndarray:
    """R_0 = (A S S A^t)^{-1/2} at the optimizer, normalized to trace(R^2) = dim."""
    fam = SpanningFamily(matrix=local)
    result = maximize_gap(fam, WeightVector(values=weights), opts, reducible=True)
    t = np.zeros(local.shape[1])
    t[list(result.t_star.indices)] = result.t_star.values
    B = local * np.exp(0.5 * t)[None, :]
    R0 = inv_sqrt_pd(B @ B.T)
    return R0 * math.sqrt(local.shape[0] / float(np.trace(R0 @ R0)))


def _block_transform(A: SpanningFamily, reducibility: ReducibilityReport):
    """T mapping the block decomposition onto coordinate blocks, plus block-local families."""
    blocks = reducibility.blocks
    if len(blocks) == 1:
        T = np.eye(A.n)
    else:
        T = np.linalg.inv(np.hstack([block.space.basis for block in blocks]))
    local = []
    offset = 0
    for block in blocks:
        rows = slice(offset, offset + block.dim)
        local.append((block, rows, (T @ A.sub(block.indices))[rows, :]))
        offset += block.dim
    return T, local


def _require_reducible(A: SpanningFamily, c: WeightVector, tol: float) -> ReducibilityReport:
    report = feasibility(A, c, tol)
    if not report.in_KA:
        raise InfeasibleError("c lies outside K_A", violation=report.first_violation)
    return total_reducibility(A, c, tol, report=report)


@log_operation("frame_matrix")
def frame_matrix(A: SpanningFamily, c: WeightVector, tol: Optional[float] = None) -> FrameMatrix:
    tol = settings.EQ_TOL if tol is None else tol
    opts = OptimizerOptions(tol=tol)
    reducibility = _require_reducible(A, c, tol)
    if not reducibility.totally_reducible:
        raise NotTotallyReducibleError(
            f"(A, c) is not totally reducible; certificate {reducibility.certificate}",
            report=reducibility,
        )

    T, local = _block_transform(A, reducibility)
    R_blocks = np.zeros((A.n, A.n))
    for block, rows, fam in local:
        R_blocks[rows, rows] = _interior_R(fam, c.values[list(block.indices)], opts)
    W = R_blocks @ T
    R = sqrt_psd(W.T @ W) if len(local) > 1 else R_blocks
    R = R * math.sqrt(A.n / float(np.trace(R @ R)))
    residual, unit = frame_residual(A, c, R)
    logger.info(f"frame_matrix: residual={residual:.3e} blocks={len(local)}")
    return FrameMatrix(R=R, residual=residual, trace_R2=float(np.trace(R @ R)), unit_frame=unit)


@log_operation("extremizers")
def extremizers(A: SpanningFamily, c: WeightVector, tol: Optional[float] = None) -> ExtremizerDescription:
    tol = settings.EQ_TOL if tol is None else tol
    opts = OptimizerOptions(tol=tol)
    reducibility = _require_reducible(A, c, tol)
    if not reducibility.totally_reducible:
        return ExtremizerDescription(
            exists=False,
            zero_block=reducibility.zero_block,
            certificate=reducibility.certificate,
        )

    T, local = _block_transform(A, reducibility)
    blocks = []
    for block, _, fam in local:
        if block.dim == 1:
            blocks.append(ExtremizerBlock(indices=block.indices, dim=1, free=True))
            continue
        R_i = _interior_R(fam, c.values[list(block.indices)], opts)
        blocks.append(ExtremizerBlock(indices=block.indices, dim=block.dim, free=False, covariance=R_i @ R_i))
    frame = frame_matrix(A, c, tol)
    return ExtremizerDescription(
        exists=True,
        zero_block=reducibility.zero_block,
        blocks=blocks,
        transform=T,
        gaussian_covariance=frame.R @ frame.R,
    )


def gaussian_extremizer(A: SpanningFamily, c: WeightVector, tol: Optional[float] = None) -> GaussianSpec:
    """Covariance R^2 of a Gaussian attaining D(A, c)."""
    frame = frame_matrix(A, c, tol)
    return GaussianSpec(covariance=0.5 * (frame.R @ frame.R + (frame.R @ frame.R).T))


def _exp_or_inf(x: float) -> float:
    return math.exp(x) if x < _LOG_MAX else math.inf


def hadamard_check(A: SpanningFamily, c: WeightVector, T, tol: Optional[float] = None,
                   D: Optional[float] = None) -> HadamardCheck:
    """|det T| <= e^D prod_j |T a_j|^{c_j}, compared in log space.

    Pass D to reuse a known constant across many T.
    """
    T = np.asarray(T, dtype=np.float64)
    if T.shape != (A.n, A.n) or rank_tol(T) < A.n:
        raise InputError("hadamard_check needs an invertible n x n matrix T")
    if D is None:
        D = constant(A, c, tol).D
    if not math.isfinite(D):
        raise PreconditionError("hadamard_check needs a finite constant D(A, c)")
    _, log_det = np.linalg.slogdet(T)
    log_det = float(log_det)
    norms = np.linalg.norm(T @ A.matrix, axis=0)
    log_rhs = D + fsum(float(cj) * math.log(float(nj)) for cj, nj in zip(c.values, norms))
    return HadamardCheck(lhs=_exp_or_inf(log_det), rhs=_exp_or_inf(log_rhs), log_lhs=log_det, log_rhs=log_rhs,
                         holds=log_det <= log_rhs + math.log1p(1e-8), slack=log_rhs - log_det)


def phi_star(A: SpanningFamily, c: WeightVector, tol: Optional[float] = None) -> float:
    """Legendre transform of Phi_A at c, from the constant: 2 D + sum c ln c."""
    report = constant(A, c, tol)
    if not report.finite:
        raise InfeasibleError("phi_star is +inf outside K_A", violation=report.feasibility.first_violation)
    return 2.0 * report.D + entropy_of_weights(c.values)


def phi_star_legendre(A: SpanningFamily, c: WeightVector, tol: Optional[float] = None) -> float:
    """sup_t (<c, t> - Phi_A(t)) read directly off the optimizer."""
    tol = settings.EQ_TOL if tol is None else tol
    return maximize_gap(A, c, OptimizerOptions(tol=tol)).value


def minimizing_c(A: SpanningFamily) -> WeightVector:
    """grad Phi_A(0): the leverage scores a_j^t (A A^t)^{-1} a_j."""
    g = phi_grad(A.matrix, np.zeros(A.m))
    return WeightVector(values=np.clip(g, 0.0, 1.0))


def _fit_rate(A, c, make_sigma, lambdas: tuple[float, float]) -> tuple[float, tuple[float, float]]:
    gaps = tuple(gaussian_gap_general(A, c, make_sigma(lam)) for lam in lambdas)
    rate = (gaps[1] - gaps[0]) / (math.log(lambdas[1]) - math.log(lambdas[0]))
    return rate, gaps


@log_operation("divergence_witness")
def divergence_witness(A: ColumnFamily, c: WeightVector, tol: Optional[float] = None) -> DivergenceWitness:
    """Gaussian family certifying D(A, c) = +inf.

    Checked in order: span deficiency, scaling sum c != n, subset violation.
    """
    tol = settings.EQ_TOL if tol is None else tol
    n = A.n
    span = orthonormalize(A.matrix)
    if span.dim < n:
        V = complement(span)
        P = V.projector()
        rest = np.eye(n) - P
        predicted = 0.5 * V.dim
        lambdas = (1e2, 1e4)
        rate, gaps = _fit_rate(A, c, lambda lam: lam * P + rest, lambdas)
        kind, subset, closure, space, limit = "span", None, None, V, "infinity"
    else:
        report = feasibility(A, c, tol)
        if report.in_KA:
            raise LogicError("c lies in K_A; no divergence witness exists")
        if not report.scaling_ok:
            predicted = n - c.total
            limit = "infinity" if predicted > 0 else "zero"
            lambdas = (1e2, 1e4) if limit == "infinity" else (1e-2, 1e-4)
            # sigma = lambda^2 Id realizes X -> lambda X
            rate, gaps = _fit_rate(A, c, lambda lam: lam * lam * np.eye(n), lambdas)
            kind, subset, closure, space = "scaling", None, None, None
        else:
            best = None
            for record in report.violations:
                J_closed = critical_closure(A, record.subset)
                rate_J = 0.5 * (record.dim - fsum(float(c.values[j]) for j in J_closed))
                if best is None or rate_J < best[0] - 1e-15:
                    best = (rate_J, record.subset, J_closed)
            predicted, subset, closure = best
            space = orthonormalize(A.sub(subset))
            P = space.projector()
            rest = np.eye(n) - P
            lambdas = (1e-2, 1e-4)
            rate, gaps = _fit_rate(A, c, lambda lam: lam * P + rest, lambdas)
            kind, limit = "subset", "zero"

    validated = abs(rate - predicted) <= 0.05 * abs(predicted)
    if not validated:
        logger.warning(f"divergence witness ({kind}): fitted rate {rate:.6g} vs predicted {predicted:.6g}")
    return DivergenceWitness(
        kind=kind,
        subset=subset,
        closure=closure,
        space=space,
        limit=limit,
        predicted_rate=predicted,
        fitted_rate=rate,
        lambdas=lambdas,
        gaps=gaps,
        validated=validated,
    )


def boundary_jump(A: SpanningFamily, c: WeightVector,
                  epsilons: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4),
                  tol: Optional[float] = None) -> BoundaryJump:
    """D along c_eps = (1 - eps) c + eps c_int approaching c from inside K_A.

    Diagnostic only; the jump itself is not quantified.
    """
    tol = settings.EQ_TOL if tol is None else tol
    c_int = minimizing_c(A).values
    D_c = constant(A, c, tol).D
    inside = []
    for eps in epsilons:
        c_eps = WeightVector(values=np.clip((1.0 - eps) * c.values + eps * c_int, 0.0, 1.0))
        inside.append(constant(A, c_eps, tol, cross_check=False).D)
    return BoundaryJump(D_boundary=D_c, interior_point=c_int, epsilons=list(epsilons), D_inside=inside)
