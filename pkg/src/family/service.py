# Brascamp-Lieb polytope membership, critical subsets, splitting and total reducibility
from itertools import combinations
from math import fsum
from typing import Callable, Optional

import numpy as np

from src.config import Config as settings
from src.errors import CapacityError, ConsistencyError, InfeasibleError, InputError, LogicError
from src.family.schemas import (
    ColumnFamily,
    FeasibilityReport,
    ReducibilityReport,
    ReducibilityStatus,
    ReducibleBlock,
    SpanningFamily,
    SplitInstance,
    Subset,
    SubsetRecord,
    WeightVector,
)
from src.linops import complement, orthonormalize, rank_tol
from src.logger import setup_logger
from src.logging_util import log_operation

logger = setup_logger(__name__)


def _check_pair(A: ColumnFamily, c: WeightVector) -> None:
    if A.m != c.m:
        raise InputError(f"family has {A.m} columns but {c.m} weights were given")


def rank_oracle(matrix: np.ndarray, rel_tol: Optional[float] = None) -> Callable[[Subset], int]:
    """Memoized dim span{a_j : j in J}."""
    rel_tol = settings.RANK_TOL if rel_tol is None else rel_tol
    cache: dict[Subset, int] = {}

    def dim_of(J: Subset) -> int:
        if J not in cache:
            cache[J] = rank_tol(matrix[:, list(J)], rel_tol) if J else 0
        return cache[J]

    return dim_of


def subset_weight(c: WeightVector, J: Subset) -> float:
    return fsum(float(c.values[j]) for j in J)


@log_operation("feasibility")
def feasibility(A: ColumnFamily, c: WeightVector, tol: Optional[float] = None,
                rank_rel_tol: Optional[float] = None) -> FeasibilityReport:
    """Decide c in K_A and c in the interior by exhaustive subset enumeration.

    Subsets are visited by increasing cardinality, then lexicographically.
    """
    tol = settings.EQ_TOL if tol is None else tol
    _check_pair(A, c)
    if A.m > settings.SUBSET_MAX:
        raise CapacityError(
            f"subset enumeration over m = {A.m} columns exceeds the envelope of {settings.SUBSET_MAX}"
        )

    dim_of = rank_oracle(A.matrix, rank_rel_tol)
    sum_c = subset_weight(c, tuple(range(A.m)))
    scaling_ok = abs(sum_c - A.n) <= tol

    violations: list[SubsetRecord] = []
    critical: list[Subset] = []
    strict = True
    for size in range(1, A.m + 1):
        for J in combinations(range(A.m), size):
            weight = subset_weight(c, J)
            dim = dim_of(J)
            if weight > dim + tol:
                violations.append(SubsetRecord(subset=J, weight=weight, dim=dim))
            if size == A.m:
                continue
            if abs(weight - dim) <= tol:
                critical.append(J)
            if weight >= dim - tol:
                strict = False

    in_KA = scaling_ok and not violations
    report = FeasibilityReport(
        n=A.n,
        m=A.m,
        sum_c=sum_c,
        tol=tol,
        scaling_ok=scaling_ok,
        in_KA=in_KA,
        in_interior=in_KA and strict,
        violations=violations,
        critical=critical,
    )
    logger.info(
        f"feasibility n={A.n} m={A.m}: sum_c={sum_c:.12g} in_KA={report.in_KA} "
        f"interior={report.in_interior} critical={len(critical)} violations={len(violations)}"
    )
    return report


def minimal_critical(A: ColumnFamily, c: WeightVector, tol: Optional[float] = None,
                     report: Optional[FeasibilityReport] = None) -> list[Subset]:
    report = report or feasibility(A, c, tol)
    if not report.in_KA:
        raise InfeasibleError(
            f"c lies outside K_A (sum_c = {report.sum_c:.12g}, n = {report.n})",
            violation=report.first_violation,
        )
    if not report.critical:
        raise LogicError("no critical subset: c lies in the interior of K_A")
    smallest = min(len(J) for J in report.critical)
    return sorted(J for J in report.critical if len(J) == smallest)


def critical_closure(A: ColumnFamily, J: Subset, rel_tol: Optional[float] = None) -> Subset:
    """All indices whose vector already lies in V_J."""
    dim_of = rank_oracle(A.matrix, rel_tol)
    base = dim_of(tuple(J))
    return tuple(
        j for j in range(A.m)
        if j in J or dim_of(tuple(sorted(set(J) | {j}))) == base
    )


@log_operation("split")
def split(A: SpanningFamily, c: WeightVector, J: Subset, tol: Optional[float] = None) -> SplitInstance:
    tol = settings.EQ_TOL if tol is None else tol
    _check_pair(A, c)
    J = tuple(sorted(set(J)))
    if not J or len(J) >= A.m or J[0] < 0 or J[-1] >= A.m:
        raise InputError(f"split needs a proper nonempty subset of 0..{A.m - 1}, got {J}")
    if np.any(c.values <= tol):
        raise InputError("zero-weight indices must be removed before splitting")

    inner_space = orthonormalize(A.sub(J))
    weight = subset_weight(c, J)
    if abs(weight - inner_space.dim) > tol:
        raise LogicError(
            f"subset {J} is not critical: weight {weight:.12g} vs dim {inner_space.dim}"
        )
    outer_space = complement(inner_space)
    Jc = tuple(j for j in range(A.m) if j not in J)

    inner_cols = inner_space.coordinates(A.sub(J))
    # P_J^perp a_j expressed in the complement basis
    outer_cols = outer_space.coordinates(A.sub(Jc))
    for k, j in enumerate(Jc):
        if np.linalg.norm(outer_cols[:, k]) <= settings.RANK_TOL * np.linalg.norm(A.column(j)):
            raise ConsistencyError(
                f"projection of column {j} onto the complement of V_{J} vanishes although c_{j} > 0"
            )

    return SplitInstance(
        subset=J,
        inner=SpanningFamily(matrix=inner_cols),
        inner_weights=c.sub(J),
        inner_indices=J,
        inner_space=inner_space,
        outer=SpanningFamily(matrix=outer_cols),
        outer_weights=c.sub(Jc),
        outer_indices=Jc,
        outer_space=outer_space,
    )


def drop_zero_weights(A: ColumnFamily, c: WeightVector, tol: Optional[float] = None) -> tuple[Subset, Subset]:
    """Split indices into (zero block, active) by c_j <= tol."""
    tol = settings.EQ_TOL if tol is None else tol
    zero = tuple(j for j in range(c.m) if c.values[j] <= tol)
    active = tuple(j for j in range(c.m) if c.values[j] > tol)
    return zero, active


class _ReductionTrace:
    def __init__(self):
        self.order_mattered = False
        self.certificate: Optional[Subset] = None


def _reduce(vectors: np.ndarray, weights: np.ndarray, labels: Subset, tol: float,
            trace: _ReductionTrace) -> Optional[list[ReducibleBlock]]:
    """Blocks for the sub-instance living in span(vectors), or None when peeling fails."""
    n = vectors.shape[0]
    space = orthonormalize(vectors)
    local = SpanningFamily(matrix=space.coordinates(vectors))
    local_c = WeightVector(values=weights)
    report = feasibility(local, local_c, tol)
    if report.in_interior:
        return [ReducibleBlock(indices=labels, space=space)]
    if not report.in_KA:
        raise ConsistencyError(f"sub-instance {labels} left K_A during reduction")

    dim_of = rank_oracle(vectors)
    candidates = minimal_critical(local, local_c, tol, report=report)
    failed_before = False
    for J in candidates:
        Jc = tuple(k for k in range(len(labels)) if k not in J)
        if dim_of(J) + dim_of(Jc) != local.n:
            logger.debug(f"critical subset {[labels[k] for k in J]} fails directness")
            if trace.certificate is None:
                trace.certificate = tuple(labels[k] for k in J)
            failed_before = True
            continue
        left = _reduce(vectors[:, list(J)], weights[list(J)], tuple(labels[k] for k in J), tol, trace)
        right = _reduce(vectors[:, list(Jc)], weights[list(Jc)], tuple(labels[k] for k in Jc), tol, trace) \
            if left is not None else None
        if left is not None and right is not None:
            if failed_before:
                trace.order_mattered = True
                logger.warning(
                    f"total reducibility of {labels} depended on the choice of critical subset; "
                    f"succeeded with {[labels[k] for k in J]}"
                )
            return left + right
        failed_before = True
    return None


@log_operation("total_reducibility")
def total_reducibility(A: SpanningFamily, c: WeightVector, tol: Optional[float] = None,
                       report: Optional[FeasibilityReport] = None) -> ReducibilityReport:
    tol = settings.EQ_TOL if tol is None else tol
    report = report or feasibility(A, c, tol)
    if not report.in_KA:
        raise InfeasibleError(
            "total reducibility needs c in K_A",
            violation=report.first_violation,
        )
    zero, active = drop_zero_weights(A, c, tol)
    trace = _ReductionTrace()
    blocks = _reduce(A.sub(active), c.values[list(active)], active, tol, trace)
    if blocks is None:
        logger.info(f"not totally reducible; certificate {trace.certificate}")
        return ReducibilityReport(
            status=ReducibilityStatus.NOT_TOTALLY_REDUCIBLE,
            zero_block=zero,
            certificate=trace.certificate,
            order_mattered=trace.order_mattered,
        )
    blocks = sorted(blocks, key=lambda block: block.indices)
    logger.info(f"totally reducible with blocks {[block.indices for block in blocks]}")
    return ReducibilityReport(
        status=ReducibilityStatus.TOTALLY_REDUCIBLE,
        zero_block=zero,
        blocks=blocks,
        order_mattered=trace.order_mattered,
    )


@log_operation("is_reducible_spanning_set")
def is_reducible_spanning_set(A: SpanningFamily) -> bool:
    """True iff some nontrivial bipartition of the columns splits R^n as a direct sum."""
    if A.m > settings.BIPARTITION_MAX:
        raise CapacityError(
            f"bipartition search over m = {A.m} columns exceeds the envelope of {settings.BIPARTITION_MAX}"
        )
    dim_of = rank_oracle(A.matrix)
    rest = tuple(range(1, A.m))
    # column 0 always sits in the first group
    for size in range(0, A.m - 1):
        for extra in combinations(rest, size):
            G1 = (0,) + extra
            G2 = tuple(j for j in rest if j not in extra)
            if dim_of(G1) + dim_of(G2) == A.n:
                logger.debug(f"reducible: {G1} | {G2}")
                return True
    return False
