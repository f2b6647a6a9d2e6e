# Orchestration behind the command-line surface
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from src.blverify import FactorSet, bl_check, extremal_factors
from src.cli.formats import parse_instance, read_density, read_factor, read_potential, write_csv
from src.cli.schemas import (
    WHICH_CHOICES,
    Instance,
    Report,
    ReportSection,
    SummaryRow,
    VerificationBlock,
    matrix_rows,
)
from src.config import Config as settings
from src.config import overrides
from src.entropy import GridSpec, check_frame, fisher_superadditivity_check, gaussian_density, heat_monotonicity_scan, \
    subadditivity_gap
from src.errors import BLError, InfeasibleError, NotTotallyReducibleError, ParseError
from src.family import ColumnFamily, FeasibilityReport, WeightVector
from src.gaussopt import ConstantReport, FrameMatrix, GaussianSpec, SplitNode, constant, extremizers, frame_matrix
from src.logger import setup_logger
from src.spectral import box_refinement, combine_potential, eigen_subadditivity_check, harmonic_well
from src.templates import format_number, render_template
from src.verdict import Verdict, judge

logger = setup_logger(__name__)

# covariance flowed by the heat scan; distinct variances keep the information gap nontrivial
SCAN_COVARIANCE = np.diag([1.5, 0.75])
HARMONIC_HALF_WIDTH = 15.0
BOX_SWEEP = (4.0, 6.0, 8.0)


def combine_exit(codes) -> int:
    """1 beats 2 beats 3 beats 0."""
    codes = set(codes)
    for code in (1, 2, 3):
        if code in codes:
            return code
    return 0


def verdict_exit(verdict: Optional[Verdict]) -> int:
    if verdict in (Verdict.INCONCLUSIVE, Verdict.VIOLATED):
        return 3
    return 0


def _subset(J) -> str:
    return "{" + ",".join(str(j) for j in J) + "}"


def new_report(instance: Instance, timestamp: bool = False) -> Report:
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ") if timestamp else None
    return Report(instance=instance.name, timestamp=stamp)


def _tolerances(instance: Instance) -> tuple[float, float]:
    return instance.tolerances.get("rank", settings.RANK_TOL), instance.tolerances.get("eq", settings.EQ_TOL)


def add_feasibility(report: Report, result: FeasibilityReport) -> None:
    section = report.section("feasibility")
    section.add("n", result.n).add("m", result.m).add("sum_c", result.sum_c).add("tolerance", result.tol)
    section.add("scaling", result.scaling_ok).add("in_K_A", result.in_KA).add("interior", result.in_interior)
    if result.violations:
        section.add("violations")
        for record in result.violations:
            section.add(f"{_subset(record.subset)} weight={format_number(record.weight)} dim={record.dim}", indent=1)
    if result.critical:
        section.add("critical")
        for J in result.critical:
            section.add(_subset(J), indent=1)


def _tree_entries(section: ReportSection, node: SplitNode, indent: int) -> None:
    text = f"{node.kind} {_subset(node.labels)} dim={node.dim} D={format_number(node.D)}"
    if node.critical is not None:
        text += f" split={_subset(node.critical)}"
    for alt in node.alternatives:
        text += f" alt{_subset(alt.subset)}={format_number(alt.D)}"
    section.add(text, indent=indent)
    for child in node.children:
        _tree_entries(section, child, indent + 1)


def add_constant(report: Report, result: ConstantReport) -> None:
    section = report.section("constant")
    section.add("D", result.D).add("exp_D", result.exp_D).add("attained", result.attained)
    if result.tree is not None:
        section.add("tree")
        _tree_entries(section, result.tree, 1)
        optimizers = [leaf.optimizer for leaf in result.tree.leaves() if leaf.optimizer is not None]
        for leaf in result.tree.leaves():
            if leaf.optimizer is not None and leaf.optimizer.recession is not None:
                section.add(f"recession along {_subset(leaf.optimizer.recession_subset)}")
        if optimizers:
            section.add("newton_iterations", sum(o.iterations for o in optimizers))


def add_frame(report: Report, frame: FrameMatrix) -> None:
    section = report.section("frame")
    section.add("R")
    for row in matrix_rows(frame.R):
        section.add(row, indent=1)
    section.add("residual", frame.residual).add("trace_R2", frame.trace_R2)


def add_extremizers(report: Report, A, c, tol: float) -> None:
    description = extremizers(A, c, tol)
    section = report.section("extremizers")
    section.add("exists", description.exists)
    if description.zero_block:
        section.add("zero_weight", _subset(description.zero_block))
    if not description.exists:
        section.add("certificate", _subset(description.certificate or ()))
        return
    section.add("all_free", description.all_free)
    for block in description.blocks:
        kind = "free 1-dim factor" if block.free else "Gaussian"
        section.add(f"block {_subset(block.indices)} dim={block.dim} {kind}")
        if block.covariance is not None:
            for row in matrix_rows(block.covariance):
                section.add(row, indent=1)
    section.add("gaussian_covariance")
    for row in matrix_rows(description.gaussian_covariance):
        section.add(row, indent=1)


def add_block(report: Report, block: VerificationBlock) -> None:
    report.blocks.append(block)
    section = report.section(f"verify {block.name}")
    if block.note:
        section.add("note", block.note)
    if block.error:
        section.add("error", block.error)
    if block.evaluated:
        if block.lhs is not None:
            section.add("lhs", block.lhs).add("rhs", block.rhs).add("tolerance", block.tolerance)
        section.add("verdict", block.verdict.value)
        for key in sorted(block.details):
            section.add(key, block.details[key])


def _omitted(name: str, note: str) -> VerificationBlock:
    return VerificationBlock(name=name, note=note)


def _guarded(name: str, run: Callable[[], VerificationBlock]) -> VerificationBlock:
    """Runs one verification block; failures are recorded on the block instead of aborting the report."""
    try:
        block = run()
    except BLError as e:
        logger.error(f"verification block {name} failed: {e}", exc_info=True)
        return VerificationBlock(name=name, verdict=Verdict.INCONCLUSIVE, error=str(e), exit_code=e.exit_code)
    except Exception as e:
        logger.error(f"verification block {name} failed: {e}", exc_info=True)
        return VerificationBlock(name=name, verdict=Verdict.INCONCLUSIVE, error=f"{type(e).__name__}: {e}",
                                 exit_code=1)
    if block.evaluated and not block.exit_code:
        block.exit_code = verdict_exit(block.verdict)
    return block


class GaussianData:
    """Extremal Gaussian and the normalized frame built from the frame matrix."""

    def __init__(self, frame: FrameMatrix):
        self.frame = frame
        R2 = frame.R @ frame.R
        self.covariance = 0.5 * (R2 + R2.T)
        self.unit_frame = ColumnFamily(matrix=frame.unit_frame)


def entropy_block(instance: Instance, A, c: WeightVector, D: float, data: Optional[GaussianData]) -> VerificationBlock:
    path = instance.files.get("density")
    if path is not None:
        f, source = read_density(path), "density file"
    elif data is None:
        return _omitted("entropy", "no extremizer exists; supply a density file")
    elif A.n > 3:
        return _omitted("entropy", "grid densities are limited to n <= 3")
    else:
        f, source = gaussian_density(GridSpec.symmetric(A.n), data.covariance), "extremal Gaussian"
    gap = subadditivity_gap(f, A, c)
    tol = settings.ENTROPY_SLACK
    return VerificationBlock(name="entropy", lhs=gap, rhs=D, tolerance=tol, verdict=judge(gap, D, tol),
                             details={"source": source})


def bl_block(instance: Instance, A, c: WeightVector, D: float, data: Optional[GaussianData]) -> VerificationBlock:
    paths = instance.indexed_files("factor")
    if paths is not None:
        factors, source = FactorSet(factors=[read_factor(p) for p in paths]), "factor files"
    elif data is None:
        return _omitted("bl", "no extremizer exists; supply factor files")
    elif A.n > 3:
        return _omitted("bl", "grid quadrature is limited to n <= 3")
    else:
        f = gaussian_density(GridSpec.symmetric(A.n), data.covariance)
        factors, source = extremal_factors(A, c, f), "extremal Gaussian marginals"
    result = bl_check(A, c, factors, D=D)
    return VerificationBlock(name="bl", lhs=result.lhs, rhs=result.rhs, tolerance=result.tolerance,
                             verdict=result.verdict, details={"ratio": result.ratio, "source": source})


def fisher_block(instance: Instance, A, c: WeightVector, data: Optional[GaussianData],
                 csv_dir: Optional[Path]) -> VerificationBlock:
    if data is None:
        return _omitted("fisher", "no frame matrix exists for this instance")
    U = data.unit_frame
    path = instance.files.get("density")
    details = {}
    if path is not None and _is_tight_frame(A, c):
        check = fisher_superadditivity_check(read_density(path), A, c)
        details["source"] = "density file"
    else:
        check = fisher_superadditivity_check(GaussianSpec.isotropic(A.n), U, c)
        details["source"] = "isotropic Gaussian, normalized frame"
    if A.n == 2:
        scan = heat_monotonicity_scan(gaussian_density(GridSpec.symmetric(2), SCAN_COVARIANCE), U, c)
        details["heat_info_gap_nonnegative"] = scan.nonnegative
        details["heat_identity_residual"] = scan.identity_residual
        if csv_dir is not None:
            target = write_csv(Path(csv_dir) / f"{instance.name}_heat.csv", ["t", "info_gap", "gap"],
                               [(r.t, r.info_gap, r.gap) for r in scan.records])
            details["heat_csv"] = target.name
    return VerificationBlock(name="fisher", lhs=check.lhs, rhs=check.rhs, tolerance=check.tolerance,
                             verdict=judge(check.lhs, check.rhs, check.tolerance), details=details)


def _is_tight_frame(A, c: WeightVector) -> bool:
    try:
        check_frame(A, c)
    except BLError:
        return False
    return True


def eigen_block(instance: Instance, A, c: WeightVector, data: Optional[GaussianData],
                csv_dir: Optional[Path]) -> VerificationBlock:
    if A.n != 2:
        return _omitted("eigen", "eigenvalue checks run in the plane only")
    if data is None:
        return _omitted("eigen", "no frame matrix exists for this instance")
    paths = instance.indexed_files("potential")
    if paths is not None:
        potentials, source = [read_potential(p) for p in paths], "potential files"
    else:
        well = harmonic_well(1.0, HARMONIC_HALF_WIDTH, settings.GRID_1D)
        potentials, source = [well] * A.m, "harmonic wells -t^2"
    active = [j for j in range(A.m) if c.values[j] > 0.0]
    U = ColumnFamily(matrix=data.unit_frame.sub(active))
    cw = c.sub(active)
    chosen = [potentials[j] for j in active]
    check = eigen_subadditivity_check(U, cw, chosen)
    details = {"source": source, "rhs_terms": " ".join(format_number(t) for t in check.rhs_terms)}
    if csv_dir is not None:
        sweep = box_refinement(lambda L: combine_potential(U, chosen, L), BOX_SWEEP)
        target = write_csv(Path(csv_dir) / f"{instance.name}_boxes.csv", ["half_width", "lambda", "boundary_amplitude"],
                           [(r.half_width, r.lam, r.boundary_amplitude) for r in sweep])
        details["box_csv"] = target.name
    return VerificationBlock(name="eigen", lhs=check.lhs, rhs=check.rhs, tolerance=check.tolerance,
                             verdict=check.verdict, details=details)


def _which(which: str) -> tuple[str, ...]:
    if which == "all":
        return WHICH_CHOICES
    if which == "none":
        return ()
    return (which,)


def verification_blocks(instance: Instance, result: ConstantReport, data: Optional[GaussianData], which: str,
                        csv_dir: Optional[Path] = None) -> list[VerificationBlock]:
    A, c = instance.family(), instance.weight_vector()
    runners = {
        "entropy": lambda: entropy_block(instance, A, c, result.D, data),
        "bl": lambda: bl_block(instance, A, c, result.D, data),
        "fisher": lambda: fisher_block(instance, A, c, data, csv_dir),
        "eigen": lambda: eigen_block(instance, A, c, data, csv_dir),
    }
    return [_guarded(name, runners[name]) for name in _which(which)]


def _gaussian_data(A, c, tol: float) -> Optional[GaussianData]:
    try:
        return GaussianData(frame_matrix(A, c, tol))
    except NotTotallyReducibleError as e:
        logger.info(f"no frame matrix: {e}")
        return None


def run_command(instance: Instance, command: str, which: str = "all", csv_dir: Optional[Path] = None,
                timestamp: bool = False) -> Report:
    """Builds the report for one command; errors become an [error] section and the exit code."""
    report = new_report(instance, timestamp)
    rank_tol, eq_tol = _tolerances(instance)
    codes = []
    try:
        with overrides(RANK_TOL=rank_tol):
            A, c = instance.family(), instance.weight_vector()
            result = constant(A, c, eq_tol)
            add_feasibility(report, result.feasibility)
            if not result.feasibility.in_KA:
                codes.append(2)
                if command in ("constant", "verify"):
                    add_constant(report, result)
                if command in ("frame", "extremizers"):
                    raise InfeasibleError("c lies outside K_A", violation=result.feasibility.first_violation)
                if command == "verify":
                    for name in _which(which):
                        add_block(report, VerificationBlock(name=name, verdict=Verdict.INFEASIBLE,
                                                            note="skipped: instance is infeasible"))
            elif command == "constant":
                add_constant(report, result)
            elif command == "frame":
                add_frame(report, frame_matrix(A, c, eq_tol))
            elif command == "extremizers":
                add_extremizers(report, A, c, eq_tol)
            elif command == "verify":
                add_constant(report, result)
                data = _gaussian_data(A, c, eq_tol)
                if data is not None:
                    add_frame(report, data.frame)
                add_extremizers(report, A, c, eq_tol)
                for block in verification_blocks(instance, result, data, which, csv_dir):
                    add_block(report, block)
                    codes.append(block.exit_code)
    except BLError as e:
        logger.error(f"{command} failed for {instance.name}: {e}")
        report.section("error").add("detail", str(e))
        codes.append(e.exit_code)
    report.exit_code = combine_exit(codes)
    return report


def render_report(report: Report) -> str:
    return render_template("report.txt", report=report)


def summarize(path: Path, which: str = "none", settings_overrides: Optional[dict] = None) -> SummaryRow:
    """One corpus row; runs in a worker process, so settings overrides travel explicitly."""
    name = Path(path).stem
    with overrides(**(settings_overrides or {})):
        try:
            instance = parse_instance(path)
        except ParseError as e:
            logger.warning(f"corpus: {e}")
            return SummaryRow(name=name, error="parse error")
        try:
            rank_tol, eq_tol = _tolerances(instance)
            with overrides(RANK_TOL=rank_tol):
                A, c = instance.family(), instance.weight_vector()
                result = constant(A, c, eq_tol)
                margin = None
                if result.finite and which != "none":
                    data = _gaussian_data(A, c, eq_tol)
                    margins = [b.margin for b in verification_blocks(instance, result, data, which) if b.margin is not None]
                    margin = min(margins) if margins else None
        except BLError as e:
            logger.error(f"corpus: {name} failed: {e}")
            return SummaryRow(name=name, error=f"error: {e.detail}")
    return SummaryRow(name=name, feasible=result.feasibility.in_KA, D=result.D, attained=result.attained,
                      worst_margin=margin)


def run_corpus(directory, which: str = "none", jobs: int = 1, settings_overrides: Optional[dict] = None) -> list[SummaryRow]:
    paths = sorted(Path(directory).glob("*.inst"))
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(summarize, paths, [which] * len(paths), [settings_overrides] * len(paths)))
    else:
        rows = [summarize(p, which, settings_overrides) for p in paths]
    return sorted(rows, key=lambda row: row.name)


def render_summary(rows: list[SummaryRow]) -> str:
    return render_template("summary.txt", rows=rows)

