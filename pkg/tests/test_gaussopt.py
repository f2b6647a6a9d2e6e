import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError
from scipy.optimize import minimize

from src.errors import InfeasibleError, LogicError, NotTotallyReducibleError, PreconditionError
from src.family import ColumnFamily, SpanningFamily, WeightVector
from src.gaussopt import (
    GaussianSpec,
    boundary_jump,
    constant,
    divergence_witness,
    entropy_of_weights,
    extremizers,
    frame_matrix,
    frame_residual,
    gaussian_extremizer,
    gaussian_gap,
    gaussian_gap_general,
    hadamard_check,
    maximize_gap,
    minimizing_c,
    objective,
    phi,
    phi_grad,
    phi_hess,
    phi_star,
    phi_star_legendre,
)

SKEW = [[2.0, 0.0], [0.0, 1.0]]


@pytest.fixture
def generic(rng):
    """Three vectors in general position with interior weights."""
    return SpanningFamily(matrix=rng.standard_normal((2, 3))), WeightVector.of(0.7, 0.6, 0.7)


def _brute_force_D(A, c):
    """sup of the Gaussian gap over Cholesky factors; L_11 = 1 since the gap is scale invariant."""

    def loss(p):
        L = np.array([[1.0, 0.0], [p[0], math.exp(p[1])]])
        return -gaussian_gap(A, c, GaussianSpec(covariance=L @ L.T))

    result = minimize(loss, np.zeros(2), method="Nelder-Mead",
                      options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 20000})
    return -result.fun


def _interior_instance(seed):
    """m = 3..5 pairwise independent vectors in the plane with weights inside K_A."""
    rng = np.random.default_rng(seed)
    m = 3 + seed % 3
    angles = np.pi * (np.arange(m) + rng.uniform(0.2, 0.8, m)) / m
    matrix = np.vstack([np.cos(angles), np.sin(angles)]) * rng.uniform(0.5, 2.0, m)
    u = rng.uniform(1.0, 1.5, m)
    return SpanningFamily(matrix=matrix), WeightVector(values=2.0 * u / u.sum())


def _paired_lines(seed, n):
    """n independent lines carrying two columns each; every pair is a minimal critical subset."""
    rng = np.random.default_rng(seed)
    while True:
        directions = np.eye(n) + 0.5 * rng.standard_normal((n, n))
        directions /= np.linalg.norm(directions, axis=0)
        if abs(np.linalg.det(directions)) > 0.3:
            break
    lengths = rng.uniform(0.5, 2.0, 2 * n) * rng.choice([-1.0, 1.0], 2 * n)
    share = rng.uniform(0.2, 0.8, n)
    weights = np.column_stack([share, 1.0 - share]).ravel()
    expected = -math.fsum(weights * np.log(np.abs(lengths))) - math.log(abs(np.linalg.det(directions)))
    A = SpanningFamily(matrix=np.repeat(directions, 2, axis=1) * lengths)
    return A, WeightVector(values=weights), expected


def _check_alternatives(node):
    for alternative in node.alternatives:
        assert alternative.D == pytest.approx(node.D, abs=1e-8)
    for child in node.children:
        _check_alternatives(child)


def _random_T(rng, n):
    while True:
        T = rng.standard_normal((n, n))
        if abs(np.linalg.det(T)) > 0.1:
            return T


def test_line_case_closed_form():
    A = SpanningFamily(matrix=[[2.0, 3.0]])
    report = constant(A, WeightVector.of(0.4, 0.6))
    assert report.D == pytest.approx(-(0.4 * math.log(2.0) + 0.6 * math.log(3.0)), abs=1e-14)
    assert report.attained
    assert report.tree.kind == "line"


def test_orthonormal_basis(orthonormal, unit_weights):
    report = constant(orthonormal, unit_weights)
    assert report.D == pytest.approx(0.0, abs=1e-12)
    assert report.attained
    assert report.exp_D == pytest.approx(1.0)
    assert report.tree.kind == "split"
    assert [leaf.kind for leaf in report.tree.leaves()] == ["line", "line"]


def test_equiangular_frame(equiangular, equiangular_weights):
    report = constant(equiangular, equiangular_weights)
    assert report.D == pytest.approx(0.0, abs=1e-9)
    assert report.attained
    assert report.tree.kind == "interior"
    assert report.tree.optimizer.value == pytest.approx(2.0 * math.log(2.0 / 3.0), abs=1e-10)


def test_splitting_adds_block_constants():
    report = constant(SpanningFamily(matrix=SKEW), WeightVector.of(1.0, 1.0))
    assert report.D == pytest.approx(-math.log(2.0), abs=1e-12)
    assert report.tree.critical == (0,)


def test_constant_matches_brute_force(generic):
    A, c = generic
    report = constant(A, c)
    assert report.tree.kind == "interior"
    assert report.D == pytest.approx(_brute_force_D(A, c), abs=1e-6)


def test_affine_covariance(equiangular, equiangular_weights, rng):
    T = rng.standard_normal((2, 2)) + 2.0 * np.eye(2)
    moved = equiangular.transformed(T)
    report = constant(moved, equiangular_weights)
    assert report.D == pytest.approx(-math.log(abs(np.linalg.det(T))), abs=1e-8)


@pytest.mark.parametrize("seed", range(20))
def test_random_interior_instances_match_brute_force(seed):
    A, c = _interior_instance(seed)
    report = constant(A, c)
    assert report.tree.kind == "interior"
    assert report.attained
    assert report.D == pytest.approx(_brute_force_D(A, c), abs=1e-5)


@pytest.mark.parametrize("seed, n", [(seed, 2) for seed in range(6)] + [(seed, 3) for seed in range(6, 11)])
def test_boundary_splits_agree(seed, n):
    A, c, expected = _paired_lines(seed, n)
    report = constant(A, c)
    tree = report.tree
    assert report.attained
    assert tree.kind == "split"
    assert len(tree.alternatives) >= 1
    assert report.D == pytest.approx(expected, abs=1e-8)
    _check_alternatives(tree)
    assert math.fsum(leaf.D for leaf in tree.leaves()) == pytest.approx(tree.D, abs=1e-12)


def test_random_affine_covariance_and_column_scaling():
    rng = np.random.default_rng(7)
    for seed in range(100):
        A, c = _interior_instance(seed)
        D = constant(A, c).D
        T = _random_T(rng, 2)
        assert constant(A.transformed(T), c).D == pytest.approx(D - math.log(abs(np.linalg.det(T))), abs=1e-6)
        lam = rng.uniform(0.3, 3.0, A.m)
        scaled = SpanningFamily(matrix=A.matrix * lam)
        assert constant(scaled, c).D == pytest.approx(D - math.fsum(c.values * np.log(lam)), abs=1e-6)


def test_random_line_cases():
    rng = np.random.default_rng(11)
    for _ in range(50):
        m = int(rng.integers(1, 6))
        a = rng.uniform(0.1, 5.0, m) * rng.choice([-1.0, 1.0], m)
        c = rng.dirichlet(np.ones(m))
        report = constant(SpanningFamily(matrix=a[None, :]), WeightVector(values=c))
        assert report.D == pytest.approx(-math.fsum(c * np.log(np.abs(a))), abs=1e-10)


@pytest.mark.parametrize("seed", range(3))
def test_random_parseval_frame(seed):
    rng = np.random.default_rng(100 + seed)
    Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    rows = Q[:2]
    lengths = np.linalg.norm(rows, axis=0)
    U, c = SpanningFamily(matrix=rows / lengths), WeightVector(values=lengths ** 2)
    report = constant(U, c)
    assert report.tree.kind == "interior"
    assert report.D == pytest.approx(0.0, abs=1e-8)
    frame = frame_matrix(U, c)
    assert frame.residual <= 1e-8
    assert_allclose(frame.R, np.eye(2), atol=1e-6)
    unscaled = constant(SpanningFamily(matrix=rows), c)
    assert unscaled.D == pytest.approx(-math.fsum(c.values * np.log(lengths)), abs=1e-8)


def test_permutation_invariance(generic):
    A, c = generic
    order = [2, 0, 1]
    assert constant(A.permuted(order), c.permuted(order)).D == pytest.approx(constant(A, c).D, abs=1e-10)


def test_zero_weight_columns_are_dropped(triangle):
    report = constant(triangle, WeightVector.of(1.0, 1.0, 0.0))
    assert report.D == pytest.approx(0.0, abs=1e-12)
    assert report.attained
    assert report.tree.labels == (0, 1)


def test_finite_but_not_attained(triangle):
    report = constant(triangle, WeightVector.of(0.5, 0.5, 1.0))
    assert report.D == pytest.approx(0.0, abs=1e-12)
    assert not report.attained
    assert report.reducibility.certificate == (2,)


def test_infeasible_constant_is_infinite(orthonormal):
    report = constant(orthonormal, WeightVector.of(0.5, 0.5))
    assert math.isinf(report.D)
    assert not report.finite
    assert report.exp_D == math.inf
    assert report.tree is None


def test_phi_derivatives_match_finite_differences(generic):
    A, _ = generic
    t = np.array([0.3, -0.2, 0.1])
    step = 1e-6
    grad = np.array([(phi(A, t + step * e) - phi(A, t - step * e)) / (2 * step) for e in np.eye(3)])
    assert_allclose(phi_grad(A, t), grad, atol=1e-7)
    hess = np.array([(phi_grad(A, t + step * e) - phi_grad(A, t - step * e)) / (2 * step) for e in np.eye(3)])
    assert_allclose(phi_hess(A, t), hess, atol=1e-6)
    # gradient entries are leverage scores summing to n
    assert phi_grad(A, t).sum() == pytest.approx(2.0)


def test_phi_is_convex(generic, rng):
    A, _ = generic
    for _ in range(20):
        s, t = rng.standard_normal(3), rng.standard_normal(3)
        assert phi(A, 0.5 * (s + t)) <= 0.5 * (phi(A, s) + phi(A, t)) + 1e-12
        assert np.linalg.eigvalsh(phi_hess(A, t))[0] >= -1e-12


@pytest.mark.parametrize("seed", range(5))
def test_optimizer_is_stationary(seed):
    A, c = _interior_instance(seed)
    result = maximize_gap(A, c)
    assert result.converged
    assert_allclose(phi_grad(A, result.t_star.values), c.values, atol=1e-9)


def test_optimizer_on_boundary_instance(orthonormal, unit_weights):
    result = maximize_gap(orthonormal, unit_weights)
    assert result.converged
    assert result.attained
    assert result.recession is not None


def test_optimizer_reports_recession(triangle):
    result = maximize_gap(triangle, WeightVector.of(0.5, 0.5, 1.0))
    assert not result.attained
    assert result.recession_subset == (2,)


def test_optimizer_needs_feasible_weights(orthonormal):
    with pytest.raises(InfeasibleError):
        maximize_gap(orthonormal, WeightVector.of(0.5, 0.5))


def test_frame_matrix_equiangular(equiangular, equiangular_weights):
    frame = frame_matrix(equiangular, equiangular_weights)
    assert frame.residual < 1e-8
    assert frame.trace_R2 == pytest.approx(2.0)
    assert_allclose(frame.R, np.eye(2), atol=1e-8)


def test_frame_matrix_block_instance():
    A = SpanningFamily(matrix=SKEW)
    frame = frame_matrix(A, WeightVector.of(1.0, 1.0))
    assert frame.residual < 1e-8
    assert_allclose(np.abs(frame.unit_frame), np.eye(2), atol=1e-10)


def test_frame_matrix_generic(generic):
    A, c = generic
    frame = frame_matrix(A, c)
    assert frame.residual < 1e-8
    assert frame.trace_R2 == pytest.approx(2.0)


def test_frame_matrix_needs_total_reducibility(triangle):
    with pytest.raises(NotTotallyReducibleError):
        frame_matrix(triangle, WeightVector.of(0.5, 0.5, 1.0))


def test_extremizers_block_structure(equiangular, equiangular_weights, triangle):
    free = extremizers(SpanningFamily(matrix=SKEW), WeightVector.of(1.0, 1.0))
    assert free.exists
    assert free.all_free
    assert [block.indices for block in free.blocks] == [(0,), (1,)]

    gaussian = extremizers(equiangular, equiangular_weights)
    assert gaussian.exists
    assert not gaussian.all_free
    assert gaussian.blocks[0].dim == 2
    assert_allclose(gaussian.blocks[0].covariance, np.eye(2), atol=1e-8)

    missing = extremizers(triangle, WeightVector.of(0.5, 0.5, 1.0))
    assert not missing.exists
    assert missing.certificate == (2,)


def test_gaussian_extremizer_attains_constant(generic):
    A, c = generic
    G = gaussian_extremizer(A, c)
    assert gaussian_gap(A, c, G) == pytest.approx(constant(A, c).D, abs=1e-8)


def test_gaussian_gap_below_constant(generic, rng):
    A, c = generic
    D = constant(A, c).D
    for _ in range(5):
        X = rng.standard_normal((2, 2))
        assert gaussian_gap(A, c, GaussianSpec(covariance=X @ X.T + 0.1 * np.eye(2))) <= D + 1e-10


def test_gaussian_gap_needs_scaling(orthonormal):
    with pytest.raises(PreconditionError):
        gaussian_gap(orthonormal, WeightVector.of(0.5, 0.5), GaussianSpec.isotropic(2))


def test_gaussian_spec_validation():
    with pytest.raises(ValidationError):
        GaussianSpec(covariance=[[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(ValidationError):
        GaussianSpec(covariance=[[1.0, 0.5], [0.0, 1.0]])


def test_hadamard_inequality(equiangular, equiangular_weights, rng):
    for _ in range(3):
        T = rng.standard_normal((2, 2))
        check = hadamard_check(equiangular, equiangular_weights, T)
        assert check.holds
        assert check.slack >= -1e-10


def test_hadamard_on_random_spd(equiangular, equiangular_weights, orthonormal, unit_weights, rng):
    for A, c in ((equiangular, equiangular_weights), (orthonormal, unit_weights)):
        for _ in range(1000):
            X = rng.standard_normal((2, 2))
            check = hadamard_check(A, c, X @ X.T + 0.1 * np.eye(2), D=0.0)
            assert check.holds
        assert hadamard_check(A, c, np.eye(2), D=0.0).slack == pytest.approx(0.0, abs=1e-12)


def test_hadamard_compares_in_log_space(orthonormal, unit_weights):
    check = hadamard_check(orthonormal, unit_weights, np.diag([1e200, 1e200]))
    assert check.holds
    assert check.lhs == math.inf
    assert check.log_lhs == pytest.approx(400.0 * math.log(10.0))
    assert check.slack == pytest.approx(0.0, abs=1e-9)


def test_legendre_transform_agrees(generic):
    A, c = generic
    assert phi_star(A, c) == pytest.approx(phi_star_legendre(A, c), abs=1e-9)


def test_minimizing_c_gives_leverage_scores(equiangular, triangle):
    assert_allclose(minimizing_c(equiangular).values, [2 / 3] * 3, atol=1e-12)
    assert_allclose(minimizing_c(triangle).values, [2 / 3] * 3, atol=1e-12)


def test_entropy_of_weights():
    assert entropy_of_weights([0.0, 1.0, 0.5]) == pytest.approx(0.5 * math.log(0.5))


def test_divergence_from_scaling(orthonormal):
    witness = divergence_witness(orthonormal, WeightVector.of(0.5, 0.5))
    assert witness.kind == "scaling"
    assert witness.limit == "infinity"
    assert witness.predicted_rate == pytest.approx(1.0)
    assert witness.fitted_rate == pytest.approx(1.0, abs=1e-9)
    assert witness.validated


def test_divergence_from_subset():
    A = SpanningFamily(matrix=[[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    witness = divergence_witness(A, WeightVector.of(1.0, 1.0, 0.0))
    assert witness.kind == "subset"
    assert witness.subset == (0, 1)
    assert witness.closure == (0, 1)
    assert witness.limit == "zero"
    assert witness.fitted_rate == pytest.approx(-0.5, abs=1e-9)
    assert witness.validated


def test_divergence_from_span_deficiency():
    witness = divergence_witness(ColumnFamily(matrix=[[1.0], [0.0]]), WeightVector.of(1.0))
    assert witness.kind == "span"
    assert witness.space.dim == 1
    assert witness.fitted_rate == pytest.approx(0.5, abs=1e-9)


def test_no_divergence_inside_polytope(equiangular, equiangular_weights):
    with pytest.raises(LogicError):
        divergence_witness(equiangular, equiangular_weights)


def test_boundary_jump_samples_inside(triangle):
    jump = boundary_jump(triangle, WeightVector.of(0.5, 0.5, 1.0))
    assert jump.D_boundary == pytest.approx(0.0, abs=1e-12)
    assert len(jump.D_inside) == len(jump.epsilons)
    assert all(math.isfinite(D) for D in jump.D_inside)


def test_general_gap_matches_scaled_gap(generic, rng):
    A, c = generic
    X = rng.standard_normal((2, 2))
    Sigma = X @ X.T + 0.5 * np.eye(2)
    assert gaussian_gap_general(A, c, Sigma) == pytest.approx(gaussian_gap(A, c, GaussianSpec(covariance=Sigma)))


def test_frame_residual_of_unnormalized_frame(equiangular, equiangular_weights):
    residual, U = frame_residual(equiangular, equiangular_weights, 3.0 * np.eye(2))
    assert residual < 1e-12
    assert_allclose(np.linalg.norm(U, axis=0), 1.0)


def test_objective_is_shift_invariant_on_scaling_weights(generic):
    A, c = generic
    t = np.array([0.2, -0.4, 0.9])
    assert objective(A, c.values, t + 1.5) == pytest.approx(objective(A, c.values, t), abs=1e-12)
