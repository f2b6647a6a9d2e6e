import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.blverify import (
    FactorSet,
    LogFactor,
    bl_check,
    bl_lhs,
    duality_chain,
    duality_density,
    equality_correspondence,
    extremal_factors,
    log_norm,
)
from src.entropy import DensityGrid, GridSpec, gaussian_density, gaussian_entropy
from src.errors import AccuracyError, InfeasibleError, InputError
from src.family import WeightVector
from src.verdict import Verdict

FACTOR_GRID = GridSpec.symmetric(1, 12.0, 256)


def _gaussian_factor(variance=1.0, mass=1.0, shift=0.0):
    f = gaussian_density(FACTOR_GRID, [[variance]], mean=[shift])
    return f.with_values(mass * f.values)


def _bimodal_factor():
    return DensityGrid.from_function(FACTOR_GRID, lambda t: np.exp(-0.5 * (t[:, 0] - 2.0) ** 2)
                                     + np.exp(-0.5 * (t[:, 0] + 2.0) ** 2))


def test_factor_set_is_one_dimensional(plane_grid):
    with pytest.raises(ValidationError):
        FactorSet(factors=[gaussian_density(plane_grid, np.eye(2))])
    factors = FactorSet(factors=[_gaussian_factor(), _gaussian_factor()])
    assert factors.m == 2
    assert factors.scaled(1, 3.0).factors[1].mass == pytest.approx(3.0)


def test_log_norm():
    f = _gaussian_factor(mass=2.5)
    assert log_norm(f, 1.0) == pytest.approx(math.log(2.5), abs=1e-10)
    assert log_norm(f, 0.0) == pytest.approx(math.log(float(f.values.max())))
    # ||g||_2 for the standard Gaussian is (4 pi)^(-1/4)
    assert log_norm(_gaussian_factor(), 0.5) == pytest.approx(-0.25 * math.log(4 * math.pi), abs=1e-8)


def test_fubini_case_is_equality(orthonormal, unit_weights, plane_grid):
    factors = FactorSet(factors=[_gaussian_factor(2.0, mass=3.0), _bimodal_factor()])
    result = bl_check(orthonormal, unit_weights, factors, plane_grid)
    assert result.D == pytest.approx(0.0, abs=1e-12)
    assert result.ratio == pytest.approx(1.0, abs=1e-10)
    assert result.verdict == Verdict.EQUALITY


def test_equiangular_extremal_factors(equiangular, equiangular_weights, plane_grid):
    f = gaussian_density(plane_grid, np.eye(2))
    factors = extremal_factors(equiangular, equiangular_weights, f)
    assert factors.m == 3
    result = bl_check(equiangular, equiangular_weights, factors, plane_grid)
    assert result.ratio == pytest.approx(1.0, abs=2e-3)
    assert result.holds


def test_bimodal_factors_are_strict(equiangular, equiangular_weights, plane_grid):
    factors = FactorSet(factors=[_bimodal_factor()] * 3)
    result = bl_check(equiangular, equiangular_weights, factors, plane_grid)
    assert result.holds
    assert result.ratio < 0.9
    assert result.verdict == Verdict.HOLDS


def test_homogeneity_in_each_factor(equiangular, equiangular_weights, plane_grid):
    factors = FactorSet(factors=[_gaussian_factor(1.5), _gaussian_factor(0.8), _bimodal_factor()])
    base = bl_check(equiangular, equiangular_weights, factors, plane_grid)
    scaled = bl_check(equiangular, equiangular_weights, factors.scaled(0, 3.0), plane_grid)
    assert scaled.lhs == pytest.approx(3.0 * base.lhs, rel=1e-12)
    assert scaled.ratio == pytest.approx(base.ratio, rel=1e-10)


def test_lhs_requires_a_large_enough_box(orthonormal):
    wide = FactorSet(factors=[_gaussian_factor(4.0), _gaussian_factor(4.0)])
    with pytest.raises(AccuracyError):
        bl_lhs(orthonormal, wide, GridSpec.symmetric(2, 3.0, 64))


def test_bl_check_rejects_infinite_constant(orthonormal):
    factors = FactorSet(factors=[_gaussian_factor(), _gaussian_factor()])
    with pytest.raises(InfeasibleError):
        bl_check(orthonormal, WeightVector.of(0.5, 0.5), factors)
    with pytest.raises(InputError):
        bl_lhs(orthonormal, FactorSet(factors=[_gaussian_factor()]))


def test_log_factor_sampling():
    lf = LogFactor.from_function(-1.0, 1.0, 4, lambda t: -t * t)
    assert lf.spacing == 0.5
    assert lf.centers == pytest.approx([-0.75, -0.25, 0.25, 0.75])
    with pytest.raises(ValidationError):
        LogFactor(lo=0.0, hi=1.0, values=[0.0, np.inf])


def _quadratic_log_factors(m):
    return [LogFactor.from_function(-20.0, 20.0, 800, lambda t: -0.5 * t * t) for _ in range(m)]


def test_duality_density_is_standard_gaussian(equiangular, equiangular_weights, plane_grid):
    f = duality_density(equiangular, equiangular_weights, _quadratic_log_factors(3), plane_grid)
    assert f.mass == pytest.approx(1.0, abs=1e-12)
    cov = (f.points() * f.values.reshape(-1, 1)).T @ f.points() * f.cell_volume
    assert cov == pytest.approx(np.eye(2), abs=1e-3)


def test_duality_chain_with_gaussian_potentials(equiangular, equiangular_weights, plane_grid):
    chain = duality_chain(equiangular, equiangular_weights, _quadratic_log_factors(3), plane_grid)
    assert chain.holds
    assert chain.entropy == pytest.approx(gaussian_entropy(np.eye(2)), abs=1e-4)
    assert chain.lower_bound == pytest.approx(chain.entropy, abs=1e-2)
    assert chain.identity_residual < 1e-2


def test_duality_chain_is_strict_for_other_potentials(equiangular, equiangular_weights, plane_grid):
    log_factors = [LogFactor.from_function(-20.0, 20.0, 800, lambda t: -0.5 * t * t),
                   LogFactor.from_function(-20.0, 20.0, 800, lambda t: -np.abs(t)),
                   LogFactor.from_function(-20.0, 20.0, 800, lambda t: -(t ** 4) / 16.0)]
    chain = duality_chain(equiangular, equiangular_weights, log_factors, plane_grid)
    assert chain.holds
    assert chain.entropy > chain.lower_bound


def test_equality_correspondence_gaussian(equiangular, equiangular_weights, plane_grid):
    f = gaussian_density(plane_grid, np.eye(2))
    result = equality_correspondence(equiangular, equiangular_weights, f)
    assert result.is_extremal
    assert result.D == pytest.approx(0.0, abs=1e-9)


def test_equality_correspondence_rejects_bimodal(equiangular, equiangular_weights, plane_grid):
    f = DensityGrid.from_function(plane_grid, lambda p: (np.exp(-0.5 * (p[:, 0] - 2.0) ** 2)
                                                         + np.exp(-0.5 * (p[:, 0] + 2.0) ** 2))
                                  * np.exp(-0.5 * p[:, 1] ** 2))
    result = equality_correspondence(equiangular, equiangular_weights, f)
    assert not result.is_extremal
    assert result.product_residual > 1e-2


def test_equality_correspondence_separates_product_from_correlated(orthonormal, unit_weights, plane_grid):
    product = equality_correspondence(orthonormal, unit_weights, gaussian_density(plane_grid, np.diag([2.0, 0.5])))
    assert product.product_residual <= 1e-2
    assert product.is_extremal
    correlated = gaussian_density(plane_grid, [[1.0, 0.5], [0.5, 1.0]])
    result = equality_correspondence(orthonormal, unit_weights, correlated)
    assert result.product_residual > 0.05
    assert not result.is_extremal
