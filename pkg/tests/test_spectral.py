import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.entropy import GridSpec, gaussian_density
from src.errors import AccuracyError, InputError, PreconditionError
from src.family import ColumnFamily, WeightVector
from src.spectral import (
    Potential,
    box_refinement,
    combine_potential,
    eigen_subadditivity_check,
    ground_state,
    hamiltonian,
    harmonic_well,
    lambda_1d,
    lambda_2d,
    legendre_fisher_check,
    rayleigh_quotient,
)
from src.verdict import Verdict


def test_potential_validation():
    with pytest.raises(ValidationError):
        Potential(lo=(0.0,), hi=(1.0,), values=[0.0, 1.0])
    with pytest.raises(ValidationError):
        Potential(lo=(1.0,), hi=(0.0,), values=[0.0, 1.0, 2.0])
    V = harmonic_well(1.0, 8.0, 161)
    assert V.spacing == pytest.approx((0.1,))
    assert V.resampled(0.2).counts == (81,)


def test_harmonic_well_closed_form():
    state = lambda_1d(harmonic_well(1.0, 8.0, 3201))
    assert state.lam == pytest.approx(-2.0, abs=1e-4)
    assert state.boundary_amplitude < 1e-6
    assert lambda_1d(harmonic_well(4.0, 8.0, 3201)).lam == pytest.approx(-4.0, abs=1e-4)


def test_constant_shift_moves_lambda():
    V = harmonic_well(1.0, 8.0, 161)
    assert lambda_1d(V.shifted(0.7)).lam == pytest.approx(lambda_1d(V).lam + 0.7, abs=1e-10)


def test_monotone_in_the_potential():
    V = harmonic_well(1.0, 8.0, 321)
    W = Potential.from_function(V.lo, V.hi, V.counts, lambda t: -t * t + np.exp(-t * t))
    assert lambda_1d(V).lam <= lambda_1d(W).lam


def test_small_box_is_rejected():
    V = harmonic_well(1.0, 3.0, 121)
    with pytest.raises(AccuracyError):
        lambda_1d(V)
    assert lambda_1d(V, strict=False).boundary_amplitude > 1e-6


def test_rayleigh_quotient_is_variational():
    V = harmonic_well(1.0, 8.0, 321)
    state = lambda_1d(V)
    assert rayleigh_quotient(V, state.eigenfunction) == pytest.approx(state.lam, rel=1e-10)
    trial = np.exp(-V.nodes()[0] ** 2)
    assert rayleigh_quotient(V, trial) < state.lam
    with pytest.raises(InputError):
        rayleigh_quotient(V, np.zeros(V.counts))


def test_random_trial_functions_stay_below_lambda():
    V = harmonic_well(1.0, 8.0, 321)
    lam = lambda_1d(V).lam
    rng = np.random.default_rng(5)
    t = V.nodes()[0]
    for _ in range(20):
        width, center = rng.uniform(0.3, 3.0), rng.uniform(-2.0, 2.0)
        trial = np.exp(-((t - center) / width) ** 2) * (1.0 + 0.2 * rng.standard_normal(t.shape))
        assert rayleigh_quotient(V, trial) <= lam + 1e-10


def test_ground_state_density_has_unit_mass():
    state = lambda_1d(harmonic_well(1.0, 8.0, 321))
    assert state.density().mass == pytest.approx(1.0)


def test_separable_planar_potential():
    lo, hi, count = (-8.0, -8.0), (8.0, 8.0), (121, 121)
    V = Potential.from_function(lo, hi, count, lambda x, y: -x * x - 4.0 * y * y)
    state = lambda_2d(V)
    Vx = Potential.from_function((-8.0,), (8.0,), (121,), lambda t: -t * t)
    Vy = Potential.from_function((-8.0,), (8.0,), (121,), lambda t: -4.0 * t * t)
    assert state.lam == pytest.approx(lambda_1d(Vx).lam + lambda_1d(Vy).lam, abs=1e-6)
    assert state.lam == pytest.approx(-6.0, abs=1e-2)
    assert ground_state(V).lam == pytest.approx(state.lam)


def test_lambda_dimension_guards():
    with pytest.raises(InputError):
        lambda_1d(Potential.from_function((-1.0, -1.0), (1.0, 1.0), (5, 5), lambda x, y: x * y))
    with pytest.raises(InputError):
        lambda_2d(harmonic_well(1.0, 8.0, 11))


def test_combined_potential_needs_covering_range(equiangular):
    wells = [harmonic_well(1.0, 5.0, 101)] * 3
    with pytest.raises(InputError):
        combine_potential(equiangular, wells, half_width=8.0, count=33)
    V = combine_potential(equiangular, [harmonic_well(1.0, 15.0, 3001)] * 3, half_width=8.0, count=33)
    x, y = np.meshgrid(*V.nodes(), indexing="ij")
    # sum of squared projections onto the equiangular frame is 3/2 |x|^2
    assert V.values == pytest.approx(-1.5 * (x * x + y * y), abs=1e-3)


def test_equiangular_eigen_check(equiangular, equiangular_weights):
    wells = [harmonic_well(1.0, 15.0, 3001)] * 3
    check = eigen_subadditivity_check(equiangular, equiangular_weights, wells, half_width=8.0, count=161)
    assert check.lhs == pytest.approx(-2.0 * math.sqrt(6.0), abs=1e-2)
    assert check.lhs == pytest.approx(check.rhs, abs=1e-3)
    assert check.holds


def test_asymmetric_wells_leave_a_margin(equiangular, equiangular_weights):
    wells = [harmonic_well(b, 15.0, 3001) for b in (3.0, 0.3, 0.3)]
    check = eigen_subadditivity_check(equiangular, equiangular_weights, wells, half_width=10.0, count=201)
    expected_lhs = -2.0 * (math.sqrt(3.15) + math.sqrt(0.45))
    expected_rhs = -2.0 * (math.sqrt(2.0) + 2.0 * math.sqrt(0.2))
    assert check.lhs == pytest.approx(expected_lhs, abs=1e-2)
    assert check.rhs == pytest.approx(expected_rhs, abs=1e-2)
    assert check.margin == pytest.approx(0.274, abs=5e-3)
    assert check.verdict == Verdict.HOLDS


def test_eigen_check_needs_a_frame(orthonormal):
    wells = [harmonic_well(1.0, 15.0, 301)] * 2
    with pytest.raises(PreconditionError):
        eigen_subadditivity_check(orthonormal, WeightVector.of(0.5, 0.5), wells)
    frame = ColumnFamily(matrix=[[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    with pytest.raises(PreconditionError):
        eigen_subadditivity_check(frame, WeightVector.of(0.0, 1.0, 1.0), wells + wells[:1])


def test_legendre_equality_at_ground_state():
    V = harmonic_well(1.0, 8.0, 801)
    state = lambda_1d(V)
    check = legendre_fisher_check(V, state.density(), state)
    assert check.holds
    assert check.pairing == pytest.approx(check.bound, abs=2e-3)
    assert check.verdict == Verdict.EQUALITY


def test_legendre_strict_for_other_densities():
    V = harmonic_well(1.0, 8.0, 801)
    f = gaussian_density(GridSpec.symmetric(1, 7.9, 790), [[0.5]])
    check = legendre_fisher_check(V, f)
    assert check.holds
    assert check.bound - check.pairing == pytest.approx(0.5, abs=1e-2)
    assert check.verdict == Verdict.HOLDS


def test_legendre_rejects_mass_outside_box():
    V = harmonic_well(1.0, 2.0, 81)
    f = gaussian_density(GridSpec.symmetric(1, 6.0, 240), [[1.0]])
    with pytest.raises(InputError):
        legendre_fisher_check(V, f, state=lambda_1d(V, strict=False))


def test_box_refinement_approaches_from_below():
    records = box_refinement(lambda L: harmonic_well(1.0, L, int(round(40 * L)) + 1), [8.0, 3.0, 5.0])
    assert [r.half_width for r in records] == [3.0, 5.0, 8.0]
    lams = [r.lam for r in records]
    assert lams[0] < lams[1] <= lams[2] + 1e-6
    assert records[0].note is not None
    assert records[-1].note is None
    assert records[-1].lam == pytest.approx(-2.0, abs=1e-3)


def test_hamiltonian_stencil():
    V = Potential.from_function((-1.0, -2.0), (1.0, 2.0), (5, 9), lambda x, y: x * x + y)
    H = hamiltonian(V)
    assert H.shape == (45, 45)
    assert abs(H - H.T).max() == 0.0
    # spacings are 0.5 on both axes
    assert H.diagonal() == pytest.approx(64.0 - V.values.reshape(-1))
