# Ground-state eigenvalues of -4 Laplacian - V and their subadditivity
from src.spectral.schemas import (
    BoxRefinementRecord,
    EigenCheck,
    GroundState,
    LegendreFisherCheck,
    Potential,
)
from src.spectral.service import (
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
