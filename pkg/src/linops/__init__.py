# Dense linear-algebra kernels
from src.linops.schemas import Matrix, Subspace, Vector, as_matrix, as_vector
from src.linops.service import (
    complement,
    inv_sqrt_pd,
    logdet_pd,
    orthonormalize,
    rank_tol,
    span_dim,
    sqrt_psd,
    sym_eig,
)
