# Sharp constants, frame matrices and extremizers for rank-one Brascamp-Lieb data
from src.gaussopt.logdet import objective, phi, phi_grad, phi_hess
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
from src.gaussopt.service import (
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
    phi_star,
    phi_star_legendre,
)
