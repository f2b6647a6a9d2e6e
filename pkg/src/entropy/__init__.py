# Grid densities: entropy, Fisher information, marginals and heat flow
from src.entropy.schemas import (
    DensityGrid,
    FisherCheck,
    GridSpec,
    HeatScan,
    HeatScanRecord,
    MarginalGrid,
)
from src.entropy.service import (
    boundary_mass,
    check_frame,
    ensure_mass,
    ensure_support,
    entropy,
    fisher,
    fisher_superadditivity_check,
    gaussian_density,
    gaussian_entropy,
    heat_gap_identity,
    heat_monotonicity_scan,
    heat_step,
    marginal,
    subadditivity_gap,
)
