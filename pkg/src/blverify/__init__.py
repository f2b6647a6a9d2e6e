# Grid verification of the Brascamp-Lieb inequality and its duality with entropy
from src.blverify.schemas import BLReport, DualityChain, EqualityCorrespondence, FactorSet, LogFactor
from src.blverify.service import (
    bl_check,
    bl_lhs,
    duality_chain,
    duality_density,
    equality_correspondence,
    extremal_factors,
    log_norm,
)
