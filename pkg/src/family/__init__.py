# Instances (A, c): polytope membership, critical subsets, splitting, reducibility
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
from src.family.service import (
    critical_closure,
    drop_zero_weights,
    feasibility,
    is_reducible_spanning_set,
    minimal_critical,
    rank_oracle,
    split,
    subset_weight,
    total_reducibility,
)
