"""Absolute correlation distance, its sharp 2-relaxed triangle inequality,
and exact nearest-neighbor search that relies on it."""

from .core import (
    CenteredUnit,
    Sample,
    abs_corr_distance,
    abs_corr_distance_unit,
    center_and_normalize,
    pairwise_matrix,
    projective_angle,
)
from .errors import (
    CorrMetricError,
    DimensionMismatch,
    DimensionTooSmall,
    DomainError,
    Infeasible,
    ZeroVariance,
)
from .quasi import (
    AngleTriple,
    RatioReport,
    RelaxConfig,
    f_gamma,
    feasible,
    find_counterexample,
    g_alpha_beta,
    planar_inequality_check,
    ratio_angles,
    ratio_vectors,
    realize_angles,
    sharpness_ratio,
    sweep_grid,
    sweep_random,
)

__version__ = "0.1.0"
