"""fpplab: a simulation laboratory for first passage percolation on the
planar lattice.

Exact passage times and geodesics under reproducible random edge weights,
Monte Carlo estimators for fluctuation statistics (transverse increments,
geodesic wandering, long-range correlations, conditional decompositions),
and log-log fits of the associated scaling exponents.
"""

__version__ = "0.1.0"

from .engine import (
    GeodesicResult,
    SourceTree,
    Window,
    WindowPolicy,
    h_ball,
    h_ball_boundary,
    hitting_time,
    passage_time,
    passage_time_to_many,
    resample_all,
    resample_beyond_chord,
    resample_matching,
    resample_none,
    resample_outside_region,
    resample_passage_time,
    restricted_passage_time,
    source_tree,
    wandering,
    wet_region,
)
from .estimators import (
    ConditionalDecomposition,
    HalfSpace,
    HittingBall,
    LongRangeCorrelation,
    ReplicatePlan,
    SampleSummary,
    conditional_decomposition,
    estimate_h,
    estimate_sigma,
    increment_variance,
    long_range_correlation,
    nonrandom_fluctuation,
    transverse_increment,
    wandering_profile,
)
from .fitting import (
    ChiXiReport,
    ExponentFit,
    ScaleTable,
    chi_xi_report,
    correlation_exponent,
    delta_inverse,
    delta_of,
    f_inverse,
    f_of,
    fit_power_law,
    transverse_exponent,
)
from .geometry import DirectionFrame, LatticePoint, RealPoint, TransverseSegment, floor_point
from .weights import Axis, EdgeId, EdgeWeightField, WeightDistribution, distribution_mean

__all__ = [
    "__version__",
    "Axis",
    "EdgeId",
    "EdgeWeightField",
    "WeightDistribution",
    "distribution_mean",
    "DirectionFrame",
    "LatticePoint",
    "RealPoint",
    "TransverseSegment",
    "floor_point",
    "GeodesicResult",
    "SourceTree",
    "Window",
    "WindowPolicy",
    "passage_time",
    "passage_time_to_many",
    "source_tree",
    "wet_region",
    "hitting_time",
    "h_ball",
    "h_ball_boundary",
    "resample_passage_time",
    "resample_none",
    "resample_all",
    "resample_beyond_chord",
    "resample_outside_region",
    "resample_matching",
    "restricted_passage_time",
    "wandering",
    "SampleSummary",
    "ReplicatePlan",
    "estimate_h",
    "estimate_sigma",
    "transverse_increment",
    "increment_variance",
    "wandering_profile",
    "long_range_correlation",
    "LongRangeCorrelation",
    "nonrandom_fluctuation",
    "conditional_decomposition",
    "ConditionalDecomposition",
    "HalfSpace",
    "HittingBall",
    "ExponentFit",
    "ScaleTable",
    "fit_power_law",
    "delta_of",
    "delta_inverse",
    "f_of",
    "f_inverse",
    "chi_xi_report",
    "ChiXiReport",
    "transverse_exponent",
    "correlation_exponent",
]
