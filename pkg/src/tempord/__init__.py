"""Local temporal-order estimation between two uniformly sampled signals."""

__version__ = "0.1.0"

from tempord.engine import compute_matrix, extract_causal_vector, run_analysis, stability_report
from tempord.types import (
    AnalysisConfig,
    BivariateRecord,
    CausalVector,
    DistanceKind,
    Method,
    Scaling,
    StabilityReport,
    TemporalOrderMatrix,
    TimeSeries,
    validate_config,
)

__all__ = [
    "AnalysisConfig",
    "BivariateRecord",
    "CausalVector",
    "DistanceKind",
    "Method",
    "Scaling",
    "StabilityReport",
    "TemporalOrderMatrix",
    "TimeSeries",
    "compute_matrix",
    "extract_causal_vector",
    "run_analysis",
    "stability_report",
    "validate_config",
]
