"""Scoring, ranking and cluster analysis of open government data portals
against a weighted 72-criterion usability rubric."""

__version__ = "0.1.0"

from .schema import FrameworkSchema, load_schema, validate_schema, weight_value
from .scoring import (
    AccuracyCount,
    AssessmentRecord,
    Boolean,
    Measured,
    PortalProfile,
    PortalScorecard,
    RubricScorer,
    SampleCount,
    ScoreMatrix,
    Unobserved,
    binarize,
    build_score_matrix,
    rank_portals,
    regional_aggregates,
    score_portal,
)
from .cluster import KMeansClustering, WardClustering

__all__ = [
    "AccuracyCount",
    "AssessmentRecord",
    "Boolean",
    "FrameworkSchema",
    "KMeansClustering",
    "Measured",
    "PortalProfile",
    "PortalScorecard",
    "RubricScorer",
    "SampleCount",
    "ScoreMatrix",
    "Unobserved",
    "WardClustering",
    "binarize",
    "build_score_matrix",
    "load_schema",
    "rank_portals",
    "regional_aggregates",
    "score_portal",
    "validate_schema",
    "weight_value",
]
