"""Deterministic multiscale routing for time series, with synthetic
mechanism tasks, probe classifiers and a benchmark harness."""

from .errors import (
    BaseLengthUnreachable,
    ChecksumMismatch,
    DegenerateFeatures,
    DepthTooLarge,
    InfeasibleGeometry,
    InvalidAlpha,
    MissingBaseline,
    MissingMember,
    ParseError,
    RomanError,
    ShapeMismatch,
    UnequalLength,
    UnknownClassLabel,
    VersionMismatch,
)
from .pyramid import Pyramid, build_pyramid, decimate, level_lengths, smooth
from .routing import (
    RomanConfig,
    RoutedRepresentation,
    RoutingPlan,
    apply_roman,
    plan_routing,
    representation_size,
    resolve_depth,
    transform_batch,
)

__version__ = "0.1.0"

__all__ = [
    "apply_roman",
    "build_pyramid",
    "decimate",
    "level_lengths",
    "plan_routing",
    "representation_size",
    "resolve_depth",
    "smooth",
    "transform_batch",
    "Pyramid",
    "RomanConfig",
    "RoutedRepresentation",
    "RoutingPlan",
    "RomanError",
    "BaseLengthUnreachable",
    "ChecksumMismatch",
    "DegenerateFeatures",
    "DepthTooLarge",
    "InfeasibleGeometry",
    "InvalidAlpha",
    "MissingBaseline",
    "MissingMember",
    "ParseError",
    "ShapeMismatch",
    "UnequalLength",
    "UnknownClassLabel",
    "VersionMismatch",
    "__version__",
]
