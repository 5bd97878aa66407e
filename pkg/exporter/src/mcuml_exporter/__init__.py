"""Export fitted scikit-learn classifiers to the portable model JSON format."""

from .export import (
    ExporterError,
    ExportResult,
    NotFitted,
    UnsupportedEstimator,
    export_model,
)

__all__ = [
    "ExporterError",
    "ExportResult",
    "NotFitted",
    "UnsupportedEstimator",
    "export_model",
]
