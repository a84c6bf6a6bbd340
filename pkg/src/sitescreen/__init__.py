"""Explainable site-suitability screening.

Four stages: proxy-label k-means clustering, multiclass gradient-boosted
classification, exact Shapley attribution, and a SHAP-weighted composite
suitability index, plus a synthetic data generator, persistence, a JSON/HTTP
scenario service, and a CLI.
"""

from .dataset import (
    CLASS_LABELS,
    FEATURE_NAMES,
    CityProfile,
    Dataset,
    SiteRecord,
    canonical_schema,
    default_city_profiles,
    eda_summary,
    generate_synthetic,
    load_csv,
    write_csv,
)
from .pipeline import ModelBundle, PipelineConfig, load_bundle, run_pipeline, save_bundle

__all__ = [
    "CLASS_LABELS",
    "FEATURE_NAMES",
    "CityProfile",
    "Dataset",
    "SiteRecord",
    "ModelBundle",
    "PipelineConfig",
    "canonical_schema",
    "default_city_profiles",
    "eda_summary",
    "generate_synthetic",
    "load_bundle",
    "load_csv",
    "run_pipeline",
    "save_bundle",
    "write_csv",
]

__version__ = "0.1.0"
