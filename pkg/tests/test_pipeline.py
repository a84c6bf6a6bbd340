"""End-to-end orchestration, determinism, persistence, and scenario execution."""

import io
import json
import math

import numpy as np
import pytest

from sitescreen.dataset import FEATURE_NAMES, Dataset
from sitescreen.errors import (
    BundleFormatError,
    ParameterError,
    PipelineStageError,
    UnsupportedVersionError,
)
from sitescreen.gbt import predict_margins, predict_proba
from sitescreen.index import compute_sci
from sitescreen.pipeline import (
    PipelineConfig,
    bundle_to_json,
    dataset_fingerprint,
    load_bundle,
    run_pipeline,
    run_scenario,
    save_bundle,
)
from sitescreen.preprocess import adjust_row, transform_row

from .test_dataset import make_record


def test_five_blob_pipeline_recovers_structure(small_bundle, small_reports):
    assert small_reports.k_selection.chosen_k == 5
    assert small_reports.evaluation.accuracy >= 0.95
    assert small_bundle.kmeans.k == 5
    assert sorted(small_bundle.labeling.cluster_to_class.values()) == [0, 1, 2, 3, 4]
    assert sum(small_reports.sci_histogram.values()) == 150


def test_pipeline_deterministic(blob_dataset, small_config):
    b1, _ = run_pipeline(blob_dataset, small_config)
    b2, _ = run_pipeline(blob_dataset, small_config)
    assert bundle_to_json(b1) == bundle_to_json(b2)


def test_single_record_infeasible(small_config):
    ds = Dataset.from_records([make_record()])
    with pytest.raises(PipelineStageError) as err:
        run_pipeline(ds, small_config)
    assert err.value.stage == "cluster"


def test_bundle_roundtrip_preserves_predictions(small_bundle):
    text = bundle_to_json(small_bundle)
    again = load_bundle(io.StringIO(text))
    rng = np.random.default_rng(55)
    rows = rng.random((100, 8))
    assert np.array_equal(
        small_bundle.ensemble.margins_batch(rows), again.ensemble.margins_batch(rows)
    )
    assert np.array_equal(small_bundle.scaler.minima, again.scaler.minima)
    assert np.array_equal(small_bundle.background.rows, again.background.rows)
    assert bundle_to_json(again) == text


def test_bundle_version_gate(small_bundle, tmp_path):
    doc = json.loads(bundle_to_json(small_bundle))
    doc["format_version"] = 99
    path = tmp_path / "tampered.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(UnsupportedVersionError):
        load_bundle(str(path))


def test_truncated_bundle_is_schema_error(small_bundle, tmp_path):
    text = bundle_to_json(small_bundle)
    path = tmp_path / "truncated.json"
    path.write_text(text[: len(text) // 2])
    with pytest.raises(BundleFormatError):
        load_bundle(str(path))


def test_missing_bundle_field_names_path(small_bundle, tmp_path):
    doc = json.loads(bundle_to_json(small_bundle))
    del doc["scaler"]["min"]
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(BundleFormatError, match="bundle.scaler"):
        load_bundle(str(path))


def test_save_bundle_to_path(small_bundle, tmp_path):
    path = tmp_path / "bundle.json"
    save_bundle(small_bundle, str(path))
    again = load_bundle(str(path))
    assert again.dataset_fingerprint == small_bundle.dataset_fingerprint


def test_config_rejects_unknown_fields():
    with pytest.raises(ParameterError, match="mystery"):
        PipelineConfig.from_dict({"mystery": 1})


def test_config_roundtrip_through_dict():
    cfg = PipelineConfig(rounds=12, seed=5, bin_cuts=(1.0, 2.0, 3.0, 4.0))
    doc = json.loads(json.dumps({**cfg.__dict__, "bin_cuts": list(cfg.bin_cuts)}))
    assert PipelineConfig.from_dict(doc) == cfg


def test_fingerprint_tracks_content(blob_dataset):
    ds2 = Dataset.from_records(list(blob_dataset.records[:-1]))
    assert dataset_fingerprint(blob_dataset) != dataset_fingerprint(ds2)


def test_normalized_weight_mode_with_custom_bins(blob_dataset):
    config = PipelineConfig(
        rounds=20,
        background_size=8,
        importance_sample_size=16,
        weight_mode="normalized",
        bin_cuts=(0.2, 0.4, 0.6, 0.8),
        seed=21,
    )
    bundle, reports = run_pipeline(blob_dataset, config)
    assert bundle.weights.mode == "normalized"
    assert abs(bundle.weights.normalized.sum() - 1.0) <= 1e-12
    assert bundle.bins.cuts == (0.2, 0.4, 0.6, 0.8)
    # normalized-mode index stays inside [0, 1], so every record lands in a bin
    assert sum(reports.sci_histogram.values()) == len(blob_dataset)
    response = run_scenario(bundle, scenario_values())
    assert 0.0 <= response["sci"] <= 1.0


# ---------------------------------------------------------------------------
# Scenario execution


def scenario_values(**overrides):
    values = dict(
        solar_irradiance=5.0,
        temperature=30.0,
        wind_speed=4.0,
        aod=0.3,
        land_cover_class=30,
        water_proximity=20.0,
        elevation=200.0,
        month=3,
    )
    values.update(overrides)
    return values


def test_scenario_response_consistency(small_bundle):
    values = scenario_values()
    response = run_scenario(small_bundle, values)

    scaled_row = transform_row(small_bundle.scaler, np.array([values[n] for n in FEATURE_NAMES]))
    adjusted_row = adjust_row(scaled_row, small_bundle.schema)
    expected = compute_sci(adjusted_row, small_bundle.weights, small_bundle.bins)
    assert response["sci"] == expected.sci  # exact equality
    assert response["sci_class"] == expected.label

    probs = predict_proba(small_bundle.ensemble, scaled_row)
    assert response["probabilities"] == [float(p) for p in probs]
    assert abs(sum(response["probabilities"]) - 1.0) <= 1e-9

    margins = predict_margins(small_bundle.ensemble, scaled_row)
    lhs = response["shap_baseline"] + math.fsum(response["shap"].values())
    assert abs(lhs - margins[response["proxy_class"]]) < 1e-9


def test_scenario_all_classes_flag(small_bundle):
    response = run_scenario(small_bundle, scenario_values(), all_classes=True)
    assert len(response["shap_per_class"]) == 5
    assert len(response["shap_baselines"]) == 5
    predicted = response["proxy_class"]
    assert response["shap_per_class"][predicted] == response["shap"]


def test_scenario_missing_field_rejected(small_bundle):
    from sitescreen.errors import ShapeError

    values = scenario_values()
    del values["elevation"]
    with pytest.raises(ShapeError, match="elevation"):
        run_scenario(small_bundle, values)
