"""End-to-end orchestration: interpolation, scaling, proxy clustering, boosted
training, global attribution, composite weights, and the persisted model bundle."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from . import cluster as clustering
from . import gbt
from . import shapley
from .dataset import CLASS_LABELS, FEATURE_NAMES, Dataset, FeatureSchema, canonical_schema, write_csv
from .errors import (
    BundleFormatError,
    ParameterError,
    PipelineStageError,
    SiteScreenError,
    UnsupportedVersionError,
)
from .index import BinThresholds, CompositeWeights, bin_sci, compute_sci, sci_batch
from .preprocess import (
    FeatureMatrix,
    ScalingParams,
    adjust_row,
    directional_adjust,
    fit_scaler,
    interpolate_missing,
    row_from_values,
    to_matrix,
    transform,
    transform_row,
)

BUNDLE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    """Everything that determines a run: one config plus one dataset fixes the
    bundle byte-for-byte. ``created_at`` defaults to absent so that identical
    runs stay byte-identical; set it explicitly when provenance matters."""

    k_min: int = 2
    k_max: int = 8
    n_init: int = 10
    kmeans_max_iter: int = 300
    kmeans_tol: float = 1e-6
    learning_rate: float = 0.1
    max_depth: int = 4
    rounds: int = 200
    patience: int = 20
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_hessian: float = 1e-3
    validation_fraction: float = 0.2
    background_size: int = 128
    importance_sample_size: int = 512
    weight_mode: str = "raw"
    bin_cuts: tuple[float, float, float, float] = (2.4, 3.4, 4.4, 5.4)
    seed: int = 7
    created_at: str | None = None

    def gbt_params(self, n_classes: int) -> gbt.GbtParams:
        return gbt.GbtParams(
            learning_rate=self.learning_rate,
            max_depth=self.max_depth,
            rounds=self.rounds,
            patience=self.patience,
            reg_lambda=self.reg_lambda,
            gamma=self.gamma,
            min_child_hessian=self.min_child_hessian,
            n_classes=n_classes,
        )

    @staticmethod
    def from_dict(doc: dict) -> "PipelineConfig":
        known = {f.name for f in PipelineConfig.__dataclass_fields__.values()}
        unknown = set(doc) - known
        if unknown:
            raise ParameterError(f"unknown config fields: {sorted(unknown)}")
        if "bin_cuts" in doc:
            doc = {**doc, "bin_cuts": tuple(doc["bin_cuts"])}
        return PipelineConfig(**doc)


def _derived_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)).generate_state(1)[0])


@dataclass
class ModelBundle:
    """The persisted union of everything the scenario service needs."""

    version: int
    schema: FeatureSchema
    scaler: ScalingParams
    kmeans: clustering.KMeansModel
    labeling: clustering.ProxyLabeling
    ensemble: gbt.GbtEnsemble
    importance: shapley.ImportanceTable
    weights: CompositeWeights
    bins: BinThresholds
    background: shapley.BackgroundSet
    dataset_fingerprint: str
    config: PipelineConfig
    created_at: str | None = None


@dataclass(frozen=True)
class PipelineReports:
    k_selection: clustering.KSelectionReport
    train_history: gbt.TrainHistory
    evaluation: gbt.EvalReport
    importance: shapley.ImportanceTable
    sci_histogram: dict[str, int]


def dataset_fingerprint(dataset: Dataset) -> str:
    return hashlib.sha256(write_csv(dataset).encode("utf-8")).hexdigest()


def run_pipeline(dataset: Dataset, config: PipelineConfig = PipelineConfig()) -> tuple[ModelBundle, PipelineReports]:
    """Execute the four stages in order; deterministic for fixed (dataset, config)."""

    def stage(name: str, fn):
        try:
            return fn()
        except SiteScreenError as exc:
            raise PipelineStageError(name, exc) from exc

    completed = stage("interpolate", lambda: interpolate_missing(dataset))

    def _scale():
        raw = to_matrix(completed)
        scaler = fit_scaler(raw)
        scaled = transform(scaler, raw)
        adjusted = directional_adjust(scaled, completed.schema)
        return scaler, scaled, adjusted

    scaler, scaled, adjusted = stage("scale", _scale)

    def _cluster():
        report = clustering.select_k(
            scaled,
            config.k_min,
            config.k_max,
            config.seed,
            n_init=config.n_init,
            max_iter=config.kmeans_max_iter,
            tol=config.kmeans_tol,
        )
        model = clustering.fit_best_of(
            scaled,
            report.chosen_k,
            config.seed,
            n_init=config.n_init,
            max_iter=config.kmeans_max_iter,
            tol=config.kmeans_tol,
        )
        labels = clustering.assign(model, scaled)
        labeling = clustering.rank_clusters(model, adjusted, labels)
        return report, model, labeling.classes_for(labels), labeling

    k_report, kmeans_model, proxy_labels, labeling = stage("cluster", _cluster)

    gbt_seed = _derived_seed(config.seed, 1)

    def _train():
        params = config.gbt_params(n_classes=kmeans_model.k)
        return gbt.train(scaled, proxy_labels, params, config.validation_fraction, gbt_seed)

    ensemble, history = stage("train", _train)

    def _evaluate():
        _, val_idx = gbt.stratified_split(proxy_labels, config.validation_fraction, gbt_seed)
        if val_idx.shape[0] == 0:
            eval_matrix, eval_labels = scaled, proxy_labels
        else:
            eval_matrix = FeatureMatrix(values=scaled.values[val_idx], stage=scaled.stage)
            eval_labels = proxy_labels[val_idx]
        return gbt.evaluate(ensemble, eval_matrix, eval_labels)

    eval_report = stage("evaluate", _evaluate)

    def _explain():
        background = shapley.sample_background(
            scaled, config.background_size, _derived_seed(config.seed, 2)
        )
        n = len(scaled)
        size = min(config.importance_sample_size, n)
        rng = np.random.default_rng(_derived_seed(config.seed, 3))
        chosen = np.sort(rng.choice(n, size=size, replace=False))
        sample = FeatureMatrix(values=scaled.values[chosen], stage=scaled.stage)
        importance = shapley.global_importance(ensemble, sample, background)
        weights = shapley.weights_from_importance(importance, mode=config.weight_mode)
        return background, importance, weights

    background, importance, weights = stage("explain", _explain)

    bins = BinThresholds(cuts=config.bin_cuts)

    def _index():
        scis = sci_batch(adjusted.values, weights)
        histogram = {label: 0 for label in CLASS_LABELS}
        for value in scis:
            histogram[bin_sci(float(value), bins)] += 1
        return histogram

    sci_histogram = stage("index", _index)

    bundle = ModelBundle(
        version=BUNDLE_FORMAT_VERSION,
        schema=completed.schema,
        scaler=scaler,
        kmeans=kmeans_model,
        labeling=labeling,
        ensemble=ensemble,
        importance=importance,
        weights=weights,
        bins=bins,
        background=background,
        dataset_fingerprint=dataset_fingerprint(dataset),
        config=config,
        created_at=config.created_at,
    )
    reports = PipelineReports(
        k_selection=k_report,
        train_history=history,
        evaluation=eval_report,
        importance=importance,
        sci_histogram=sci_histogram,
    )
    return bundle, reports


# ---------------------------------------------------------------------------
# Scenario execution (shared by the HTTP service and the CLI)


def run_scenario(bundle: ModelBundle, raw_values: dict[str, float], all_classes: bool = False) -> dict[str, Any]:
    """Score one raw-unit feature vector: proxy class, probabilities, Shapley
    values for the predicted class, and the composite index breakdown."""
    raw_row = row_from_values(raw_values)
    scaled_row = transform_row(bundle.scaler, raw_row)
    probs = gbt.predict_proba(bundle.ensemble, scaled_row)
    predicted = int(np.argmax(probs))

    attribution = shapley.shap_all_classes(bundle.ensemble, scaled_row, bundle.background)
    adjusted_row = adjust_row(scaled_row, bundle.schema)
    sci = compute_sci(adjusted_row, bundle.weights, bundle.bins)

    response: dict[str, Any] = {
        "proxy_class": predicted,
        "proxy_label": bundle.labeling.label_for_class(predicted),
        "probabilities": [float(p) for p in probs],
        "shap": {
            name: float(attribution.values[predicted, i]) for i, name in enumerate(FEATURE_NAMES)
        },
        "shap_baseline": float(attribution.baselines[predicted]),
        "sci": sci.sci,
        "sci_class": sci.label,
        "contributions": sci.contributions,
    }
    if all_classes:
        response["shap_per_class"] = [
            {name: float(attribution.values[c, i]) for i, name in enumerate(FEATURE_NAMES)}
            for c in range(bundle.ensemble.n_classes)
        ]
        response["shap_baselines"] = [float(b) for b in attribution.baselines]
    return response


# ---------------------------------------------------------------------------
# Persistence


def _bundle_to_doc(bundle: ModelBundle) -> dict:
    return {
        "format_version": bundle.version,
        "feature_names": list(FEATURE_NAMES),
        "scaler": {
            "min": [float(v) for v in bundle.scaler.minima],
            "max": [float(v) for v in bundle.scaler.maxima],
        },
        "kmeans": {
            "k": bundle.kmeans.k,
            "centroids": [[float(v) for v in row] for row in bundle.kmeans.centroids],
            "inertia": float(bundle.kmeans.inertia),
            "iterations_run": bundle.kmeans.iterations_run,
            "seed": bundle.kmeans.seed,
        },
        "labeling": {
            "cluster_to_class": {str(k): v for k, v in sorted(bundle.labeling.cluster_to_class.items())},
            "class_labels": list(bundle.labeling.class_labels),
            "cluster_scores": [float(s) for s in bundle.labeling.cluster_scores],
            "cluster_feature_means": [
                [float(v) for v in row] for row in bundle.labeling.cluster_feature_means
            ],
        },
        "ensemble": gbt.ensemble_to_dict(bundle.ensemble),
        "importance": {
            "mean_abs_shap": [float(v) for v in bundle.importance.mean_abs_shap],
            "normalized": None
            if bundle.importance.normalized is None
            else [float(v) for v in bundle.importance.normalized],
        },
        "weights": {
            "raw": [float(v) for v in bundle.weights.raw],
            "normalized": [float(v) for v in bundle.weights.normalized],
            "mode": bundle.weights.mode,
        },
        "bins": list(bundle.bins.cuts),
        "background": {
            "rows": [[float(v) for v in row] for row in bundle.background.rows],
            "seed": bundle.background.seed,
            "size": bundle.background.size,
        },
        "dataset_fingerprint": bundle.dataset_fingerprint,
        "config": {**asdict(bundle.config), "bin_cuts": list(bundle.config.bin_cuts)},
        "created_at": bundle.created_at,
    }


def save_bundle(bundle: ModelBundle, destination) -> None:
    """Write canonical JSON (sorted keys, full float round-trip precision)."""
    text = json.dumps(_bundle_to_doc(bundle), sort_keys=True, indent=1)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8") as fh:
            fh.write(text)


def bundle_to_json(bundle: ModelBundle) -> str:
    return json.dumps(_bundle_to_doc(bundle), sort_keys=True, indent=1)


def _require(doc: dict, key: str, path: str):
    if not isinstance(doc, dict) or key not in doc:
        raise BundleFormatError(f"{path}: missing field '{key}'")
    return doc[key]


def load_bundle(source) -> ModelBundle:
    """Parse and validate a persisted bundle; unknown versions are rejected."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BundleFormatError(f"bundle: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise BundleFormatError("bundle: top level must be an object")

    version = _require(doc, "format_version", "bundle")
    if version != BUNDLE_FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"bundle format version {version!r} is not supported (expected {BUNDLE_FORMAT_VERSION})"
        )

    try:
        scaler_doc = _require(doc, "scaler", "bundle")
        scaler = ScalingParams(
            minima=np.array(_require(scaler_doc, "min", "bundle.scaler"), dtype=float),
            maxima=np.array(_require(scaler_doc, "max", "bundle.scaler"), dtype=float),
        )
        km_doc = _require(doc, "kmeans", "bundle")
        kmeans_model = clustering.KMeansModel(
            k=int(_require(km_doc, "k", "bundle.kmeans")),
            centroids=np.array(_require(km_doc, "centroids", "bundle.kmeans"), dtype=float),
            inertia=float(_require(km_doc, "inertia", "bundle.kmeans")),
            iterations_run=int(_require(km_doc, "iterations_run", "bundle.kmeans")),
            seed=int(_require(km_doc, "seed", "bundle.kmeans")),
        )
        lab_doc = _require(doc, "labeling", "bundle")
        labeling = clustering.ProxyLabeling(
            cluster_to_class={
                int(k): int(v)
                for k, v in _require(lab_doc, "cluster_to_class", "bundle.labeling").items()
            },
            class_labels=tuple(_require(lab_doc, "class_labels", "bundle.labeling")),
            cluster_feature_means=np.array(
                _require(lab_doc, "cluster_feature_means", "bundle.labeling"), dtype=float
            ),
            cluster_scores=tuple(
                float(s) for s in _require(lab_doc, "cluster_scores", "bundle.labeling")
            ),
        )
        ensemble = gbt.ensemble_from_dict(_require(doc, "ensemble", "bundle"))
        imp_doc = _require(doc, "importance", "bundle")
        importance = shapley.ImportanceTable.from_values(
            _require(imp_doc, "mean_abs_shap", "bundle.importance")
        )
        w_doc = _require(doc, "weights", "bundle")
        weights = CompositeWeights(
            feature_names=FEATURE_NAMES,
            raw=np.array(_require(w_doc, "raw", "bundle.weights"), dtype=float),
            normalized=np.array(_require(w_doc, "normalized", "bundle.weights"), dtype=float),
            mode=str(_require(w_doc, "mode", "bundle.weights")),
        )
        bins = BinThresholds(cuts=tuple(float(c) for c in _require(doc, "bins", "bundle")))
        bg_doc = _require(doc, "background", "bundle")
        background = shapley.BackgroundSet(
            rows=np.array(_require(bg_doc, "rows", "bundle.background"), dtype=float),
            seed=int(_require(bg_doc, "seed", "bundle.background")),
            size=int(_require(bg_doc, "size", "bundle.background")),
        )
        config = PipelineConfig.from_dict(_require(doc, "config", "bundle"))
        fingerprint = str(_require(doc, "dataset_fingerprint", "bundle"))
    except (TypeError, ValueError) as exc:
        raise BundleFormatError(f"bundle: malformed content ({exc})") from None

    if scaler.minima.shape != (len(FEATURE_NAMES),) or scaler.maxima.shape != (len(FEATURE_NAMES),):
        raise BundleFormatError("bundle.scaler: min/max must have one entry per feature")

    return ModelBundle(
        version=int(version),
        schema=canonical_schema(),
        scaler=scaler,
        kmeans=kmeans_model,
        labeling=labeling,
        ensemble=ensemble,
        importance=importance,
        weights=weights,
        bins=bins,
        background=background,
        dataset_fingerprint=fingerprint,
        config=config,
        created_at=doc.get("created_at"),
    )


def reports_to_doc(reports: PipelineReports) -> dict:
    history = reports.train_history
    return {
        "k_selection": {
            "candidates": list(reports.k_selection.candidates),
            "inertias": [float(v) for v in reports.k_selection.inertias],
            "silhouettes": [float(v) for v in reports.k_selection.silhouettes],
            "chosen_k": reports.k_selection.chosen_k,
            "elbow_k": reports.k_selection.elbow_k,
        },
        "train_history": {
            "train_loss": list(history.train_loss),
            "train_accuracy": list(history.train_accuracy),
            "val_loss": list(history.val_loss),
            "val_accuracy": list(history.val_accuracy),
            "best_round": history.best_round,
        },
        "evaluation": {
            "confusion": reports.evaluation.confusion.tolist(),
            "support": list(reports.evaluation.support),
            "precision": list(reports.evaluation.precision),
            "recall": list(reports.evaluation.recall),
            "f1": list(reports.evaluation.f1),
            "accuracy": reports.evaluation.accuracy,
            "macro_precision": reports.evaluation.macro_precision,
            "macro_recall": reports.evaluation.macro_recall,
            "macro_f1": reports.evaluation.macro_f1,
            "weighted_precision": reports.evaluation.weighted_precision,
            "weighted_recall": reports.evaluation.weighted_recall,
            "weighted_f1": reports.evaluation.weighted_f1,
            "zero_predicted_classes": list(reports.evaluation.zero_predicted_classes),
            "zero_support_classes": list(reports.evaluation.zero_support_classes),
        },
        "importance": {
            name: value for name, value in reports.importance.ranked()
        },
        "sci_histogram": reports.sci_histogram,
    }
