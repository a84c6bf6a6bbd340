"""Exact Shapley attribution for the boosted ensemble, in margin space.

The coalition value of a feature subset S is the interventional expectation
over a background set: replace every feature outside S with the background
row's value, evaluate the ensemble margin, and average. With eight features
all 2^8 coalition values are computed once per instance and shared across
features and classes; the classical permutation-weighted sum over subsets then
gives each feature's exact Shapley value. Sums use math.fsum so results do not
depend on enumeration order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import FEATURE_NAMES
from .errors import DegenerateImportanceError, EmptyBackgroundError, EmptyInputError, ShapeError
from .gbt import GbtEnsemble
from .index import CompositeWeights
from .preprocess import FeatureMatrix


@dataclass(frozen=True)
class BackgroundSet:
    """Reference rows defining the expectation for features absent from a coalition."""

    rows: np.ndarray = field(repr=False)
    seed: int
    size: int

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[0] == 0:
            raise EmptyBackgroundError("background set must contain at least one row")


def sample_background(matrix: FeatureMatrix, size: int, seed: int) -> BackgroundSet:
    """Draw ``size`` rows without replacement (all rows when fewer exist)."""
    n = len(matrix)
    if n == 0:
        raise EmptyBackgroundError("cannot sample a background from an empty matrix")
    rng = np.random.default_rng(seed)
    if size >= n:
        chosen = np.arange(n)
    else:
        chosen = np.sort(rng.choice(n, size=size, replace=False))
    rows = matrix.values[chosen].copy()
    return BackgroundSet(rows=rows, seed=seed, size=rows.shape[0])


@dataclass(frozen=True)
class ShapAttribution:
    """Per-class Shapley vectors for one instance; baselines are the mean
    background margins, so baseline + sum(values) equals the instance margin."""

    instance: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)  # (n_classes, n_features)
    baselines: np.ndarray = field(repr=False)  # (n_classes,)


@dataclass(frozen=True)
class ImportanceTable:
    """Global mean-|SHAP| per feature, averaged over sampled instances and
    classes, with the Eq-style normalized weights derived from it."""

    feature_names: tuple[str, ...]
    mean_abs_shap: np.ndarray = field(repr=False)
    normalized: np.ndarray | None = field(repr=False, default=None)

    @staticmethod
    def from_values(values, feature_names: tuple[str, ...] = FEATURE_NAMES) -> "ImportanceTable":
        raw = np.asarray(values, dtype=float)
        if raw.shape != (len(feature_names),):
            raise ShapeError(f"importance values must have shape ({len(feature_names)},)")
        total = float(raw.sum())
        normalized = raw / total if total > 0 else None
        return ImportanceTable(
            feature_names=tuple(feature_names), mean_abs_shap=raw, normalized=normalized
        )

    def ranked(self) -> list[tuple[str, float]]:
        order = np.argsort(-self.mean_abs_shap, kind="stable")
        return [(self.feature_names[i], float(self.mean_abs_shap[i])) for i in order]


def _subset_weights(n_features: int) -> list[float]:
    # |S|! (n - |S| - 1)! / n!  for |S| = 0 .. n-1
    n_fact = math.factorial(n_features)
    return [
        math.factorial(s) * math.factorial(n_features - s - 1) / n_fact
        for s in range(n_features)
    ]


def coalition_values(
    ensemble: GbtEnsemble, instance: np.ndarray, background: BackgroundSet
) -> np.ndarray:
    """Value table v[mask, class] over all 2^n feature coalitions.

    mask bit j set means feature j is taken from the instance; unset features
    come from each background row in turn, and the margins are averaged.
    """
    n = ensemble.n_features
    instance = np.asarray(instance, dtype=np.float64)
    if instance.shape != (n,):
        raise ShapeError(f"instance must have {n} features, got shape {instance.shape}")
    if background.rows.shape[1] != n:
        raise ShapeError("background arity does not match the ensemble")

    m = background.rows.shape[0]
    n_masks = 1 << n
    bits = ((np.arange(n_masks)[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    composite = np.where(
        np.repeat(bits, m, axis=0),
        instance[None, :],
        np.tile(background.rows, (n_masks, 1)),
    )
    margins = ensemble.margins_batch(composite)

    table = np.empty((n_masks, ensemble.n_classes))
    for mask in range(n_masks):
        block = margins[mask * m : (mask + 1) * m]
        for c in range(ensemble.n_classes):
            table[mask, c] = math.fsum(block[:, c].tolist()) / m
    return table


def _phi_from_table(table_column: np.ndarray, n_features: int) -> np.ndarray:
    weights = _subset_weights(n_features)
    popcount = [bin(mask).count("1") for mask in range(1 << n_features)]
    phi = np.empty(n_features)
    for j in range(n_features):
        bit = 1 << j
        terms = [
            weights[popcount[mask]] * (table_column[mask | bit] - table_column[mask])
            for mask in range(1 << n_features)
            if not mask & bit
        ]
        phi[j] = math.fsum(terms)
    return phi


def shap_exact(
    ensemble: GbtEnsemble,
    instance,
    background: BackgroundSet,
    class_id: int,
) -> tuple[np.ndarray, float]:
    """Exact Shapley values (and baseline) for one class of one instance."""
    if not 0 <= class_id < ensemble.n_classes:
        raise ShapeError(f"class_id {class_id} out of range 0..{ensemble.n_classes - 1}")
    table = coalition_values(ensemble, np.asarray(instance, dtype=float), background)
    phi = _phi_from_table(table[:, class_id], ensemble.n_features)
    return phi, float(table[0, class_id])


def shap_all_classes(
    ensemble: GbtEnsemble, instance, background: BackgroundSet
) -> ShapAttribution:
    """Shapley values for every class, sharing one coalition-value table."""
    instance = np.asarray(instance, dtype=float)
    table = coalition_values(ensemble, instance, background)
    values = np.empty((ensemble.n_classes, ensemble.n_features))
    for c in range(ensemble.n_classes):
        values[c] = _phi_from_table(table[:, c], ensemble.n_features)
    return ShapAttribution(instance=instance, values=values, baselines=table[0].copy())


def global_importance(
    ensemble: GbtEnsemble, sample: FeatureMatrix, background: BackgroundSet
) -> ImportanceTable:
    """Mean |Shapley value| per feature over all sample rows and classes."""
    if len(sample) == 0:
        raise EmptyInputError("global importance needs a non-empty instance sample")
    acc = np.zeros(ensemble.n_features)
    for row in sample.values:
        attribution = shap_all_classes(ensemble, row, background)
        acc += np.abs(attribution.values).sum(axis=0)
    mean_abs = acc / (len(sample) * ensemble.n_classes)
    return ImportanceTable.from_values(mean_abs)


def weights_from_importance(table: ImportanceTable, mode: str = "raw") -> CompositeWeights:
    """Composite-index weights from a global importance table.

    Normalized weights divide each mean-|SHAP| by their total (so they sum to
    one); the raw copy keeps the original magnitudes. ``mode`` selects which
    set drives the index downstream.
    """
    raw = table.mean_abs_shap
    total = float(raw.sum())
    if total <= 0.0 or not np.any(raw > 0):
        raise DegenerateImportanceError("all feature importances are zero")
    return CompositeWeights(
        feature_names=table.feature_names,
        raw=raw.copy(),
        normalized=raw / total,
        mode=mode,
    )
