"""Composite suitability index: SHAP-derived weighted sum of adjusted features,
binned into five ordinal classes, plus per-city ranking."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import CLASS_LABELS, Dataset
from .errors import ParameterError, ShapeError
from .preprocess import directional_adjust, interpolate_missing, to_matrix, transform


@dataclass(frozen=True)
class CompositeWeights:
    """Per-feature index weights. ``raw`` carries the mean-|SHAP| magnitudes,
    ``normalized`` the same values rescaled to sum to one; ``mode`` selects
    which set the index uses. Raw mode matches the published 2.4..5.4 bin
    scale; normalized mode keeps the index inside [0, 1]."""

    feature_names: tuple[str, ...]
    raw: np.ndarray = field(repr=False)
    normalized: np.ndarray = field(repr=False)
    mode: str = "raw"

    def __post_init__(self):
        if self.mode not in ("raw", "normalized"):
            raise ParameterError(f"weight mode must be 'raw' or 'normalized', got {self.mode!r}")
        if self.raw.shape != (len(self.feature_names),):
            raise ShapeError("raw weights do not match the feature names")
        if np.any(self.raw < 0) or np.any(self.normalized < 0):
            raise ParameterError("weights must be >= 0")

    @property
    def values(self) -> np.ndarray:
        return self.raw if self.mode == "raw" else self.normalized


@dataclass(frozen=True)
class BinThresholds:
    """Ascending cut points splitting the index into five classes. Boundaries
    are left-closed upward: a value equal to a cut belongs to the upper class."""

    cuts: tuple[float, float, float, float] = (2.4, 3.4, 4.4, 5.4)

    def __post_init__(self):
        if len(self.cuts) != 4 or any(a >= b for a, b in zip(self.cuts, self.cuts[1:])):
            raise ParameterError(f"bin cuts must be four strictly ascending values, got {self.cuts}")


@dataclass(frozen=True)
class SuitabilityResult:
    sci: float
    label: str
    class_id: int
    contributions: dict[str, float]
    mode: str


def bin_sci(value: float, thresholds: BinThresholds = BinThresholds()) -> str:
    return CLASS_LABELS[_bin_index(value, thresholds)]


def _bin_index(value: float, thresholds: BinThresholds) -> int:
    idx = 0
    for cut in thresholds.cuts:
        if value >= cut:
            idx += 1
    return idx


def compute_sci(
    adjusted_row,
    weights: CompositeWeights,
    thresholds: BinThresholds = BinThresholds(),
) -> SuitabilityResult:
    """Weighted sum of the directionally adjusted, scaled feature row."""
    row = np.asarray(adjusted_row, dtype=float)
    if row.shape != (len(weights.feature_names),):
        raise ShapeError(f"expected a row of {len(weights.feature_names)} features, got {row.shape}")
    w = weights.values
    contributions = {name: float(w[i] * row[i]) for i, name in enumerate(weights.feature_names)}
    sci = math.fsum(contributions.values())
    class_id = _bin_index(sci, thresholds)
    return SuitabilityResult(
        sci=sci,
        label=CLASS_LABELS[class_id],
        class_id=class_id,
        contributions=contributions,
        mode=weights.mode,
    )


def sci_batch(adjusted: np.ndarray, weights: CompositeWeights) -> np.ndarray:
    return adjusted @ weights.values


@dataclass(frozen=True)
class CityRanking:
    city: str
    mean_sci: float
    modal_class: str
    histogram: dict[str, int]


def rank_sites(dataset: Dataset, bundle) -> list[CityRanking]:
    """Per-city mean index over all records, sorted descending, with the
    record-level class histogram (ties in the modal class go to the lower
    class). ``bundle`` is a trained ModelBundle."""
    completed = interpolate_missing(dataset)
    scaled = transform(bundle.scaler, to_matrix(completed))
    adjusted = directional_adjust(scaled, bundle.schema)
    scis = sci_batch(adjusted.values, bundle.weights)

    by_city: dict[str, list[int]] = {}
    for i, record in enumerate(completed.records):
        by_city.setdefault(record.city, []).append(i)

    rankings: list[CityRanking] = []
    for city, idx in by_city.items():
        city_scis = scis[idx]
        counts = [0] * len(CLASS_LABELS)
        for value in city_scis:
            counts[_bin_index(float(value), bundle.bins)] += 1
        modal = int(np.argmax(counts))
        rankings.append(
            CityRanking(
                city=city,
                mean_sci=float(city_scis.mean()),
                modal_class=CLASS_LABELS[modal],
                histogram={CLASS_LABELS[i]: counts[i] for i in range(len(CLASS_LABELS))},
            )
        )
    rankings.sort(key=lambda r: (-r.mean_sci, r.city))
    return rankings
