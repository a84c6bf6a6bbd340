"""Min-max scaling, directional adjustment of cost features, and AOD interpolation."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dataset import FEATURE_NAMES, Dataset, FeatureSchema, SiteRecord
from .errors import EmptyInputError, ShapeError, UnfillableSeriesError

N_FEATURES = len(FEATURE_NAMES)

STAGE_RAW = "raw"
STAGE_SCALED = "scaled"
STAGE_ADJUSTED = "adjusted"


@dataclass(frozen=True)
class FeatureMatrix:
    """Row-major (n, 8) float matrix in canonical feature order, tagged with its
    processing stage: raw, scaled (min-max into [0,1]), or adjusted (cost
    features flipped to 1 - value)."""

    values: np.ndarray
    stage: str

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[1] != N_FEATURES:
            raise ShapeError(f"feature matrix must be (n, {N_FEATURES}), got {v.shape}")

    def __len__(self) -> int:
        return self.values.shape[0]


def to_matrix(dataset: Dataset) -> FeatureMatrix:
    """Extract the raw feature matrix. AOD must be complete (interpolate first)."""
    rows = np.empty((len(dataset), N_FEATURES))
    for i, r in enumerate(dataset.records):
        if r.aod is None:
            raise EmptyInputError(
                f"record ({r.city}, {r.date.isoformat()}) has missing aod; run interpolate_missing first"
            )
        rows[i] = (
            r.solar_irradiance,
            r.temperature,
            r.wind_speed,
            r.aod,
            float(r.land_cover_class),
            r.water_proximity,
            r.elevation,
            float(r.month),
        )
    return FeatureMatrix(values=rows, stage=STAGE_RAW)


def row_from_values(values: dict[str, float]) -> np.ndarray:
    """Build a single raw-unit row from a name->value mapping in canonical order."""
    missing = [n for n in FEATURE_NAMES if n not in values]
    if missing:
        raise ShapeError(f"missing feature values: {missing}")
    return np.array([float(values[n]) for n in FEATURE_NAMES])


@dataclass(frozen=True)
class ScalingParams:
    """Per-feature training min/max. Columns where min == max are degenerate and
    map to the neutral midpoint 0.5 on transform."""

    minima: np.ndarray
    maxima: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        return self.minima == self.maxima

    def as_dict(self) -> dict[str, dict[str, float]]:
        return {
            name: {"min": float(self.minima[i]), "max": float(self.maxima[i])}
            for i, name in enumerate(FEATURE_NAMES)
        }


def fit_scaler(matrix: FeatureMatrix) -> ScalingParams:
    """Column-wise min/max of the training matrix."""
    if len(matrix) == 0:
        raise EmptyInputError("cannot fit scaler on an empty matrix")
    return ScalingParams(
        minima=matrix.values.min(axis=0).copy(),
        maxima=matrix.values.max(axis=0).copy(),
    )


def transform(params: ScalingParams, matrix: FeatureMatrix) -> FeatureMatrix:
    """Min-max scale into [0, 1], clamping out-of-range values; degenerate
    columns map to 0.5."""
    span = params.maxima - params.minima
    safe_span = np.where(span == 0.0, 1.0, span)
    scaled = (matrix.values - params.minima) / safe_span
    scaled = np.clip(scaled, 0.0, 1.0)
    scaled[:, params.degenerate] = 0.5
    return FeatureMatrix(values=scaled, stage=STAGE_SCALED)


def transform_row(params: ScalingParams, row: np.ndarray) -> np.ndarray:
    return transform(params, FeatureMatrix(values=np.asarray(row, dtype=float).reshape(1, -1), stage=STAGE_RAW)).values[0]


def directional_adjust(matrix: FeatureMatrix, schema: FeatureSchema) -> FeatureMatrix:
    """Flip cost-direction columns to 1 - value so larger always means more suitable.

    An involution: applying it to an adjusted matrix restores the scaled one."""
    if matrix.stage == STAGE_RAW:
        raise ShapeError("directional_adjust requires a scaled matrix, got raw")
    cost_idx = [i for i, name in enumerate(schema.names) if schema.direction(name) == "cost"]
    adjusted = matrix.values.copy()
    adjusted[:, cost_idx] = 1.0 - adjusted[:, cost_idx]
    stage = STAGE_SCALED if matrix.stage == STAGE_ADJUSTED else STAGE_ADJUSTED
    return FeatureMatrix(values=adjusted, stage=stage)


def adjust_row(row: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    return directional_adjust(
        FeatureMatrix(values=np.asarray(row, dtype=float).reshape(1, -1), stage=STAGE_SCALED),
        schema,
    ).values[0]


def interpolate_missing(dataset: Dataset) -> Dataset:
    """Fill missing AOD per city by linear interpolation on the day index,
    extending the nearest observed value across leading/trailing gaps.
    Originally present values are preserved exactly."""
    by_city: dict[str, list[SiteRecord]] = {}
    for r in dataset.records:
        by_city.setdefault(r.city, []).append(r)

    filled: list[SiteRecord] = []
    for city, records in by_city.items():
        days = np.array([r.date.toordinal() for r in records], dtype=float)
        observed = [(i, r.aod) for i, r in enumerate(records) if r.aod is not None]
        if not observed:
            raise UnfillableSeriesError(f"city '{city}' has no observed aod values")
        if len(observed) == len(records):
            filled.extend(records)
            continue
        obs_idx = np.array([i for i, _ in observed])
        obs_days = days[obs_idx]
        obs_vals = np.array([v for _, v in observed], dtype=float)
        # np.interp clamps to the boundary values outside the observed range,
        # which is exactly the nearest-value extension rule.
        series = np.interp(days, obs_days, obs_vals)
        for i, r in enumerate(records):
            if r.aod is not None:
                filled.append(r)
            else:
                filled.append(replace(r, aod=float(series[i])))
    return Dataset.from_records(filled)
