"""Scaling, directional adjustment, and AOD interpolation."""

from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sitescreen.dataset import Dataset, canonical_schema
from sitescreen.errors import EmptyInputError, UnfillableSeriesError
from sitescreen.preprocess import (
    STAGE_RAW,
    STAGE_SCALED,
    FeatureMatrix,
    directional_adjust,
    fit_scaler,
    interpolate_missing,
    to_matrix,
    transform,
)
from .test_dataset import make_record


def raw_matrix(values):
    return FeatureMatrix(values=np.asarray(values, dtype=float), stage=STAGE_RAW)


def full_matrix(column, n_cols=8):
    # One interesting column, the rest constant 1..n
    vals = np.ones((len(column), n_cols))
    vals[:, 0] = column
    return raw_matrix(vals)


def test_fit_scaler_min_max():
    params = fit_scaler(full_matrix([10.0, 20.0, 30.0]))
    assert params.minima[0] == 10.0
    assert params.maxima[0] == 30.0


def test_fit_scaler_degenerate_flag():
    params = fit_scaler(full_matrix([5.0, 5.0, 5.0]))
    assert params.degenerate[0]


def test_fit_scaler_empty_rejected():
    with pytest.raises(EmptyInputError):
        fit_scaler(raw_matrix(np.empty((0, 8))))


def test_fit_scaler_matches_independent_scan():
    rng = np.random.default_rng(3)
    values = rng.normal(size=(200, 8))
    params = fit_scaler(raw_matrix(values))
    # independent scan: plain python loop
    for j in range(8):
        lo, hi = values[0, j], values[0, j]
        for i in range(values.shape[0]):
            lo = min(lo, values[i, j])
            hi = max(hi, values[i, j])
        assert params.minima[j] == lo
        assert params.maxima[j] == hi


def test_transform_endpoints_and_midpoint():
    m = full_matrix([10.0, 20.0, 30.0])
    scaled = transform(fit_scaler(m), m)
    assert scaled.values[:, 0].tolist() == [0.0, 0.5, 1.0]
    assert scaled.stage == STAGE_SCALED


def test_transform_clamps_out_of_range():
    params = fit_scaler(full_matrix([10.0, 30.0]))
    out = transform(params, full_matrix([35.0]))
    assert out.values[0, 0] == 1.0
    out = transform(params, full_matrix([-5.0]))
    assert out.values[0, 0] == 0.0


def test_transform_degenerate_maps_to_half():
    params = fit_scaler(full_matrix([5.0, 5.0]))
    out = transform(params, full_matrix([5.0]))
    assert out.values[0, 0] == 0.5


@given(st.lists(st.floats(-1e9, 1e9, allow_nan=False), min_size=1, max_size=30))
@settings(max_examples=60, deadline=None)
def test_transform_always_in_unit_interval(column):
    train = full_matrix([0.0, 1.0, 2.0])
    params = fit_scaler(train)
    out = transform(params, full_matrix(column))
    assert np.all(out.values >= 0.0)
    assert np.all(out.values <= 1.0)


def test_transform_attains_both_endpoints_on_training_data():
    rng = np.random.default_rng(11)
    values = rng.normal(size=(50, 8))
    m = raw_matrix(values)
    out = transform(fit_scaler(m), m)
    for j in range(8):
        assert out.values[:, j].min() == 0.0
        assert out.values[:, j].max() == 1.0


def test_directional_adjust_flips_cost_columns():
    schema = canonical_schema()
    scaled = FeatureMatrix(values=np.full((1, 8), 0.2), stage=STAGE_SCALED)
    adjusted = directional_adjust(scaled, schema)
    by_name = dict(zip(schema.names, adjusted.values[0]))
    assert by_name["aod"] == pytest.approx(0.8)
    assert by_name["water_proximity"] == pytest.approx(0.8)
    assert by_name["elevation"] == pytest.approx(0.8)
    assert by_name["solar_irradiance"] == pytest.approx(0.2)


def test_directional_adjust_is_involution():
    schema = canonical_schema()
    rng = np.random.default_rng(4)
    scaled = FeatureMatrix(values=rng.random((20, 8)), stage=STAGE_SCALED)
    twice = directional_adjust(directional_adjust(scaled, schema), schema)
    assert np.array_equal(twice.values, scaled.values)
    assert twice.stage == STAGE_SCALED


# ---------------------------------------------------------------------------
# Interpolation


def series_dataset(aods, start=date(2021, 3, 1)):
    records = [
        make_record(day=start + timedelta(days=i), aod=aod) for i, aod in enumerate(aods)
    ]
    return Dataset.from_records(records)


def aod_series(dataset):
    return [r.aod for r in dataset.records]


def test_interpolate_midpoint():
    out = interpolate_missing(series_dataset([0.2, None, 0.4]))
    assert aod_series(out) == pytest.approx([0.2, 0.3, 0.4])


def test_interpolate_leading_extension():
    out = interpolate_missing(series_dataset([None, 0.5]))
    assert aod_series(out) == pytest.approx([0.5, 0.5])


def test_interpolate_two_gap_linear():
    out = interpolate_missing(series_dataset([0.1, None, None, 0.7]))
    assert aod_series(out) == pytest.approx([0.1, 0.3, 0.5, 0.7])


def test_interpolate_preserves_observed_values():
    original = [0.123456789, None, 0.987654321, None, None, 0.5]
    out = interpolate_missing(series_dataset(original))
    filled = aod_series(out)
    for i, v in enumerate(original):
        if v is not None:
            assert filled[i] == v
    assert all(v is not None for v in filled)


def test_interpolate_all_missing_names_city():
    with pytest.raises(UnfillableSeriesError, match="Muscat"):
        interpolate_missing(series_dataset([None, None]))


def test_interpolate_respects_day_gaps():
    # Observations 3 days apart: value at the missing middle date is 1/3 along.
    records = [
        make_record(day=date(2021, 3, 1), aod=0.0),
        make_record(day=date(2021, 3, 2), aod=None),
        make_record(day=date(2021, 3, 4), aod=0.3),
    ]
    out = interpolate_missing(Dataset.from_records(records))
    assert aod_series(out)[1] == pytest.approx(0.1)


def test_to_matrix_requires_complete_aod():
    with pytest.raises(EmptyInputError):
        to_matrix(series_dataset([0.2, None]))
