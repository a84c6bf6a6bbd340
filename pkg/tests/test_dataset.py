"""Dataset schema, CSV round-trips, the synthetic generator, and EDA statistics."""

import math
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sitescreen.dataset import (
    CSV_COLUMNS,
    CityProfile,
    Dataset,
    SiteRecord,
    default_city_profiles,
    eda_summary,
    generate_synthetic,
    load_csv,
    pearson,
    skewness,
    write_csv,
)
from sitescreen.errors import (
    DateRangeError,
    DuplicateKeyError,
    EmptyInputError,
    ParseError,
    SchemaError,
)


def make_record(city="Muscat", day=date(2021, 6, 1), aod=0.3, **overrides):
    fields = dict(
        city=city,
        date=day,
        solar_irradiance=6.1,
        temperature=31.0,
        wind_speed=3.2,
        aod=aod,
        land_cover_class=60,
        water_proximity=2.0,
        elevation=15.0,
        month=day.month,
    )
    fields.update(overrides)
    return SiteRecord(**fields)


# ---------------------------------------------------------------------------
# CSV I/O


def test_csv_roundtrip_three_rows():
    records = [make_record(day=date(2021, 6, 1) + timedelta(days=i)) for i in range(3)]
    ds = Dataset.from_records(records)
    again = load_csv(write_csv(ds))
    assert again == ds
    assert len(again) == 3


def test_csv_header_exact():
    text = write_csv(Dataset.from_records([]))
    assert text == ",".join(CSV_COLUMNS) + "\n"


def test_single_record_is_two_lines():
    ds = Dataset.from_records([make_record()])
    assert len(write_csv(ds).splitlines()) == 2


def test_wrong_header_column_named():
    text = write_csv(Dataset.from_records([make_record()]))
    bad = text.replace("aod", "AOD", 1)
    with pytest.raises(SchemaError, match="aod"):
        load_csv(bad)


def test_non_numeric_cell_reports_row():
    text = write_csv(Dataset.from_records([make_record()]))
    bad = text.replace("3.2", "fast")
    with pytest.raises(ParseError, match="row 2"):
        load_csv(bad)


def test_duplicate_city_date_rejected():
    r = make_record()
    with pytest.raises(DuplicateKeyError):
        Dataset.from_records([r, make_record(solar_irradiance=5.0)])


def test_missing_aod_loads_as_none():
    ds = Dataset.from_records([make_record(aod=None)])
    again = load_csv(write_csv(ds))
    assert again.records[0].aod is None


def test_month_mismatch_rejected():
    text = write_csv(Dataset.from_records([make_record()]))
    bad = text.replace("2021-06-01", "2021-07-01")
    with pytest.raises(ParseError, match="month"):
        load_csv(bad)


def test_records_sorted_by_city_then_date():
    records = [
        make_record(city="Sur", day=date(2021, 6, 2)),
        make_record(city="Muscat", day=date(2021, 6, 3)),
        make_record(city="Sur", day=date(2021, 6, 1)),
    ]
    ds = Dataset.from_records(records)
    keys = [(r.city, r.date) for r in ds.records]
    assert keys == sorted(keys)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
nonneg = st.floats(min_value=0, allow_nan=False, allow_infinity=False, width=64)


@given(
    rows=st.lists(
        st.tuples(nonneg, finite, nonneg, st.one_of(st.none(), nonneg),
                  st.integers(0, 100), nonneg, finite, st.integers(0, 2000)),
        min_size=0,
        max_size=6,
        unique_by=lambda t: t[7],
    )
)
@settings(max_examples=60, deadline=None)
def test_csv_roundtrip_property(rows):
    base = date(2020, 1, 1)
    records = []
    for solar, temp, wind, aod, lc, water, elev, offset in rows:
        day = base + timedelta(days=offset)
        records.append(
            SiteRecord("City A", day, solar, temp, wind, aod, lc, water, elev, day.month)
        )
    ds = Dataset.from_records(records)
    assert load_csv(write_csv(ds)) == ds


# ---------------------------------------------------------------------------
# Synthetic generator


def test_generator_deterministic_and_daily():
    profile = default_city_profiles()[0]
    ds1 = generate_synthetic([profile], date(2020, 1, 1), date(2020, 1, 3), seed=7)
    ds2 = generate_synthetic([profile], date(2020, 1, 1), date(2020, 1, 3), seed=7)
    assert len(ds1) == 3
    assert write_csv(ds1) == write_csv(ds2)


def test_generator_seed_changes_output():
    profile = default_city_profiles()[0]
    a = generate_synthetic([profile], date(2020, 1, 1), date(2020, 1, 10), seed=1)
    b = generate_synthetic([profile], date(2020, 1, 1), date(2020, 1, 10), seed=2)
    assert write_csv(a) != write_csv(b)


def test_generator_full_range_day_count():
    # 2020 and 2024 are leap years: 366+365+365+365+366 = 1827 days per city.
    days = 0
    d = date(2020, 1, 1)
    while d <= date(2024, 12, 31):
        days += 1
        d += timedelta(days=1)
    assert days == 1827
    ds = generate_synthetic(default_city_profiles(), date(2020, 1, 1), date(2024, 12, 31), seed=3)
    assert len(ds) == 10 * 1827


def test_generator_rejects_inverted_range():
    with pytest.raises(DateRangeError):
        generate_synthetic(default_city_profiles()[:1], date(2021, 2, 1), date(2021, 1, 1), seed=0)


def test_generator_needs_profiles():
    with pytest.raises(EmptyInputError):
        generate_synthetic([], date(2021, 1, 1), date(2021, 1, 2), seed=0)


def test_coastal_aod_july_exceeds_january():
    coastal = CityProfile("Testport", 10.0, 2.0, 60, 0.30, 0.25, 5.0, 6.5, 3.0)
    ds = generate_synthetic([coastal], date(2021, 1, 1), date(2021, 12, 31), seed=5)
    by_month = {}
    for r in ds.records:
        by_month.setdefault(r.month, []).append(r.aod)
    assert np.mean(by_month[7]) > np.mean(by_month[1])


def test_generated_month_matches_date():
    ds = generate_synthetic(default_city_profiles()[:3], date(2020, 11, 25), date(2021, 2, 5), seed=9)
    for r in ds.records:
        assert r.month == r.date.month


def test_generated_solar_temperature_positive_correlation():
    ds = generate_synthetic(default_city_profiles(), date(2021, 1, 1), date(2021, 12, 31), seed=13)
    solar = np.array([r.solar_irradiance for r in ds.records])
    temp = np.array([r.temperature for r in ds.records])
    assert pearson(solar, temp) > 0


def test_profile_validation():
    from sitescreen.errors import ParameterError

    with pytest.raises(ParameterError):
        CityProfile("Bad", 0.0, 1.0, 60, -0.1, 0.1, 5.0, 6.5, 3.0)
    with pytest.raises(ParameterError):
        CityProfile("Bad", 0.0, 1.0, 60, 0.3, 0.1, 6.5, 5.0, 3.0)


# ---------------------------------------------------------------------------
# EDA statistics


def test_skewness_hand_computed():
    # m2 = 0.1875, m3 = 0.09375, g1 = 0.09375 / 0.1875**1.5 = 1.1547005...
    assert abs(skewness(np.array([0.0, 0.0, 0.0, 1.0])) - 1.1547005383792515) < 1e-12


def test_skewness_symmetric_is_zero():
    assert skewness(np.array([-1.0, 0.0, 1.0])) == 0.0


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=40))
@settings(max_examples=80, deadline=None)
def test_skewness_mirror_negates(values):
    x = np.array(values)
    assert skewness(-x) == pytest.approx(-skewness(x), abs=1e-9)


def test_pearson_perfect_linearity():
    assert pearson(np.array([1.0, 2.0, 3.0]), np.array([2.0, 4.0, 6.0])) == pytest.approx(1.0)


def test_eda_summary_basics():
    records = [
        make_record(day=date(2021, 6, 1), solar_irradiance=5.0, temperature=25.0),
        make_record(day=date(2021, 6, 2), solar_irradiance=6.0, temperature=30.0),
        make_record(day=date(2021, 6, 3), solar_irradiance=7.0, temperature=35.0),
    ]
    summary = eda_summary(Dataset.from_records(records))
    assert summary.feature_means["solar_irradiance"] == pytest.approx(6.0)
    i = summary.correlation_features.index("solar_irradiance")
    j = summary.correlation_features.index("temperature")
    assert summary.correlation[i, j] == pytest.approx(1.0)
    assert np.allclose(summary.correlation, summary.correlation.T, equal_nan=True)


def test_eda_zero_variance_marks_undefined():
    records = [
        make_record(day=date(2021, 6, 1), wind_speed=2.0),
        make_record(day=date(2021, 6, 2), wind_speed=2.0),
    ]
    summary = eda_summary(Dataset.from_records(records))
    i = summary.correlation_features.index("wind_speed")
    j = summary.correlation_features.index("temperature")
    assert math.isnan(summary.correlation[i, j])


def test_eda_missing_aod_excluded_pairwise():
    records = [
        make_record(day=date(2021, 6, 1), aod=0.2, solar_irradiance=5.0),
        make_record(day=date(2021, 6, 2), aod=None, solar_irradiance=9.0),
        make_record(day=date(2021, 6, 3), aod=0.4, solar_irradiance=6.0),
    ]
    summary = eda_summary(Dataset.from_records(records))
    assert summary.feature_means["aod"] == pytest.approx(0.3)
    # solar mean still uses all three rows
    assert summary.feature_means["solar_irradiance"] == pytest.approx(20.0 / 3.0)


def test_eda_monthly_aod_table():
    records = [
        make_record(day=date(2021, 1, 5), aod=0.2),
        make_record(day=date(2021, 1, 6), aod=0.4),
        make_record(day=date(2021, 7, 5), aod=0.6),
    ]
    summary = eda_summary(Dataset.from_records(records))
    assert summary.monthly_aod["Muscat"][1] == pytest.approx(0.3)
    assert summary.monthly_aod["Muscat"][7] == pytest.approx(0.6)


def test_eda_empty_dataset_rejected():
    with pytest.raises(EmptyInputError):
        eda_summary(Dataset.from_records([]))
