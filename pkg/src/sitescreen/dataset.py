"""Feature schema, canonical CSV I/O, synthetic data generation, and EDA statistics.

The dataset is one row per (city, day) across eight site-screening features:
solar irradiance, temperature, wind speed, aerosol optical depth (AOD),
land cover class, water proximity, elevation, and calendar month. AOD is the
only feature that may be missing (filled later by temporal interpolation).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta

import numpy as np

from .errors import (
    DateRangeError,
    DuplicateKeyError,
    EmptyInputError,
    ParameterError,
    ParseError,
    SchemaError,
)

FEATURE_NAMES = (
    "solar_irradiance",
    "temperature",
    "wind_speed",
    "aod",
    "land_cover_class",
    "water_proximity",
    "elevation",
    "month",
)

COST_FEATURES = frozenset({"aod", "water_proximity", "elevation"})

CSV_COLUMNS = ("city", "date") + FEATURE_NAMES

CLASS_LABELS = ("Very Low", "Low", "Moderate", "High", "Very High")


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    unit: str
    direction: str  # "benefit" | "cost"
    kind: str  # "continuous" | "coded-categorical" | "cyclic-month"


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered descriptors for the eight canonical features."""

    features: tuple[FeatureDescriptor, ...]

    def __post_init__(self):
        names = tuple(f.name for f in self.features)
        if names != FEATURE_NAMES:
            raise SchemaError(f"feature order must be {FEATURE_NAMES}, got {names}")
        for f in self.features:
            expected = "cost" if f.name in COST_FEATURES else "benefit"
            if f.direction != expected:
                raise SchemaError(f"feature '{f.name}' must have direction '{expected}'")

    @property
    def names(self) -> tuple[str, ...]:
        return FEATURE_NAMES

    def direction(self, name: str) -> str:
        return "cost" if name in COST_FEATURES else "benefit"

    def continuous_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features if f.kind == "continuous")


def canonical_schema() -> FeatureSchema:
    return FeatureSchema(
        features=(
            FeatureDescriptor("solar_irradiance", "kWh/m2/day", "benefit", "continuous"),
            FeatureDescriptor("temperature", "degC", "benefit", "continuous"),
            FeatureDescriptor("wind_speed", "m/s", "benefit", "continuous"),
            FeatureDescriptor("aod", "dimensionless", "cost", "continuous"),
            FeatureDescriptor("land_cover_class", "code", "benefit", "coded-categorical"),
            FeatureDescriptor("water_proximity", "km", "cost", "continuous"),
            FeatureDescriptor("elevation", "m", "cost", "continuous"),
            FeatureDescriptor("month", "1-12", "benefit", "cyclic-month"),
        )
    )


@dataclass(frozen=True)
class SiteRecord:
    """One city-day observation. ``aod`` is None when the upstream value is missing."""

    city: str
    date: Date
    solar_irradiance: float
    temperature: float
    wind_speed: float
    aod: float | None
    land_cover_class: int
    water_proximity: float
    elevation: float
    month: int

    def validate(self, context: str = "record") -> None:
        if not self.city:
            raise ParseError(f"{context}: city must be non-empty")
        if self.month != self.date.month:
            raise ParseError(
                f"{context}: month {self.month} does not match date {self.date.isoformat()}"
            )
        numeric = {
            "solar_irradiance": self.solar_irradiance,
            "temperature": self.temperature,
            "wind_speed": self.wind_speed,
            "water_proximity": self.water_proximity,
            "elevation": self.elevation,
        }
        if self.aod is not None:
            numeric["aod"] = self.aod
        for name, value in numeric.items():
            if not math.isfinite(value):
                raise ParseError(f"{context}: {name} is not finite")
        for name in ("solar_irradiance", "wind_speed", "water_proximity"):
            if numeric[name] < 0:
                raise ParseError(f"{context}: {name} must be >= 0")
        if self.aod is not None and self.aod < 0:
            raise ParseError(f"{context}: aod must be >= 0")

    def feature_value(self, name: str) -> float | None:
        if name == "aod":
            return self.aod
        return float(getattr(self, name))


@dataclass(frozen=True)
class Dataset:
    """Immutable record collection, unique and sorted on (city, date)."""

    schema: FeatureSchema
    records: tuple[SiteRecord, ...]

    @staticmethod
    def from_records(records: list[SiteRecord] | tuple[SiteRecord, ...]) -> "Dataset":
        ordered = tuple(sorted(records, key=lambda r: (r.city, r.date)))
        seen: set[tuple[str, Date]] = set()
        for r in ordered:
            key = (r.city, r.date)
            if key in seen:
                raise DuplicateKeyError(f"duplicate record for ({r.city}, {r.date.isoformat()})")
            seen.add(key)
        return Dataset(schema=canonical_schema(), records=ordered)

    def __len__(self) -> int:
        return len(self.records)

    def cities(self) -> tuple[str, ...]:
        out: list[str] = []
        for r in self.records:
            if not out or out[-1] != r.city:
                out.append(r.city)
        return tuple(out)


@dataclass(frozen=True)
class CityProfile:
    """Static per-city characteristics plus the knobs of the seasonal generators."""

    name: str
    base_elevation: float
    water_proximity: float
    land_cover_code: int
    aod_annual_mean: float
    aod_summer_amplitude: float
    solar_mode_low: float
    solar_mode_high: float
    wind_scale: float

    def __post_init__(self):
        if self.aod_annual_mean <= 0:
            raise ParameterError(f"profile '{self.name}': aod_annual_mean must be > 0")
        if not self.solar_mode_low < self.solar_mode_high:
            raise ParameterError(
                f"profile '{self.name}': solar_mode_low must be < solar_mode_high"
            )


@dataclass(frozen=True)
class EdaSummary:
    feature_means: dict[str, float]
    feature_stds: dict[str, float]
    feature_skewness: dict[str, float]
    correlation_features: tuple[str, ...]
    correlation: np.ndarray = field(repr=False)
    monthly_aod: dict[str, dict[int, float]]


# ---------------------------------------------------------------------------
# CSV I/O


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def write_csv(dataset: Dataset) -> str:
    """Serialize to the canonical CSV layout with full round-trip float precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in dataset.records:
        writer.writerow(
            [
                r.city,
                r.date.isoformat(),
                _format_value(r.solar_irradiance),
                _format_value(r.temperature),
                _format_value(r.wind_speed),
                _format_value(r.aod),
                _format_value(r.land_cover_class),
                _format_value(r.water_proximity),
                _format_value(r.elevation),
                _format_value(r.month),
            ]
        )
    return buf.getvalue()


def _parse_float(cell: str, row: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"row {row}: column '{column}' has non-numeric value {cell!r}") from None
    if not math.isfinite(value):
        raise ParseError(f"row {row}: column '{column}' must be finite, got {cell!r}")
    return value


def _parse_int(cell: str, row: int, column: str) -> int:
    try:
        return int(cell)
    except ValueError:
        raise ParseError(f"row {row}: column '{column}' has non-integer value {cell!r}") from None


def load_csv(source) -> Dataset:
    """Parse the canonical CSV from a string or text stream.

    Raises SchemaError on a bad header, ParseError with the offending row
    number on bad cells, and DuplicateKeyError on repeated (city, date) keys.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: missing header row") from None
    if tuple(header) != CSV_COLUMNS:
        for i, expected in enumerate(CSV_COLUMNS):
            got = header[i] if i < len(header) else "<missing>"
            if got != expected:
                raise SchemaError(f"header column {i + 1}: expected '{expected}', got '{got}'")
        raise SchemaError(f"header has {len(header)} columns, expected {len(CSV_COLUMNS)}")

    records: list[SiteRecord] = []
    for line, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(CSV_COLUMNS):
            raise ParseError(f"row {line}: expected {len(CSV_COLUMNS)} cells, got {len(cells)}")
        city = cells[0]
        try:
            day = Date.fromisoformat(cells[1])
        except ValueError:
            raise ParseError(f"row {line}: column 'date' has invalid date {cells[1]!r}") from None
        record = SiteRecord(
            city=city,
            date=day,
            solar_irradiance=_parse_float(cells[2], line, "solar_irradiance"),
            temperature=_parse_float(cells[3], line, "temperature"),
            wind_speed=_parse_float(cells[4], line, "wind_speed"),
            aod=None if cells[5] == "" else _parse_float(cells[5], line, "aod"),
            land_cover_class=_parse_int(cells[6], line, "land_cover_class"),
            water_proximity=_parse_float(cells[7], line, "water_proximity"),
            elevation=_parse_float(cells[8], line, "elevation"),
            month=_parse_int(cells[9], line, "month"),
        )
        record.validate(context=f"row {line}")
        records.append(record)
    return Dataset.from_records(records)


# ---------------------------------------------------------------------------
# Synthetic generator


def default_city_profiles() -> list[CityProfile]:
    """Ten Omani cities with coastal/inland contrasts.

    AOD annual means span 0.22..0.36 with the strongest summer amplitude on the
    central-east coast; inland cities sit lower with flatter seasonality.
    Coastal cities have water_proximity under 20 km.
    """
    return [
        CityProfile("Al Jazer", 15.0, 4.0, 60, 0.27, 0.15, 5.0, 6.5, 3.6),
        CityProfile("Duqm", 10.0, 2.0, 60, 0.36, 0.25, 5.1, 6.6, 3.8),
        CityProfile("Ibra", 460.0, 90.0, 20, 0.26, 0.08, 5.1, 6.6, 2.7),
        CityProfile("Ibri", 310.0, 130.0, 60, 0.25, 0.07, 5.2, 6.7, 2.8),
        CityProfile("Khasab", 20.0, 1.0, 60, 0.28, 0.14, 4.8, 6.3, 3.0),
        CityProfile("Muscat", 15.0, 2.0, 50, 0.30, 0.16, 4.9, 6.4, 3.1),
        CityProfile("Nizwa", 470.0, 95.0, 60, 0.24, 0.07, 5.2, 6.7, 2.6),
        CityProfile("Salalah", 25.0, 3.0, 30, 0.22, 0.12, 4.6, 6.0, 3.4),
        CityProfile("Sohar", 4.0, 1.5, 50, 0.32, 0.18, 5.0, 6.5, 2.9),
        CityProfile("Sur", 5.0, 1.0, 60, 0.33, 0.20, 5.1, 6.6, 3.3),
    ]


def _season_factor(days: np.ndarray) -> np.ndarray:
    # Annual cycle peaking mid-July (day-of-year 196), trough mid-January.
    return np.cos(2.0 * np.pi * (days - 196.0) / 365.2425)


def generate_synthetic(
    profiles: list[CityProfile], start: Date, end: Date, seed: int
) -> Dataset:
    """One record per (city, day) over [start, end], deterministic for a fixed seed.

    AOD follows an annual sinusoid peaking in July with per-profile amplitude.
    Solar irradiance is a two-mode mixture whose mode choice and level share the
    seasonal term that also drives temperature, so the two correlate positively.
    Wind speed is gamma-distributed (right-skewed) with the profile's scale.
    Elevation, water proximity, and land cover stay constant per city.
    """
    if start > end:
        raise DateRangeError(f"start {start.isoformat()} is after end {end.isoformat()}")
    if not profiles:
        raise EmptyInputError("at least one city profile is required")

    n_days = (end - start).days + 1
    dates = [start + timedelta(days=i) for i in range(n_days)]
    day_of_year = np.array([d.timetuple().tm_yday for d in dates], dtype=float)
    season = _season_factor(day_of_year)

    seeds = np.random.SeedSequence(seed).spawn(len(profiles))
    records: list[SiteRecord] = []
    for profile, child_seed in zip(profiles, seeds):
        rng = np.random.default_rng(child_seed)

        temp_base = 27.5 - 0.0045 * profile.base_elevation
        temperature = temp_base + 8.0 * season + rng.normal(0.0, 2.2, n_days)

        # Summer favours the high irradiance mode; the shared seasonal term adds
        # a level shift so solar co-moves with temperature.
        p_high = np.clip(0.5 + 0.28 * season, 0.05, 0.95)
        pick_high = rng.random(n_days) < p_high
        modes = np.where(pick_high, profile.solar_mode_high, profile.solar_mode_low)
        solar = np.clip(modes + 0.4 * season + rng.normal(0.0, 0.25, n_days), 0.0, None)

        wind = rng.gamma(2.0, profile.wind_scale / 2.0, n_days)

        aod = np.clip(
            profile.aod_annual_mean
            + profile.aod_summer_amplitude * season
            + rng.normal(0.0, 0.02, n_days),
            0.0,
            None,
        )

        for i, day in enumerate(dates):
            records.append(
                SiteRecord(
                    city=profile.name,
                    date=day,
                    solar_irradiance=float(solar[i]),
                    temperature=float(temperature[i]),
                    wind_speed=float(wind[i]),
                    aod=float(aod[i]),
                    land_cover_class=profile.land_cover_code,
                    water_proximity=profile.water_proximity,
                    elevation=profile.base_elevation,
                    month=day.month,
                )
            )
    return Dataset.from_records(records)


# ---------------------------------------------------------------------------
# EDA statistics


def skewness(values: np.ndarray) -> float:
    """Fisher-Pearson moment coefficient g1 = m3 / m2^1.5 with population moments.

    Computed on standardized values so near-zero variances cannot underflow."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise EmptyInputError("skewness of empty sample")
    centered = x - x.mean()
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        return 0.0
    denom = m2**1.5
    if denom == 0.0:
        # m2^1.5 underflowed; the standardized form is scale-invariant
        z = centered / math.sqrt(m2)
        return float(np.mean(z**3))
    return float(np.mean(centered**3)) / denom


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson r; NaN when either side has zero variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt(np.mean(xc**2)))
    sy = float(np.sqrt(np.mean(yc**2)))
    if sx == 0.0 or sy == 0.0:
        return float("nan")
    return float(np.mean(xc * yc) / (sx * sy))


def eda_summary(dataset: Dataset) -> EdaSummary:
    """Per-feature moments, pairwise-complete Pearson correlations over the
    continuous features, and the per-city per-month mean AOD table.

    Missing AOD values are excluded pairwise; zero-variance features produce
    NaN correlation entries rather than zeros.
    """
    if len(dataset) == 0:
        raise EmptyInputError("eda_summary of empty dataset")

    columns: dict[str, np.ndarray] = {}
    present: dict[str, np.ndarray] = {}
    n = len(dataset)
    for name in FEATURE_NAMES:
        raw = [r.feature_value(name) for r in dataset.records]
        mask = np.array([v is not None for v in raw])
        col = np.array([v if v is not None else np.nan for v in raw], dtype=float)
        columns[name] = col
        present[name] = mask

    means, stds, skews = {}, {}, {}
    for name in FEATURE_NAMES:
        vals = columns[name][present[name]]
        if vals.size == 0:
            raise EmptyInputError(f"feature '{name}' has no observed values")
        means[name] = float(vals.mean())
        stds[name] = float(np.sqrt(np.mean((vals - vals.mean()) ** 2)))
        skews[name] = skewness(vals)

    cont = dataset.schema.continuous_names()
    corr = np.eye(len(cont))
    for i, a in enumerate(cont):
        for j, b in enumerate(cont):
            if j <= i:
                continue
            both = present[a] & present[b]
            r = pearson(columns[a][both], columns[b][both]) if both.any() else float("nan")
            corr[i, j] = corr[j, i] = r
    # A degenerate (zero-variance) feature has no defined self-correlation either.
    for i, a in enumerate(cont):
        if stds[a] == 0.0:
            corr[i, i] = float("nan")

    monthly: dict[str, dict[int, float]] = {}
    sums: dict[str, dict[int, list[float]]] = {}
    for r in dataset.records:
        if r.aod is None:
            continue
        sums.setdefault(r.city, {}).setdefault(r.month, []).append(r.aod)
    for city, by_month in sums.items():
        monthly[city] = {m: float(np.mean(v)) for m, v in sorted(by_month.items())}

    return EdaSummary(
        feature_means=means,
        feature_stds=stds,
        feature_skewness=skews,
        correlation_features=cont,
        correlation=corr,
        monthly_aod=monthly,
    )
