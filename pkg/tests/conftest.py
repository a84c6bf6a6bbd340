"""Shared fixtures: a hand-built five-blob dataset and a small trained bundle."""

import warnings
from datetime import date, timedelta

import numpy as np
import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")

from sitescreen.dataset import Dataset, SiteRecord
from sitescreen.pipeline import PipelineConfig, run_pipeline


def five_blob_records(days_per_city=30, noise=0.02, seed=101):
    """Five cities whose records form five tight, well-separated blobs.

    Every feature except month separates the cities; all records share one
    calendar month so the month column is degenerate and neutral.
    """
    rng = np.random.default_rng(seed)
    base = date(2022, 3, 1)
    records = []
    for i in range(5):
        for d in range(days_per_city):
            day = base + timedelta(days=d)
            jitter = rng.normal(0.0, noise, size=4)
            records.append(
                SiteRecord(
                    city=f"Blob{i}",
                    date=day,
                    solar_irradiance=2.0 + 1.5 * i + jitter[0],
                    temperature=15.0 + 5.0 * i + 20.0 * jitter[1],
                    wind_speed=max(0.0, 1.0 + 2.0 * i + 2.0 * jitter[2]),
                    aod=max(0.0, 0.1 + 0.2 * i + 0.1 * jitter[3]),
                    land_cover_class=10 * (i + 1),
                    water_proximity=5.0 + 40.0 * i,
                    elevation=50.0 + 300.0 * i,
                    month=day.month,
                )
            )
    return records


@pytest.fixture(scope="session")
def blob_dataset():
    return Dataset.from_records(five_blob_records())


@pytest.fixture(scope="session")
def small_config():
    return PipelineConfig(
        rounds=60,
        background_size=16,
        importance_sample_size=32,
        seed=33,
    )


@pytest.fixture(scope="session")
def trained(blob_dataset, small_config):
    return run_pipeline(blob_dataset, small_config)


@pytest.fixture(scope="session")
def small_bundle(trained):
    return trained[0]


@pytest.fixture(scope="session")
def small_reports(trained):
    return trained[1]
