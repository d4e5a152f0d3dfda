"""Shared fixtures: one reference sweep and one trained bundle per session.

Training the six-model bundle takes a few seconds, so everything that can
share it does. Tests that mutate nothing may use these freely; tests that
need a different plant or sweep build their own small ones.
"""

import pytest

from cwloop import datagen, surrogate
from cwloop.plant import PlantConfig


@pytest.fixture(scope="session")
def plant_config():
    return PlantConfig()


@pytest.fixture(scope="session")
def weather_year(plant_config):
    return datagen.synthetic_year(plant_config, seed=0)


@pytest.fixture(scope="session")
def reference_data(plant_config, weather_year):
    data = datagen.run_sweep(plant_config, datagen.SweepSpec(), weather_year)
    cleaned, _ = datagen.clean(data)
    return cleaned


@pytest.fixture(scope="session")
def split_data(reference_data):
    return datagen.split(reference_data, 0.8, seed=42)


@pytest.fixture(scope="session")
def bundle(split_data):
    train, _ = split_data
    return surrogate.train_bundle(train, created_at="2021-10-01T00:00:00+00:00")
