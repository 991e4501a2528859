"""Shared fixtures: one small deterministic city, reused read-only."""

import pytest

from citylens.gen import GenSpec, generate_city, write_city
from citylens.runtime import load_runtime

SMALL_COUNTS = {
    "buildings": 20,
    "road_segments": 4,
    "pipeline_segments": 4,
    "subway_lines": 1,
    "power_nodes": 6,
    "companies": 3,
    "urban_events": 4,
}


@pytest.fixture(scope="session")
def small_city():
    return generate_city(GenSpec(seed=7, counts=SMALL_COUNTS))


@pytest.fixture(scope="session")
def small_city_dir(tmp_path_factory, small_city):
    out = tmp_path_factory.mktemp("city")
    write_city(small_city, out)
    return out


@pytest.fixture(scope="session")
def small_runtime(small_city_dir):
    """Read-only runtime over the small city; never mutate through it."""
    return load_runtime(small_city_dir / "events.jsonl")


@pytest.fixture
def fresh_runtime(small_city_dir):
    """A private runtime instance for tests that write."""
    return load_runtime(small_city_dir / "events.jsonl")
