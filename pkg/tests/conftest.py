"""Shared fixtures: a small repository of four toy tables.

The tables describe country happiness scores, country populations, store
locations of one country, and life expectancy by country code.  Their
exact overlap structure is known by hand, which makes them a precise
oracle for the set metrics, ground truth and discovery tests.
"""

from __future__ import annotations

import pytest

from joinscout import load_dataset

HAPPINESS_CSV = """Country,Happiness score,Schengen
Mexico,6.595,N
Spain,6.354,Y
United States,6.892,N
France,6.592,Y
"""

POPULATION_CSV = """X,Y,Z
Spain,47M,2020
United States,330M,2020
Mexico,123M,2020
Germany,83M,2020
"""

STORES_CSV = """Country,Location,Discount,Customer satisfaction
United States,New York,Y,7.7
United States,Chicago,N,8.5
United States,Seattle,N,8
United States,Houston,Y,7.7
"""

EXPECTANCY_CSV = """Nation,Life expectancy (Women),Life expectancy (Men)
MX,77.8,72.1
SP,86.1,86.1
CA,82.2,72.3
US,81.4,76.3
BR,79.4,72
"""

TOY_FILES = {
    "happiness.csv": HAPPINESS_CSV,
    "population.csv": POPULATION_CSV,
    "stores.csv": STORES_CSV,
    "expectancy.csv": EXPECTANCY_CSV,
}


@pytest.fixture(scope="session")
def toy_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    for name, text in TOY_FILES.items():
        (root / name).write_text(text, encoding="utf-8")
    return root


@pytest.fixture(scope="session")
def toy_paths(toy_dir):
    return [toy_dir / name for name in sorted(TOY_FILES)]


@pytest.fixture(scope="session")
def toy_datasets(toy_paths):
    return [load_dataset(path) for path in toy_paths]
