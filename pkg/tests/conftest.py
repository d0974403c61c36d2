# tests/conftest.py
"""
Shared pytest fixtures for the party-affiliation toolkit tests.

Small hand-built graphs keep unit tests exact; SBM fixtures give the
end-to-end tests a graph with a known community structure.
"""

import numpy as np
import pytest

from app import config
from app.models.graph import SparseGraph
from app.synth.sbm import SbmConfig, generate
from tests.helpers import undirected


@pytest.fixture(autouse=True)
def clear_settings_cache():
    config.get_app_settings.cache_clear()
    yield
    config.get_app_settings.cache_clear()


@pytest.fixture
def path_graph() -> SparseGraph:
    """Undirected path a - b - c - d - e."""
    return undirected(["a", "b", "c", "d", "e"], [(0, 1), (1, 2), (2, 3), (3, 4)])


@pytest.fixture
def two_cliques() -> SparseGraph:
    """Two disjoint undirected triangles {a, b, c} and {d, e, f}."""
    return undirected(
        ["a", "b", "c", "d", "e", "f"], [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]
    )


@pytest.fixture
def small_sbm():
    """Two 60-node blocks, dense inside, sparse across."""
    return generate(SbmConfig(block_sizes=[60, 60], p_in=0.2, p_out=0.01, seed=7))


@pytest.fixture(scope="session")
def large_sbm():
    return generate(SbmConfig(block_sizes=[1000, 1000], p_in=0.02, p_out=0.002, seed=11))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
