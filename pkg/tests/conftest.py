"""
Pytest configuration and shared fixtures for DLA-1D tests
"""

import json
import shutil
import tempfile
from pathlib import Path
from typing import Any, Callable
from unittest.mock import Mock

import numpy as np
import pytest

# Add project root to Python path
import sys
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.core.caricature import Car1Config, Car2Config
from src.core.dla import RunConfig
from src.core.rng import GSpec, RandomStream
from src.core.stats import EnsembleSummary

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files"""
    temp_dir = tempfile.mkdtemp()
    yield Path(temp_dir)
    shutil.rmtree(temp_dir)


@pytest.fixture
def stream():
    """Fresh stream with a fixed seed"""
    return RandomStream(42, 0)


@pytest.fixture
def small_dla_config():
    """Short exact-mode run at a diffusive density"""
    return RunConfig(mu=0.5, T=50.0, debug_invariants=True)


@pytest.fixture
def car1_config():
    """Caricature I with a dense red field"""
    return Car1Config(mu=16.0, T=20.0, J=8, debug_invariants=True)


@pytest.fixture
def car2_config():
    """Caricature II with geometric re-entry offsets"""
    return Car2Config(J=6, G=GSpec("geometric", (0.5,)), T=200.0, q_list=(1, 2), debug_invariants=True)


@pytest.fixture
def scripted_stream():
    """
    Stream stand-in returning scripted draws.

    Set `uniform.side_effect`, `index.side_effect` and
    `standard_exponential.side_effect` to lists in the test.
    """
    fake = Mock(spec=RandomStream)
    fake.master_seed = 0
    fake.stream_id = 0
    fake.standard_exponential.return_value = 1.0
    fake.index.return_value = 0
    fake.uniform.return_value = 0.99
    return fake


@pytest.fixture
def power_law_summary():
    """Synthetic ensemble with R(t) = t^0.5 in every run"""
    times = np.array([10.0 ** (j / 4) for j in range(0, 17)])
    values = np.tile(np.sqrt(times), (20, 1))
    return EnsembleSummary.from_values(times, values)


@pytest.fixture
def noisy_summary_factory() -> Callable[[int, int], EnsembleSummary]:
    """Synthetic ensembles R_i(t) = c_i t^0.5 with lognormal run factors"""

    def build(n_runs: int, seed: int) -> EnsembleSummary:
        rng = np.random.default_rng(seed)
        times = np.array([10.0 ** (j / 4) for j in range(4, 17)])
        factors = rng.lognormal(0.0, 0.3, size=(n_runs, 1))
        slopes = rng.normal(0.5, 0.05, size=(n_runs, 1))
        values = factors * times ** slopes
        return EnsembleSummary.from_values(times, values, seed=seed)

    return build


@pytest.fixture
def golden():
    """
    Freeze-once golden values: the first run writes tests/golden/<name>.json,
    later runs compare against it exactly.
    """

    def check(name: str, value: Any) -> None:
        GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
        path = GOLDEN_DIR / f"{name}.json"
        if not path.exists():
            path.write_text(json.dumps(value, indent=2) + "\n", encoding="utf-8")
            return
        assert json.loads(path.read_text(encoding="utf-8")) == value

    return check


# Test markers
def pytest_configure(config):
    """Configure pytest with custom markers"""
    config.addinivalue_line("markers", "unit: Unit tests for individual components")
    config.addinivalue_line("markers", "integration: Integration tests for component interactions")
    config.addinivalue_line("markers", "e2e: End-to-end command workflows")
    config.addinivalue_line("markers", "slow: Acceptance-scale simulations")
    config.addinivalue_line("markers", "statistical: Seeded Monte Carlo oracles at reduced scale")
