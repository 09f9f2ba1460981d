"""Pytest fixtures for seqeb tests."""
from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Dict, Generator
from unittest.mock import patch

import numpy as np
import pytest

from seqeb.config import RunConfig
from seqeb.model import ModelSpec
from seqeb.orchestrator.rng import StreamTag, stream
from seqeb.simkit.scenario import Scenario
from seqeb.simkit.simulate import SimulatedData, simulate
from seqeb.spatial.kernels import SiteSet

TINY_CONFIG: Dict[str, Any] = {
    "seed": 7,
    "grid": {"fine_min": 0.2, "fine_max": 0.8, "fine_count": 7, "coarse": [0.3, 0.5], "reference": 0.3},
    "monte_carlo": {"chains": [3], "particles": 8, "gibbs_iters": 2},
}

TINY_TOML = """
seed = 7

[grid]
fine_min = 0.2
fine_max = 0.8
fine_count = 7
coarse = [0.3, 0.5]
reference = 0.3

[monte_carlo]
chains = [2]
particles = 6
gibbs_iters = 2
"""


@pytest.fixture
def mock_env_clean() -> Generator[None, None, None]:
    """Clear all SEQEB_ environment variables and mock config file to not be found."""
    original_env = os.environ.copy()
    for var in [k for k in os.environ if k.startswith("SEQEB_")]:
        del os.environ[var]

    with patch("seqeb.config_file._find_config_file", return_value=None):
        yield

    os.environ.clear()
    os.environ.update(original_env)


@pytest.fixture
def sample_config_toml() -> str:
    """Small but complete run configuration."""
    return TINY_TOML


@pytest.fixture
def tiny_config() -> RunConfig:
    """Two coarse points, three chains each, eight particles."""
    return RunConfig.from_dict(TINY_CONFIG)


@pytest.fixture
def tiny_sites() -> SiteSet:
    return SiteSet.equidistant(3)


@pytest.fixture
def tiny_model(tiny_config: RunConfig, tiny_sites: SiteSet) -> ModelSpec:
    return ModelSpec.from_config(tiny_config, tiny_sites)


@pytest.fixture
def tiny_scenario() -> Scenario:
    return Scenario(name="tiny", n=3, T=12, chains=3, particles=8, gibbs_iters=2, seed=11)


@pytest.fixture
def tiny_data(tiny_scenario: Scenario) -> SimulatedData:
    """Poisson counts at three sites over twelve days."""
    return simulate(tiny_scenario, stream(tiny_scenario.seed, StreamTag.SIMULATE))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240101)


@pytest.fixture
def write_toml(tmp_path: Path, sample_config_toml: str) -> Path:
    """The sample configuration written to a seqeb.toml file."""
    path = tmp_path / "seqeb.toml"
    path.write_text(sample_config_toml, encoding="utf-8")
    return path
