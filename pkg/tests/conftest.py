import numpy as np
import pytest
from hypothesis import settings

from riscov.analytic import SystemParams
from riscov.montecarlo import McConfig

settings.register_profile("suite", max_examples=25, deadline=None)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def params() -> SystemParams:
    """Default 100 m scenario used throughout the suite."""
    return SystemParams()


@pytest.fixture(scope="session")
def sparse_params() -> SystemParams:
    """Same cell with the sparsest nonzero reflector density."""
    return SystemParams(lambda_r=1.59e-4)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def quick_mc() -> McConfig:
    return McConfig(n_scenes=80, n_fading_per_scene=4, seed=42)
