# tests/conftest.py
"""
Shared fixtures for the linear response test suite.
"""

import pytest
from pathlib import Path
import sys

import numpy as np

# Add repository root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config.settings import RunConfig
from src.systems import ContractingAffineMap, ExpandingCircleMap, SolenoidMap
from src.systems.base_system import MapSystem


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='Run statistical acceptance studies (minutes)')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: statistical acceptance study, needs --runslow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


class FrozenCircleMap(ExpandingCircleMap):
    """Expanding circle in which γ has no effect, so X ≡ 0"""

    name = 'frozen_circle'

    def step(self, x, gamma):
        return super().step(x, 0.3)

    def jacobian_vector(self, x, gamma, w):
        return super().jacobian_vector(x, 0.3, w)

    def hessian_vector_vector(self, x, gamma, y, w):
        return super().hessian_vector_vector(x, 0.3, y, w)

    def param_vector(self, x, gamma):
        return np.zeros(1)

    def param_vector_jacobian(self, x, gamma, w):
        return np.zeros_like(np.asarray(w, dtype=float))


class DivergingMap(ContractingAffineMap):
    """x' = 1e10 x + γ, overflows within a few dozen steps"""

    name = 'diverging'
    rate = 1e10


@pytest.fixture
def solenoid():
    return SolenoidMap()


@pytest.fixture
def affine():
    return ContractingAffineMap()


@pytest.fixture
def circle():
    return ExpandingCircleMap()


@pytest.fixture
def frozen_circle():
    return FrozenCircleMap()


@pytest.fixture
def diverging():
    return DivergingMap()


@pytest.fixture
def small_config():
    """Solenoid run small enough for unit tests"""
    return RunConfig(
        map_name='solenoid',
        gamma=0.1,
        n_steps=10,
        n_segments=30,
        window=3,
        spinup=100,
        seed=3,
        reps=2,
        tangent_warmup=20,
        probe_count=2,
        log_to_file=False,
    )


@pytest.fixture
def affine_config():
    """Contracting affine run with the analytic derivative 2"""
    return RunConfig(
        map_name='contracting_affine',
        gamma=0.1,
        n_steps=20,
        n_segments=50,
        window=10,
        unstable_dim=0,
        spinup=100,
        seed=0,
        reps=2,
        probe_count=2,
        oracle_steps_per_run=200,
        oracle_runs_per_gamma=2,
        oracle_spinup=100,
        log_to_file=False,
    )


def make_system_class(base: type, **overrides) -> type:
    """Subclass of `base` with the given attributes or methods replaced"""
    return type(f"Custom{base.__name__}", (base,), overrides)


@pytest.fixture
def custom_system():
    def build(base=ContractingAffineMap, **overrides) -> MapSystem:
        return make_system_class(base, **overrides)()
    return build
