import numpy as np
import pytest

from src.experiments import ExperimentConfig
from src.kernels import ReductionSchedule


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="run full-size experiments")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_config():
    """A few small trials: quick enough for CLI and determinism checks."""
    return ExperimentConfig(
        d_in=32, d_out=24, batch=4, n_trials=20, precision="f16",
        schedule_single=ReductionSchedule.sequential(),
        schedule_batched=ReductionSchedule.blocked(8),
        seed=7,
    )
