import numpy as np
import pytest

from tracerinv.harness import load_config, load_observations


@pytest.fixture(scope="session")
def benchmark_cfg():
    return load_config("experiments/lagrangian-1d.cfg")


@pytest.fixture(scope="session")
def benchmark_obs(benchmark_cfg):
    return load_observations(benchmark_cfg)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)
