import numpy as np
import pytest

from edqd.config import RunConfig


def dense_cfg(variant="M1", **overrides):
    """Small crowded arena where robots meet every few steps; keeps unit
    tests of the evolutionary loop fast and lively."""
    base = dict(
        variant=variant,
        population=8,
        lifetime=60,
        generations=5,
        arena_diameter=150.0,
        tokens_red=25,
        tokens_blue=25,
        seed=12345,
        replicates=1,
    )
    base.update(overrides)
    return RunConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)
