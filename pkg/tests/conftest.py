import numpy as np
import pytest

from ctaug import PhantomSpec, Units, Volume, generate_phantom


@pytest.fixture
def hu_volume_factory():
    """Random HU volumes spanning well beyond typical windows."""

    def make(seed=0, shape=(6, 8, 7), lo=-1200.0, hi=900.0):
        rng = np.random.default_rng(seed)
        voxels = rng.uniform(lo, hi, size=shape).astype(np.float32)
        return Volume(voxels=voxels, spacing=(1.5, 1.5, 1.5), units=Units.HU)

    return make


@pytest.fixture
def phantom_pair():
    return generate_phantom(PhantomSpec())


class ScriptedRng:
    """Stands in for SplitMix64 where tests need exact draw values."""

    def __init__(self, values):
        self.values = list(values)
        self.consumed = 0

    def uniform(self):
        self.consumed += 1
        return self.values.pop(0)

    def uniform_in(self, lo, hi):
        return lo + self.uniform() * (hi - lo)


@pytest.fixture
def scripted_rng():
    return ScriptedRng
