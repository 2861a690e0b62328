import numpy as np
import pytest
from lp_ball_limits.sampling import SeedSpec, StiefelFrame, sample_stiefel


@pytest.fixture(name="seed")
def fixture_seed() -> SeedSpec:
    return SeedSpec(master_seed=7, stream=0)


@pytest.fixture(name="rng")
def fixture_rng() -> np.random.Generator:
    return np.random.Generator(np.random.Philox(12345))


@pytest.fixture(name="frame_2d")
def fixture_frame_2d(seed: SeedSpec) -> StiefelFrame:
    return sample_stiefel(2, 256, seed)
