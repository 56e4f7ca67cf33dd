import numpy as np
import pytest

from oodfilter import FeatureMatrix


@pytest.fixture
def seeded_rng():
    return np.random.default_rng(12345)


def make_matrix(rng, n, d, prefix="s"):
    return FeatureMatrix(
        ids=tuple(f"{prefix}-{i}" for i in range(n)),
        data=rng.normal(size=(n, d)).astype(np.float32),
    )
