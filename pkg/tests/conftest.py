import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.lmo import Geometry, LmoSet  # noqa: E402
from src.problems import NoisyQuadratic  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ball():
    return LmoSet(Geometry.EUCLIDEAN, 1.0)


@pytest.fixture
def quad_sigma0():
    """F(w) = 1/2 w^T diag(1, 4) w from w0 = (1, 1), no noise."""
    return NoisyQuadratic([1.0, 4.0], sigma=0.0, seed=0)


@pytest.fixture
def quad_additive():
    return NoisyQuadratic([1.0, 2.0, 3.0, 4.0], sigma=0.5, seed=7)
