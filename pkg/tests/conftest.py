from pathlib import Path

import numpy as np
import pytest

from src.entropy import GridSpec
from src.family import SpanningFamily, WeightVector
from src.logging_util import reset_operations_called

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"
SQRT3_2 = np.sqrt(3.0) / 2.0


@pytest.fixture(autouse=True)
def fresh_operations():
    reset_operations_called()
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def equiangular():
    """Three unit vectors at 120 degrees; a tight frame with weights 2/3."""
    return SpanningFamily(matrix=[[1.0, -0.5, -0.5], [0.0, SQRT3_2, -SQRT3_2]])


@pytest.fixture
def equiangular_weights():
    return WeightVector.of(2 / 3, 2 / 3, 2 / 3)


@pytest.fixture
def orthonormal():
    return SpanningFamily(matrix=np.eye(2))


@pytest.fixture
def unit_weights():
    return WeightVector.of(1.0, 1.0)


@pytest.fixture
def triangle():
    """e1, e2, e1 + e2: with weights (1/2, 1/2, 1) the critical subset {2} has no complementary block."""
    return SpanningFamily(matrix=[[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])


@pytest.fixture
def line_grid():
    return GridSpec.symmetric(1, 12.0, 2048)


@pytest.fixture
def plane_grid():
    return GridSpec.symmetric(2, 12.0, 256)


@pytest.fixture
def corpus_dir():
    return CORPUS_DIR
