import numpy as np
import pytest
from probesizer.core import PairedPredictions
from tests.helpers import predictions_from_cells


@pytest.fixture
def identical_predictions():
    rng = np.random.default_rng(0)
    correct = rng.random((5, 400)) < 0.7
    return PairedPredictions(tuple(range(400)), tuple(range(5)), correct, correct)


@pytest.fixture
def disagreeing_predictions():
    # A is always wrong where B is right and never the other way round
    return predictions_from_cells(n01=400, n10=0, n11=0, num_seeds=3)


@pytest.fixture
def gapped_predictions():
    """Five seeds where B beats A by about 15 points"""
    rng = np.random.default_rng(1)
    a = rng.random((5, 2000)) < 0.70
    b = rng.random((5, 2000)) < 0.85
    return PairedPredictions(tuple(f"item{i}" for i in range(2000)), tuple(range(5)), a, b)
