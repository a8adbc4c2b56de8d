import numpy as np
from probesizer.core import PairedPredictions
from probesizer.utils import predictions_frame, write_csv


def predictions_from_cells(n01, n10, n11, n00=0, num_seeds=1):
    """Predictions whose every seed has the given contingency counts"""
    a = [False] * n01 + [True] * n10 + [True] * n11 + [False] * n00
    b = [True] * n01 + [False] * n10 + [True] * n11 + [False] * n00
    num_items = len(a)
    return PairedPredictions(
        tuple(range(num_items)),
        tuple(range(num_seeds)),
        np.tile(a, (num_seeds, 1)),
        np.tile(b, (num_seeds, 1)),
    )


class UniformProbe:
    """Assigns 1/K to every class"""

    def __init__(self, num_classes):
        self.num_classes = num_classes

    def log_proba(self, X):
        return np.full((len(X), self.num_classes), -np.log(self.num_classes))


def write_predictions(predictions, path):
    return write_csv(predictions_frame(predictions), path)
