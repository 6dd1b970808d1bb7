"""Label matching shared by clustering metrics."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .ising import ProblemError


def best_permutation_accuracy(labels, truth, n_labels: int) -> float:
    """Fraction of equal labels, maximised over relabelings of ``labels``.

    The optimal relabeling is a maximum-weight matching on the confusion matrix
    (Hungarian algorithm). Entries outside ``[0, n_labels)`` never match.
    """
    labels, truth = np.asarray(labels), np.asarray(truth)
    if labels.shape != truth.shape:
        raise ProblemError(f"label arrays differ in shape: {labels.shape} vs {truth.shape}")
    if labels.size == 0:
        return 1.0
    C = np.zeros((n_labels, n_labels))
    ok = (labels >= 0) & (labels < n_labels) & (truth >= 0) & (truth < n_labels)
    np.add.at(C, (labels[ok], truth[ok]), 1)
    r, c = linear_sum_assignment(-C)
    return float(C[r, c].sum() / labels.size)
