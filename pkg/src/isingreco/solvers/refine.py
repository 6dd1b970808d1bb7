"""Greedy single-flip polishing."""

from __future__ import annotations

import numba
import numpy as np

from ..ising import IsingProblem, as_spins
from .sa import csr_arrays


@numba.njit(cache=True)
def _descend(x, f, indptr, indices, data, tol):
    n = x.shape[0]
    flips = 0
    changed = True
    while changed:
        changed = False
        for k in range(n):
            if -2.0 * x[k] * f[k] < -tol:
                x[k] = -x[k]
                step = 2.0 * x[k]
                for q in range(indptr[k], indptr[k + 1]):
                    f[indices[q]] += data[q] * step
                flips += 1
                changed = True
    return flips


def local_refine(p: IsingProblem, x, tol: float = 1e-12) -> np.ndarray:
    """First-improvement descent in fixed index order until no flip lowers the energy."""
    x = as_spins(x, p.n).astype(float)
    f = p.local_fields(x)
    _descend(x, f, *csr_arrays(p), tol)
    return x.astype(np.int8)
