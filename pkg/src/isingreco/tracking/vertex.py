"""Primary-vertex clustering of track longitudinal intercepts as a one-hot QUBO."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ising import ProblemError, QuboProblem, make_rng
from ..labels import best_permutation_accuracy  # noqa: F401  (re-export)


@dataclass(frozen=True)
class VertexProblemParams:
    """``lambda_pen=None`` selects ``max(1, (n_T - 1) / n_V)``.

    That value already forces exact one-hot ground states: dropping extra bits
    of a multiply assigned track always lowers the energy, and an unassigned
    track can join the least populated vertex, which holds at most
    ``floor((n_T - 1) / n_V)`` other tracks, for less than the penalty since
    every ``g < 1``. Keeping the penalty this small leaves low barriers for
    single-flip heuristics.
    """

    n_vertices: int
    m: float = 1.0
    lambda_pen: float | None = None

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ProblemError("n_vertices must be >= 1")
        if not self.m > 0:
            raise ProblemError("distortion parameter m must be positive")
        if self.lambda_pen is not None and not self.lambda_pen > 0:
            raise ProblemError("lambda_pen must be positive")


def distortion(x, m: float):
    """``g(x, m) = 1 - exp(-m x)``."""
    return -np.expm1(-m * np.asarray(x, dtype=float))


def track_distance(z, dz) -> np.ndarray:
    """Pairwise ``|z_i - z_j| / sqrt(dz_i^2 + dz_j^2)``."""
    z, dz = np.asarray(z, dtype=float), np.asarray(dz, dtype=float)
    if np.any(dz <= 0):
        raise ProblemError("track uncertainties dz must be positive")
    return np.abs(z[:, None] - z[None, :]) / np.sqrt(dz[:, None] ** 2 + dz[None, :] ** 2)


def auto_vertex_lambda(n_tracks: int, n_vertices: int) -> float:
    return max(1.0, (n_tracks - 1) / n_vertices)


def vertex_index(i: int, k: int, n_vertices: int) -> int:
    return i * n_vertices + k


def vertex_qubo(tracks, params: VertexProblemParams) -> QuboProblem:
    """Binary ``p_ik`` at index ``i * n_V + k``.

    Energy ``sum_k sum_{i<j} p_ik p_jk g(D_ij; m) + lambda sum_i (1 - sum_k p_ik)^2``.
    The penalty expands to ``-lambda`` on each diagonal, ``+lambda`` on each pair of
    a track's own binaries (``2 lambda`` in energy), and ``n_T lambda`` in the offset.
    """
    tracks = np.asarray(tracks, dtype=float).reshape(-1, 2)
    n_t, n_v = tracks.shape[0], params.n_vertices
    if n_t < n_v:
        raise ProblemError(f"need at least as many tracks ({n_t}) as vertices ({n_v})")
    lam = auto_vertex_lambda(n_t, n_v) if params.lambda_pen is None else params.lambda_pen
    G = distortion(track_distance(tracks[:, 0], tracks[:, 1]), params.m)
    np.fill_diagonal(G, 0.0)
    eye_v = np.eye(n_v)
    # same vertex k for i != j: G_ij / 2 in each symmetric entry
    Q = np.kron(G / 2, eye_v)
    # one-hot penalty within each track block
    Q += lam * np.kron(np.eye(n_t), np.ones((n_v, n_v)) - 2 * eye_v)
    return QuboProblem(Q, n_t * lam)


def decode_vertices(solution, n_tracks: int, n_vertices: int):
    """Vertex per track (lowest set index), ``-1`` when none is set, and a violation count."""
    s = np.asarray(solution).reshape(n_tracks, n_vertices)
    counts = s.sum(axis=1)
    labels = np.where(counts > 0, np.argmax(s > 0, axis=1), -1)
    return labels, int(np.sum(counts != 1))


def generate_vertex_event(
    n_vertices: int,
    n_tracks: int,
    separation: float = 5.0,
    dz: float = 1.0,
    seed: int = 0,
    max_pull: float = 2.0,
):
    """Vertices spaced exactly ``separation * dz`` apart around 0, tracks dealt round-robin.

    Each track's ``z0`` is its vertex position plus a N(0, dz) measurement
    error truncated at ``max_pull * dz`` (redrawn beyond it), so a track never
    sits closer to a neighbouring vertex than the separation allows. The reported
    uncertainty is ``dz``. Returns ``(tracks, truth)`` with ``tracks`` an
    ``(n_tracks, 2)`` array of ``(z0, dz)``.
    """
    if n_vertices < 1 or n_tracks < n_vertices:
        raise ProblemError("need n_tracks >= n_vertices >= 1")
    if not dz > 0 or not max_pull > 0:
        raise ProblemError("dz and max_pull must be positive")
    rng = make_rng(seed)
    centres = (np.arange(n_vertices) - (n_vertices - 1) / 2) * separation * dz
    truth = np.arange(n_tracks) % n_vertices
    rng.shuffle(truth)
    pull = rng.normal(0.0, 1.0, n_tracks)
    bad = np.abs(pull) > max_pull
    while np.any(bad):
        pull[bad] = rng.normal(0.0, 1.0, int(bad.sum()))
        bad = np.abs(pull) > max_pull
    z = centres[truth] + pull * dz
    return np.column_stack([z, np.full(n_tracks, dz)]), truth
