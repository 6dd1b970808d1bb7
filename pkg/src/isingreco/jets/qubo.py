"""Thrust, angle and Durham distance QUBOs, the one-hot multijet extension, and an exact thrust scan."""

from __future__ import annotations

import numpy as np

from ..ising import ProblemError, QuboProblem, _enumeration_chunk

THRUST_SCAN_LIMIT = 16


def _momenta(event_or_p) -> np.ndarray:
    if hasattr(event_or_p, "momenta"):
        return event_or_p.momenta()
    return np.asarray(event_or_p, dtype=float).reshape(-1, 3)


def thrust_value(P: np.ndarray, axis: np.ndarray) -> float:
    """``sum |n.p_i| / sum |p_i|`` for a unit axis ``n``."""
    return float(np.abs(P @ axis).sum() / np.linalg.norm(P, axis=1).sum())


def thrust_axis_scan(event) -> tuple[float, np.ndarray]:
    """Exact thrust by scanning axes along every subset momentum sum.

    The maximising axis is parallel to the momentum sum of one hemisphere, so
    checking the normalised ``sum_{i in S} p_i`` for every subset ``S`` is exact.
    Ties keep the first subset in enumeration order.
    """
    P = _momenta(event)
    n = len(P)
    if n < 2:
        raise ProblemError("thrust needs at least two constituents")
    if n > THRUST_SCAN_LIMIT:
        raise ProblemError(f"thrust scan refused: N={n} exceeds {THRUST_SCAN_LIMIT}")
    total = np.linalg.norm(P, axis=1).sum()
    if total == 0:
        raise ProblemError("thrust undefined when every momentum is zero")
    S = _enumeration_chunk(1, 1 << n, n).astype(float) @ P
    norms = np.linalg.norm(S, axis=1)
    ok = norms > 0
    axes = S[ok] / norms[ok, None]
    T = np.abs(axes @ P.T).sum(axis=1) / total
    k = int(np.argmax(T))
    return float(T[k]), axes[k]


def thrust_qubo(event) -> QuboProblem:
    """Minimisation form of ``(sum |p_i|)^2 T(s)^2 = 4 |sum_i s_i p_i|^2``: ``Q = -4 P P^T``."""
    P = _momenta(event)
    if len(P) < 2:
        raise ProblemError("thrust QUBO needs at least two constituents")
    return QuboProblem(-4.0 * (P @ P.T), 0.0)


def thrust_from_selection(event, s) -> float:
    """``T(s) = 2 |sum_i s_i p_i| / sum_i |p_i|``."""
    P = _momenta(event)
    s = np.asarray(s, dtype=float)
    return float(2.0 * np.linalg.norm(s @ P) / np.linalg.norm(P, axis=1).sum())


def angle_qubo(event) -> QuboProblem:
    """Dijet QUBO ``Q_ij = -cos(theta_ij) / 2`` off the diagonal."""
    P = _momenta(event)
    norms = np.linalg.norm(P, axis=1)
    if np.any(norms == 0):
        raise ProblemError("angle QUBO needs non-zero momenta")
    U = P / norms[:, None]
    Q = -0.5 * np.clip(U @ U.T, -1.0, 1.0)
    np.fill_diagonal(Q, 0.0)
    return QuboProblem(Q, 0.0)


def durham_matrix(event) -> np.ndarray:
    """``2 min(E_i^2, E_j^2) (1 - cos theta_ij)`` in GeV^2 with a zero diagonal."""
    P = _momenta(event)
    E = event.energies() if hasattr(event, "energies") else np.linalg.norm(P, axis=1)
    if np.any(E <= 0):
        raise ProblemError("Durham distance needs positive energies")
    norms = np.linalg.norm(P, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    U = P / safe[:, None]
    cos = np.clip(U @ U.T, -1.0, 1.0)
    E2 = E**2
    D = 2.0 * np.minimum(E2[:, None], E2[None, :]) * (1.0 - cos)
    np.fill_diagonal(D, 0.0)
    return D


def auto_multijet_lambda(Q: np.ndarray) -> float:
    """``1.1 N max_ij Q_ij``, or ``1 + N max |Q_ij|`` when that is not positive."""
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    lam = 1.1 * n * float(Q.max()) if Q.size else 0.0
    if lam <= 0:
        lam = 1.0 + n * (float(np.abs(Q).max()) if Q.size else 0.0)
    return lam


def tight_multijet_lambda(Q: np.ndarray, n_jet: int, margin: float = 1.1) -> float:
    """Smaller one-hot-safe penalty for non-negative ``Q``: ``margin * max_i (Q_ii + 2 sum_{j!=i} Q_ij / n_jet)``.

    In a minimum no constituent holds two bits (dropping one removes at least
    ``lambda`` of penalty and a non-negative pair cost). An unassigned
    constituent can join the jet with the smallest pair cost, which is at most
    the mean over jets, ``Q_ii + 2 sum_j Q_ij / n_jet``, so a larger penalty
    makes assignment strictly better. The bound never exceeds ``N max Q``.
    """
    Q = np.asarray(Q, dtype=float)
    if np.any(Q < 0):
        raise ProblemError("the tight penalty needs a non-negative Q")
    off = Q.sum(axis=1) - np.diag(Q)
    lam = margin * float(np.max(np.diag(Q) + 2.0 * off / n_jet)) if Q.size else 0.0
    return lam if lam > 0 else 1.0


def multijet_qubo(Q, n_jet: int, lambda_pen: float | str = "auto") -> QuboProblem:
    """One-hot multijet QUBO over ``s_i^(n)`` at index ``i * n_jet + n``.

    ``sum_n sum_{i,j} Q_ij s_i^(n) s_j^(n) + lambda sum_i (1 - sum_n s_i^(n))^2``.
    Expanding the penalty with ``s^2 = s`` gives ``-lambda`` on each diagonal,
    ``+lambda`` on both entries of every pair of a constituent's own bits, and
    ``N lambda`` in the offset. ``lambda_pen`` is a number, ``"auto"``
    (:func:`auto_multijet_lambda`) or ``"tight"`` (:func:`tight_multijet_lambda`).
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ProblemError("Q must be square")
    if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(Q).max(initial=0.0)))):
        raise ProblemError("Q must be symmetric")
    if n_jet < 2:
        raise ProblemError("n_jet must be >= 2")
    n = Q.shape[0]
    if lambda_pen == "auto":
        lam = auto_multijet_lambda(Q)
    elif lambda_pen == "tight":
        lam = tight_multijet_lambda(Q, n_jet)
    else:
        lam = float(lambda_pen)
    if not lam > 0:
        raise ProblemError("lambda_pen must be positive")
    eye = np.eye(n_jet)
    M = np.kron(Q, eye) + lam * np.kron(np.eye(n), np.ones((n_jet, n_jet)) - 2 * eye)
    return QuboProblem(0.5 * (M + M.T), n * lam)
