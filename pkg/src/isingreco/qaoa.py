"""Statevector simulation of QAOA for small Ising problems.

Basis convention: qubit ``k`` is spin ``k``; bit 0 means ``x_k = +1`` and bit 1
means ``x_k = -1``. Basis index ``z`` stores qubit 0 in its most significant bit,
so index order equals lexicographic bit-string order.

A depth-``p`` circuit applies, for ``k = 1..p``, the cost layer
``exp(-i gamma_k H_C)`` and then the mixer layer ``exp(-i beta_k sum_q X_q)``
to the uniform superposition. ``H_C`` is the Ising energy without its offset.
The uniform state is the ground state of ``-sum_q X_q``, so an annealing-like
(minimising) path has negative ``beta``; :func:`schedule_angles` follows that sign.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .ising import IsingProblem, ProblemError, SolveResult, _enumeration_chunk, ising_energy, make_rng

MAX_QUBITS = 20


@dataclass
class StateVector:
    amplitudes: np.ndarray
    n: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise ProblemError(f"statevector simulation supports 1..{MAX_QUBITS} qubits, got n={self.n}")
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n,):
            raise ProblemError(f"expected {1 << self.n} amplitudes, got {self.amplitudes.shape}")

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(self.probabilities.sum()))


@dataclass(frozen=True)
class QaoaParams:
    betas: tuple
    gammas: tuple

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        gammas = tuple(float(g) for g in self.gammas)
        if len(betas) < 1:
            raise ProblemError("QAOA depth must be >= 1")
        if len(betas) != len(gammas):
            raise ProblemError("betas and gammas must have the same length")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "gammas", gammas)

    @property
    def p(self) -> int:
        return len(self.betas)

    def as_vector(self) -> np.ndarray:
        return np.r_[self.betas, self.gammas]

    @classmethod
    def from_vector(cls, v) -> "QaoaParams":
        v = np.asarray(v, dtype=float)
        half = v.size // 2
        return cls(tuple(v[:half]), tuple(v[half:]))


def _check_size(p: IsingProblem):
    if p.n > MAX_QUBITS:
        raise ProblemError(f"QAOA simulation refused: n={p.n} exceeds {MAX_QUBITS} qubits")


def basis_spins(n: int) -> np.ndarray:
    """``(2**n, n)`` spin values of every basis state."""
    return 1 - 2 * _enumeration_chunk(0, 1 << n, n)


def diagonal_energies(p: IsingProblem) -> np.ndarray:
    """Ising energy (offset excluded) of every basis state."""
    _check_size(p)
    X = basis_spins(p.n).astype(float)
    J = p.dense_J()
    return 0.5 * np.einsum("ki,ki->k", X @ J, X) + X @ p.h


def uniform_superposition(n: int) -> StateVector:
    if not 1 <= n <= MAX_QUBITS:
        raise ProblemError(f"statevector simulation supports 1..{MAX_QUBITS} qubits, got n={n}")
    return StateVector(np.full(1 << n, 2.0 ** (-n / 2), dtype=complex), n)


WALSH_LIMIT = 10


@lru_cache(maxsize=None)
def _walsh(n: int) -> np.ndarray:
    """Unnormalised Walsh-Hadamard matrix ``H^{(x)n} * 2**(n/2)``."""
    W = np.array([[1.0]])
    for _ in range(n):
        W = np.block([[W, W], [W, -W]])
    return W


@lru_cache(maxsize=None)
def _popcount(n: int) -> np.ndarray:
    return _enumeration_chunk(0, 1 << n, n).sum(axis=1)


def _mix(amps: np.ndarray, n: int, beta) -> np.ndarray:
    """``exp(-i beta X)`` on every qubit of a ``(B, 2**n)`` batch; ``beta`` has shape ``(B,)``.

    Small registers use ``exp(-i b sum X) = H exp(-i b sum Z) H``; larger ones
    rotate one qubit axis at a time.
    """
    beta = np.asarray(beta, dtype=float)
    if n <= WALSH_LIMIT:
        W = _walsh(n)
        z_sum = n - 2 * _popcount(n)
        phases = np.exp(-1j * beta[:, None] * z_sum[None, :])
        return ((amps @ W) * phases) @ W / (1 << n)
    B = amps.shape[0]
    c = np.cos(beta)[:, None, None, None]
    s = -1j * np.sin(beta)[:, None, None, None]
    psi = amps.copy()
    for q in range(n):
        v = psi.reshape(B, 1 << q, 2, 1 << (n - q - 1))
        a0 = v[:, :, 0, :].copy()
        a1 = v[:, :, 1, :]
        v[:, :, 0, :] = c[:, :, 0] * a0 + s[:, :, 0] * a1
        v[:, :, 1, :] = s[:, :, 0] * a0 + c[:, :, 0] * a1
    return psi


def apply_cost_layer(sv: StateVector, p: IsingProblem, gamma: float, energies: np.ndarray | None = None) -> StateVector:
    """Diagonal phase ``exp(-i gamma E(z))`` with the offset-free Ising energy."""
    if p.n != sv.n:
        raise ProblemError(f"state has {sv.n} qubits, problem has {p.n} spins")
    if energies is None:
        energies = diagonal_energies(p)
    return StateVector(sv.amplitudes * np.exp(-1j * gamma * energies), sv.n)


def apply_mixer_layer(sv: StateVector, beta: float) -> StateVector:
    """``exp(-i beta X)`` on each qubit: ``[[cos b, -i sin b], [-i sin b, cos b]]``."""
    out = _mix(sv.amplitudes[None, :], sv.n, np.array([beta]))
    return StateVector(out[0], sv.n)


def _evolve_batch(n: int, energies: np.ndarray, betas: np.ndarray, gammas: np.ndarray) -> np.ndarray:
    """States for a batch of angle sets; ``betas``/``gammas`` are ``(B, p)``."""
    B, depth = betas.shape
    amps = np.full((B, 1 << n), 2.0 ** (-n / 2), dtype=complex)
    for k in range(depth):
        amps = amps * np.exp(-1j * gammas[:, k, None] * energies[None, :])
        amps = _mix(amps, n, betas[:, k])
    return amps


def qaoa_state(p: IsingProblem, params: QaoaParams, energies: np.ndarray | None = None) -> StateVector:
    _check_size(p)
    if energies is None:
        energies = diagonal_energies(p)
    amps = _evolve_batch(p.n, energies, np.array([params.betas]), np.array([params.gammas]))
    return StateVector(amps[0], p.n)


def qaoa_expectations(p: IsingProblem, betas, gammas, energies: np.ndarray | None = None) -> np.ndarray:
    """Vectorised expectation for ``(B, p)`` angle arrays (offset included)."""
    _check_size(p)
    if energies is None:
        energies = diagonal_energies(p)
    betas = np.atleast_2d(np.asarray(betas, dtype=float))
    gammas = np.atleast_2d(np.asarray(gammas, dtype=float))
    amps = _evolve_batch(p.n, energies, betas, gammas)
    return (np.abs(amps) ** 2) @ energies + p.offset


def qaoa_expectation(p: IsingProblem, params: QaoaParams, energies: np.ndarray | None = None) -> float:
    return float(qaoa_expectations(p, [params.betas], [params.gammas], energies)[0])


def _energy_scale(energies: np.ndarray) -> float:
    s = float(np.std(energies))
    return s if s > 0 else 1.0


def schedule_angles(p: IsingProblem, depth: int, dt: float | None = None) -> QaoaParams:
    """Trotterised linear schedule ``A(s) = 1 - s``, ``B(s) = s`` at ``s_k = (k - 1/2)/depth``.

    ``gamma_k = s_k dt`` and ``beta_k = -(1 - s_k) dt``; the default ``dt`` is
    ``0.5 / std(E)`` over the basis states.
    """
    if depth < 1:
        raise ProblemError("QAOA depth must be >= 1")
    if dt is None:
        dt = 0.5 / _energy_scale(diagonal_energies(p))
    s = (np.arange(1, depth + 1) - 0.5) / depth
    return QaoaParams(tuple(-(1 - s) * dt), tuple(s * dt))


def sample(sv: StateVector, shots: int, seed: int = 0) -> dict[str, int]:
    """Multinomial measurement counts keyed by bit string (qubit 0 first)."""
    if shots < 1:
        raise ProblemError("shots must be >= 1")
    probs = sv.probabilities
    probs = probs / probs.sum()
    counts = make_rng(seed).multinomial(shots, probs)
    return {format(int(z), f"0{sv.n}b"): int(counts[z]) for z in np.flatnonzero(counts)}


def bitstring_to_spins(bits: str) -> np.ndarray:
    return np.array([1 if b == "0" else -1 for b in bits], dtype=np.int8)


def qaoa_optimize(
    p: IsingProblem,
    depth: int,
    restarts: int = 10,
    seed: int = 0,
    fatol: float = 1e-6,
    max_evals: int = 2000,
) -> tuple[QaoaParams, SolveResult]:
    """Nelder-Mead multistart over ``(betas, gammas)``.

    The first start uses :func:`schedule_angles`; the others are random with
    ``beta`` uniform in ``[-pi/2, pi/2)`` and ``gamma`` uniform in ``[0, pi / std(E))``.
    The returned result's configuration is the most probable basis state.
    """
    if depth < 1:
        raise ProblemError("QAOA depth must be >= 1")
    if restarts < 1:
        raise ProblemError("restarts must be >= 1")
    _check_size(p)
    t_clock = time.perf_counter()
    energies = diagonal_energies(p)
    scale = _energy_scale(energies)
    rng = make_rng(seed)

    def objective(v):
        return float(qaoa_expectations(p, v[None, :depth], v[None, depth:], energies)[0])

    starts = [schedule_angles(p, depth).as_vector()]
    for _ in range(restarts - 1):
        starts.append(np.r_[rng.uniform(-np.pi / 2, np.pi / 2, depth), rng.uniform(0, np.pi / scale, depth)])
    best_v, best_f, evals = None, np.inf, 0
    for v0 in starts:
        res = minimize(
            objective,
            v0,
            method="Nelder-Mead",
            options={"fatol": fatol, "xatol": 1e-8, "maxfev": max_evals},
        )
        evals += int(res.nfev)
        if res.fun < best_f:
            best_f, best_v = float(res.fun), res.x
    params = QaoaParams.from_vector(best_v)
    sv = qaoa_state(p, params, energies)
    z = int(np.argmax(sv.probabilities))
    config = basis_spins(p.n)[z].astype(np.int8)
    e = ising_energy(p, config)
    result = SolveResult(
        config=config,
        energy=e,
        trace=[(evals, e)],
        evaluations=evals,
        wall_time=time.perf_counter() - t_clock,
        seed=seed,
        solver_id="qaoa",
        info={"expectation": best_f, "betas": list(params.betas), "gammas": list(params.gammas)},
    )
    return params, result


def qaoa_solve(p: IsingProblem, seed: int = 0, depth: int = 3, restarts: int = 10, shots: int = 0) -> SolveResult:
    """Solver-registry entry point; with ``shots > 0`` the counts are attached to ``info``."""
    params, result = qaoa_optimize(p, depth, restarts, seed)
    if shots > 0:
        counts = sample(qaoa_state(p, params), shots, seed)
        result.info["counts"] = counts
    return result
