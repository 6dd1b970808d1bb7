"""Ballistic and discrete simulated bifurcation.

The oscillator equations are usually written for maximising ``1/2 x.J.x + h.x``.
This package minimises the Ising energy, so the coupling force is the negative
gradient of the energy: ``-c0 * (h + J.m)`` with ``m = x`` (ballistic) or
``m = sgn(x)`` (discrete). Equivalently the textbook update is applied to the
problem ``(-J, -h)``.

Update order per step (symplectic Euler, all oscillators from the same snapshot):

1. ``y += dt * (-(a0 - a) x - c0 (h + J m))``
2. ``x += dt * a0 * y``
3. inelastic walls: where ``|x| > 1`` set ``x = sgn(x)`` and ``y = 0``.

By default :func:`sb_solve` moves the fields ``h`` into couplings to one extra
spin (``field_mode="ancilla"``) and reads the solution relative to that spin's
sign. The energy landscape is unchanged, but the continuous relaxation no longer
feels a constant drift, which removes most of the ballistic variant's bias on
problems with fields.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from ..ising import IsingProblem, ProblemError, SolveResult, ising_energy, make_rng
from .sa import _monotone

VARIANTS = ("ballistic", "discrete")


@dataclass(frozen=True)
class SbParams:
    variant: str = "discrete"
    a0: float = 1.0
    c0: float | None = None  # None selects auto_c0
    dt: float = 0.5
    steps: int = 1000
    restarts: int = 8
    trace_every: int = 1
    field_mode: str = "ancilla"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ProblemError(f"unknown SB variant {self.variant!r}; choose from {VARIANTS}")
        if not self.a0 > 0:
            raise ProblemError("a0 must be positive")
        if self.c0 is not None and not self.c0 > 0:
            raise ProblemError("c0 must be positive")
        if not self.dt > 0:
            raise ProblemError("dt must be positive")
        if self.field_mode not in ("ancilla", "direct"):
            raise ProblemError(f"field_mode must be 'ancilla' or 'direct', got {self.field_mode!r}")
        if self.steps < 1 or self.restarts < 1 or self.trace_every < 1:
            raise ProblemError("steps, restarts and trace_every must be >= 1")


@dataclass
class SbState:
    """Positions and momenta; arrays may be ``(n,)`` or ``(n, restarts)``."""

    x: np.ndarray
    y: np.ndarray
    t: float = 0.0


def sgn(x: np.ndarray) -> np.ndarray:
    """Sign with ``sgn(0) = +1``."""
    return np.where(x >= 0, 1.0, -1.0)


def auto_c0(p: IsingProblem, a0: float = 1.0) -> float:
    """``0.5 a0 / (sigma_J sqrt(n))`` with sigma_J the RMS off-diagonal coupling."""
    n = p.n
    if n < 2:
        return a0
    sq = p.J.multiply(p.J).sum() if p.is_sparse else float(np.sum(np.asarray(p.J) ** 2))
    sigma = np.sqrt(float(sq) / (n * (n - 1)))
    if sigma == 0:
        return a0
    return 0.5 * a0 / (sigma * np.sqrt(n))


def _force(p: IsingProblem, x: np.ndarray, variant: str) -> np.ndarray:
    m = sgn(x) if variant == "discrete" else x
    h = p.h if x.ndim == 1 else p.h[:, None]
    return np.asarray(p.J @ m) + h


def sb_step(state: SbState, p: IsingProblem, params: SbParams, pump: float) -> SbState:
    """One symplectic Euler step with inelastic walls; returns a new state."""
    if not 0 <= pump <= params.a0:
        raise ProblemError(f"pump a(t)={pump} outside [0, a0={params.a0}]")
    if not (np.all(np.isfinite(state.x)) and np.all(np.isfinite(state.y))):
        raise ProblemError("non-finite SB state")
    c0 = params.c0 if params.c0 is not None else auto_c0(p, params.a0)
    x, y = state.x, state.y
    y = y + params.dt * (-(params.a0 - pump) * x - c0 * _force(p, x, params.variant))
    x = x + params.dt * params.a0 * y
    wall = np.abs(x) > 1.0
    x = np.where(wall, np.sign(x), x)
    y = np.where(wall, 0.0, y)
    return SbState(x, y, state.t + params.dt)


def sb_hamiltonian(state: SbState, p: IsingProblem, params: SbParams, pump: float) -> float:
    """``a0/2 sum y^2 + V`` for positions inside the walls (minimisation sign)."""
    c0 = params.c0 if params.c0 is not None else auto_c0(p, params.a0)
    x, y = state.x, state.y
    m = sgn(x) if params.variant == "discrete" else x
    potential = 0.5 * (params.a0 - pump) * np.sum(x**2) + c0 * (0.5 * x @ np.asarray(p.J @ m) + p.h @ x)
    return float(0.5 * params.a0 * np.sum(y**2) + potential)


def with_field_ancilla(p: IsingProblem) -> IsingProblem:
    """Equivalent zero-field problem on ``n + 1`` spins: ``J[i, n] = h_i``.

    A configuration ``z`` maps back to ``z[:n] * z[n]``.
    """
    n = p.n
    if p.is_sparse:
        col = sp.csr_matrix(p.h.reshape(-1, 1))
        J = sp.bmat([[p.J, col], [col.T, None]], format="csr")
    else:
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = p.J
        J[:n, n] = p.h
        J[n, :n] = p.h
    return IsingProblem(J, np.zeros(n + 1), p.offset)


def _energies(p: IsingProblem, S: np.ndarray) -> np.ndarray:
    return 0.5 * np.einsum("ir,ir->r", S, np.asarray(p.J @ S)) + p.h @ S + p.offset


def sb_solve(p: IsingProblem, params: SbParams = SbParams(), seed: int = 0) -> SolveResult:
    """Run ``params.restarts`` independent trajectories side by side.

    Positions and momenta start uniform in [-0.1, 0.1]; the pump ramps linearly
    from 0 to ``a0``. ``sgn(x)`` is evaluated every ``trace_every`` steps and after
    the last step; the best evaluated configuration is returned.
    """
    t_clock = time.perf_counter()
    original = p
    ancilla = params.field_mode == "ancilla" and bool(np.any(p.h != 0))
    if ancilla:
        p = with_field_ancilla(p)
    if params.c0 is None:
        params = replace(params, c0=auto_c0(p, params.a0))
    rng = make_rng(seed)
    shape = (p.n, params.restarts)
    state = SbState(rng.uniform(-0.1, 0.1, shape), rng.uniform(-0.1, 0.1, shape))
    pumps = np.linspace(0.0, params.a0, params.steps)
    best_e, best_cfg = np.inf, None
    trace = []
    for k, pump in enumerate(pumps, start=1):
        state = sb_step(state, p, params, float(pump))
        if k % params.trace_every == 0 or k == params.steps:
            S = sgn(state.x)
            e = _energies(p, S)
            r = int(np.argmin(e))
            if e[r] < best_e:
                best_e, best_cfg = float(e[r]), S[:, r].copy()
            trace.append((k, best_e))
    if ancilla:
        best_cfg = best_cfg[:-1] * best_cfg[-1]
    config = best_cfg.astype(np.int8)
    final = ising_energy(original, config)
    trace = _monotone(trace, final)
    return SolveResult(
        config=config,
        energy=final,
        trace=trace,
        evaluations=params.steps * params.restarts,
        wall_time=time.perf_counter() - t_clock,
        seed=seed,
        solver_id="dsb" if params.variant == "discrete" else "bsb",
        info={"c0": params.c0, "final_energies": [float(v) for v in _energies(p, sgn(state.x))]},
    )
