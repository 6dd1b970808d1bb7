"""Iterative sub-QUBO decomposition around a full incumbent."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from ..ising import ProblemError, QuboProblem, SolveResult, make_rng, qubo_energy

IMPACT_RULES = ("impact", "random")

InnerSolver = Union[str, Callable[[QuboProblem, int], SolveResult]]


@dataclass(frozen=True)
class SubQuboParams:
    """``impact_rule``:

    * ``"impact"``: the ``subset_size`` variables with the largest single-flip
      ``|dE|`` at the incumbent, excluding those chosen in the previous round
      while enough other variables remain (avoids re-solving a settled block).
    * ``"random"``: a uniformly random subset each round.

    Each of the ``restarts`` runs ``rounds`` rounds from its own random
    incumbent. Block moves cannot cross between a state and its near-mirror
    image, so a single incumbent often stalls in the wrong basin.
    """

    subset_size: int
    rounds: int = 20
    inner_solver: InnerSolver = "brute"
    impact_rule: str = "impact"
    restarts: int = 8

    def __post_init__(self):
        if self.subset_size < 1 or self.rounds < 1 or self.restarts < 1:
            raise ProblemError("subset_size, rounds and restarts must be >= 1")
        if self.impact_rule not in IMPACT_RULES:
            raise ProblemError(f"unknown impact rule {self.impact_rule!r}")


def flip_impacts(p: QuboProblem, s: np.ndarray) -> np.ndarray:
    """Energy change of flipping each binary of ``s``."""
    s = np.asarray(s, dtype=float)
    diag = np.asarray(p.Q.diagonal(), dtype=float)
    field = np.asarray(p.Q @ s, dtype=float) - diag * s
    return (1.0 - 2.0 * s) * (diag + 2.0 * field)


def clamp(p: QuboProblem, free: np.ndarray, s: np.ndarray) -> QuboProblem:
    """Sub-problem over ``free`` with the remaining variables fixed to ``s``.

    The clamped variables fold into the linear terms and the offset, so the
    sub-problem energy of ``s[free]`` equals the full energy of ``s``.
    """
    free = np.asarray(free, dtype=int)
    mask = np.zeros(p.n, dtype=bool)
    mask[free] = True
    fixed = np.flatnonzero(~mask)
    c = np.asarray(s, dtype=float)[fixed]
    Q = p.Q.tocsr() if p.is_sparse else np.asarray(p.Q)
    Q_ff = Q[free][:, free]
    Q_fc = Q[free][:, fixed]
    Q_cc = Q[fixed][:, fixed]
    lin = 2.0 * np.asarray(Q_fc @ c, dtype=float).ravel()
    offset = p.offset + float(c @ np.asarray(Q_cc @ c, dtype=float).ravel())
    Q_ff = Q_ff.toarray() if sp.issparse(Q_ff) else np.array(Q_ff)
    Q_ff[np.diag_indices_from(Q_ff)] += lin
    return QuboProblem(Q_ff, offset)


def _resolve_inner(inner: InnerSolver):
    if callable(inner):
        return inner
    from . import run_solver

    return lambda q, seed: run_solver(q, inner, seed)


def subqubo_solve(p: QuboProblem, params: SubQuboParams, seed: int = 0, s0=None) -> SolveResult:
    """Improve random incumbents block by block and return the best one.

    A sub-solution is accepted when the full energy does not increase, so each
    incumbent's energy is non-increasing over its rounds. ``s0`` replaces the
    first restart's random incumbent. The trace holds the best energy so far
    after every round, counted across restarts.
    """
    if params.subset_size > p.n:
        raise ProblemError(f"subset_size {params.subset_size} exceeds n={p.n}")
    t_clock = time.perf_counter()
    rng = make_rng(seed)
    inner = _resolve_inner(params.inner_solver)
    best_s, best_e = None, np.inf
    trace = []
    evaluations = 0
    step = 0
    for restart in range(params.restarts):
        if restart == 0 and s0 is not None:
            s = np.asarray(s0, dtype=np.int8).copy()
        else:
            s = rng.integers(0, 2, p.n).astype(np.int8)
        e = qubo_energy(p, s)
        if e < best_e:
            best_s, best_e = s.copy(), e
        trace.append((step, best_e))
        previous = np.array([], dtype=int)
        for _ in range(params.rounds):
            step += 1
            if params.impact_rule == "random":
                free = np.sort(rng.choice(p.n, params.subset_size, replace=False))
            else:
                impact = np.abs(flip_impacts(p, s))
                order = np.lexsort((rng.random(p.n), -impact))
                if p.n - previous.size >= params.subset_size:
                    order = order[~np.isin(order, previous)]
                free = np.sort(order[: params.subset_size])
            sub = clamp(p, free, s)
            res = inner(sub, int(rng.integers(2**31)))
            evaluations += res.evaluations
            candidate = s.copy()
            candidate[free] = res.config
            e_new = qubo_energy(p, candidate)
            if e_new <= e:
                s, e = candidate, e_new
            if e < best_e:
                best_s, best_e = s.copy(), e
            previous = free
            trace.append((step, best_e))
    return SolveResult(
        config=best_s,
        energy=best_e,
        trace=trace,
        evaluations=evaluations,
        wall_time=time.perf_counter() - t_clock,
        seed=seed,
        solver_id="subqubo",
    )
