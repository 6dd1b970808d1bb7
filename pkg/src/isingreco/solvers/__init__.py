"""Heuristic solvers and a string-keyed dispatcher.

Solver ids: ``"sa"``, ``"bsb"``, ``"dsb"``, ``"subqubo"``, ``"brute"`` and ``"qaoa"``.
Every solver accepts either problem kind; QUBO problems are converted to Ising
form (and back) for the spin-based solvers, with energies re-evaluated on the
original problem.
"""

from __future__ import annotations

from dataclasses import fields, replace

import numpy as np

from ..ising import (
    IsingProblem,
    ProblemError,
    QuboProblem,
    SolveResult,
    binary_to_spins,
    brute_force_solve,
    energy,
    ising_to_qubo,
    qubo_to_ising,
    spins_to_binary,
)
from .refine import local_refine
from .sa import _monotone, SaSchedule, default_schedule, metropolis_accept, sa_solve
from .sb import SbParams, SbState, auto_c0, sb_hamiltonian, sb_solve, sb_step
from .subqubo import SubQuboParams, clamp, flip_impacts, subqubo_solve

SOLVER_IDS = ("sa", "bsb", "dsb", "subqubo", "brute", "qaoa")

__all__ = [
    "SOLVER_IDS",
    "SaSchedule",
    "SbParams",
    "SbState",
    "SubQuboParams",
    "auto_c0",
    "clamp",
    "default_schedule",
    "flip_impacts",
    "local_refine",
    "metropolis_accept",
    "run_solver",
    "sa_solve",
    "sb_hamiltonian",
    "sb_solve",
    "sb_step",
    "subqubo_solve",
]


def _check_keys(solver_id, params, allowed):
    unknown = set(params) - set(allowed)
    if unknown:
        raise ProblemError(f"unknown parameters for solver {solver_id!r}: {sorted(unknown)}")


def _ising_solve(p: IsingProblem, solver_id: str, seed: int, params: dict) -> SolveResult:
    if solver_id == "sa":
        _check_keys(solver_id, params, {"t_start", "t_end", "cooling_ratio", "sweeps_per_stage", "refine"})
        params = dict(params)
        refine = params.pop("refine", False)
        sched = default_schedule(p, seed)
        if params:
            if "t_start" in params and "t_end" not in params:
                params["t_end"] = 1e-3 * params["t_start"]
            sched = replace(sched, **params)
        res = sa_solve(p, sched, seed)
    elif solver_id in ("bsb", "dsb"):
        allowed = {f.name for f in fields(SbParams)} - {"variant"} | {"refine"}
        _check_keys(solver_id, params, allowed)
        params = dict(params)
        refine = params.pop("refine", False)
        variant = "ballistic" if solver_id == "bsb" else "discrete"
        res = sb_solve(p, SbParams(variant=variant, **params), seed)
    elif solver_id == "brute":
        _check_keys(solver_id, params, set())
        return brute_force_solve(p)
    elif solver_id == "qaoa":
        _check_keys(solver_id, params, {"depth", "restarts", "shots"})
        from ..qaoa import qaoa_solve

        return qaoa_solve(p, seed=seed, **params)
    else:
        raise ProblemError(f"unknown solver id {solver_id!r}; choose from {SOLVER_IDS}")
    if refine:
        x = local_refine(p, res.config)
        e = energy(p, x)
        if e < res.energy:
            res.config, res.energy = x, e
            res.trace.append((res.trace[-1][0] + 1, e))
    return res


def run_solver(problem, solver_id: str, seed: int = 0, params: dict | None = None) -> SolveResult:
    """Solve ``problem`` with the named solver; the result lives in the problem's own domain."""
    params = dict(params or {})
    if solver_id == "subqubo":
        allowed = {f.name for f in fields(SubQuboParams)}
        _check_keys(solver_id, params, allowed)
        if "subset_size" not in params:
            params["subset_size"] = min(problem.n, 16)
        q = problem if isinstance(problem, QuboProblem) else ising_to_qubo(problem)
        res = subqubo_solve(q, SubQuboParams(**params), seed)
        if isinstance(problem, IsingProblem):
            res.config = binary_to_spins(res.config)
            res.energy = energy(problem, res.config)
        return res
    if isinstance(problem, IsingProblem):
        return _ising_solve(problem, solver_id, seed, params)
    if not isinstance(problem, QuboProblem):
        raise ProblemError(f"not a problem: {type(problem).__name__}")
    if solver_id == "brute":
        _check_keys(solver_id, params, set())
        return brute_force_solve(problem)
    res = _ising_solve(qubo_to_ising(problem), solver_id, seed, params)
    res.config = spins_to_binary(res.config)
    e = energy(problem, res.config)
    res.trace = _monotone(res.trace, e)
    res.energy = e
    return res


def ising_view(problem) -> IsingProblem:
    return problem if isinstance(problem, IsingProblem) else qubo_to_ising(problem)


def to_domain(problem, spins: np.ndarray) -> np.ndarray:
    return spins if isinstance(problem, IsingProblem) else spins_to_binary(spins)
