"""Experiment pipelines, the budgeted solver comparison, and report/trace emission.

Reports are JSON lines: one ``header`` record (library and schema versions plus
the normalised config), one ``run`` record per (solver, seed) and a closing
``summary`` record. Keys are sorted and floats use ``repr``, so two runs of
the same config differ only in fields whose name contains ``wall_time``.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .config import ExperimentConfig, generator_params, resolved
from .ising import (
    PROBLEM_FORMAT_VERSION,
    BRUTE_FORCE_LIMIT,
    IsingProblem,
    ProblemError,
    SolveResult,
    brute_force_solve,
    energy,
    ising_to_qubo,
    load_problem,
    random_problem,
)
from .solvers import SbParams, default_schedule, ising_view, run_solver, sa_solve, sb_solve, to_domain

REPORT_SCHEMA_VERSION = 1


# ---------------------------------------------------------------- budget model


@dataclass(frozen=True)
class CostModel:
    """Seconds per SA sweep and per SB step, fitted on a single CPU core.

    A wall-clock budget becomes a fixed iteration count, so a budgeted run is
    reproducible from its seed; the measured ``wall_time`` is still reported.
    """

    sa_per_nnz: float = 2.5e-10
    sa_per_spin: float = 2e-8
    sb_per_entry: float = 1.5e-10
    sb_per_entry_restart: float = 0.6e-10
    sb_overhead: float = 20e-6
    sparse_factor: float = 3.0

    def _entries(self, p: IsingProblem, extra: int = 0) -> float:
        if p.is_sparse:
            return self.sparse_factor * (p.J.nnz + 2 * p.n)
        return float((p.n + extra) ** 2)

    def sa_sweep(self, p: IsingProblem) -> float:
        nnz = p.J.nnz if p.is_sparse else int(np.count_nonzero(p.J))
        return self.sa_per_nnz * nnz + self.sa_per_spin * p.n

    def sb_step(self, p: IsingProblem, params: SbParams) -> float:
        extra = 1 if params.field_mode == "ancilla" and np.any(p.h != 0) else 0
        per = self._entries(p, extra) * (self.sb_per_entry + self.sb_per_entry_restart * params.restarts)
        return per * (1.0 + 1.0 / params.trace_every) + self.sb_overhead


COST = CostModel()
BENCH_SB_DEFAULTS = {"trace_every": 10}


def budgeted_solve(p: IsingProblem, solver_id: str, budget: float, seed: int, params: dict | None = None, cost: CostModel = COST):
    """Run ``solver_id`` with an iteration count derived from ``budget`` seconds.

    Returns ``(result, seconds_per_trace_step)``; the latter converts trace steps
    into modelled time. Solvers without an iteration knob run unchanged and
    report measured seconds per evaluation instead.
    """
    params = dict(params or {})
    if solver_id == "sa":
        sched = default_schedule(p, seed)
        for k in ("t_start", "t_end", "cooling_ratio"):
            if k in params:
                sched = replace(sched, **{k: params.pop(k)})
        if params:
            raise ProblemError(f"budgeted sa accepts t_start, t_end, cooling_ratio; got {sorted(params)}")
        per = cost.sa_sweep(p)
        stages = len(sched.temperatures())
        sweeps = max(1, int(budget / (per * stages)))
        res = sa_solve(p, replace(sched, sweeps_per_stage=sweeps), seed)
        return res, per
    if solver_id in ("bsb", "dsb"):
        kw = dict(BENCH_SB_DEFAULTS)
        kw.update(params)
        if "steps" in kw:
            raise ProblemError("budgeted SB derives 'steps' from the budget")
        sb = SbParams(variant="ballistic" if solver_id == "bsb" else "discrete", **kw)
        per = cost.sb_step(p, sb)
        sb = replace(sb, steps=max(1, int(budget / per)))
        return sb_solve(p, sb, seed), per
    res = run_solver(p, solver_id, seed, params)
    per = res.wall_time / max(1, res.evaluations)
    return res, per


def time_to_target(result: SolveResult, per_step: float, target: float | None, tol: float = 1e-9):
    """Modelled seconds until the best-so-far first reaches ``target``, or ``None``."""
    if target is None:
        return None
    thr = target + tol * max(1.0, abs(target))
    for step, best in result.trace:
        if best <= thr:
            return float(step * per_step)
    return None


def bench_compare(
    problems, solvers, budget: float, seeds=(0,), targets=None, solver_params=None, cost: CostModel = COST, trace_dir=None
):
    """Energy-at-budget and time-to-target for every (problem, solver, seed).

    ``targets`` defaults to the brute-force ground energy when ``n <= 24``,
    otherwise ``None``. With ``trace_dir`` each run's best-so-far trace is
    written there and its path stored under ``trace_file``. Returns a list of
    record dicts.
    """
    if not budget > 0:
        raise ProblemError("budget must be positive")
    solver_params = solver_params or {}
    records = []
    for pi, prob in enumerate(problems):
        isg = ising_view(prob)
        if targets is not None:
            target = targets[pi]
        elif isg.n <= BRUTE_FORCE_LIMIT:
            target = brute_force_solve(isg).energy
        else:
            target = None
        for sid in solvers:
            for seed in seeds:
                res, per = budgeted_solve(isg, sid, budget, seed, solver_params.get(sid), cost)
                e = energy(prob, to_domain(prob, res.config))
                records.append(
                    {
                        "problem": pi,
                        "solver_id": sid,
                        "seed": int(seed),
                        "energy": float(e),
                        "evaluations": int(res.evaluations),
                        "budget": float(budget),
                        "model_time": float(res.trace[-1][0] * per) if res.trace else 0.0,
                        "target": None if target is None else float(target),
                        "time_to_target": time_to_target(res, per, target),
                        "wall_time": float(res.wall_time),
                        "within_budget_wall_time": bool(res.wall_time <= budget),
                    }
                )
                if trace_dir is not None:
                    tag = f"bench-{sid}-{seed}" if len(problems) == 1 else f"bench-p{pi}-{sid}-{seed}"
                    records[-1]["trace_file"] = emit_trace(res, os.path.join(trace_dir, f"{tag}.trace.txt"))
    return records


# ---------------------------------------------------------------- emission


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_trace(result: SolveResult, path) -> str:
    """Two columns ``step best_energy`` under a ``#`` header; returns the path."""
    if not result.trace:
        raise ProblemError("cannot emit an empty trace")
    best = [v for _, v in result.trace]
    if any(b > a for a, b in zip(best, best[1:])):
        raise ProblemError("trace is not monotone non-increasing")
    lines = ["# step best_energy"] + [f"{int(s)} {float(v)!r}" for s, v in result.trace]
    _atomic_write(str(path), "\n".join(lines) + "\n")
    return str(path)


def read_trace(path) -> list[tuple[int, float]]:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            s, v = line.split()
            out.append((int(s), float(v)))
    return out


def emit_histogram(edges, counts, path) -> str:
    """Sidecar ``bin_low bin_high count`` rows."""
    lines = ["# bin_low bin_high count"]
    lines += [f"{float(a)!r} {float(b)!r} {int(c)}" for a, b, c in zip(edges[:-1], edges[1:], counts)]
    _atomic_write(str(path), "\n".join(lines) + "\n")
    return str(path)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def dumps(record: dict) -> str:
    return json.dumps(_clean(record), sort_keys=True, default=_json_default)


def write_report(report: dict, path) -> str:
    lines = [dumps(report["header"])] + [dumps(r) for r in report["runs"]] + [dumps(report["summary"])]
    _atomic_write(str(path), "\n".join(lines) + "\n")
    return str(path)


def read_report(path) -> dict:
    header, runs, summary = None, [], None
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            kind = rec.get("type")
            if kind == "header":
                header = rec
            elif kind == "run":
                runs.append(rec)
            elif kind == "summary":
                summary = rec
    return {"header": header, "runs": runs, "summary": summary}


# ---------------------------------------------------------------- pipelines


def _load_or_generate_problem(cfg: ExperimentConfig):
    if cfg.problem.file is not None:
        return load_problem(cfg.problem.file)
    gp = generator_params(cfg)
    p = random_problem(int(gp["n"]), float(gp["density"]), int(gp["seed"]))
    return ising_to_qubo(p) if cfg.problem.generator == "random_qubo" else p


def _trace_path(cfg, tag: str) -> str | None:
    if cfg.trace_dir is None:
        return None
    return os.path.join(cfg.trace_dir, f"{tag}.trace.txt")


def _run_solve(cfg: ExperimentConfig, sid: str, seed: int, problem) -> dict:
    t0 = time.perf_counter()
    res = run_solver(problem, sid, seed, cfg.solver_params.get(sid))
    rec = {"energy": res.energy, "evaluations": res.evaluations, "wall_time": time.perf_counter() - t0, "n": problem.n}
    path = _trace_path(cfg, f"{cfg.task}-{sid}-{seed}")
    if path:
        rec["trace_file"] = emit_trace(res, path)
    return rec


def _run_bench(cfg: ExperimentConfig, sid: str, seed: int, problem) -> dict:
    budget = float(resolved(cfg, "budget"))
    target = resolved(cfg, "target")
    targets = None
    if target == "brute":
        targets = None if problem.n <= BRUTE_FORCE_LIMIT else [None]
    elif target in (None, "none"):
        targets = [None]
    else:
        targets = [float(target)]
    rec = bench_compare([problem], [sid], budget, [seed], targets, cfg.solver_params, trace_dir=cfg.trace_dir)[0]
    rec.pop("problem")
    rec.pop("solver_id")
    rec.pop("seed")
    rec["n"] = problem.n
    return rec


def _run_track(cfg: ExperimentConfig, sid: str, seed: int, _problem) -> dict:
    from .tracking import (
        DetectorModel,
        DoubletCuts,
        DpParams,
        TripletCuts,
        build_doublets,
        build_triplets,
        decode_tracks,
        doublet_metrics,
        dp_qubo,
        generate_toy_event,
        load_hits_csv,
        selected_pairs,
        triplet_qubo,
        truth_doublets,
    )

    if cfg.problem.file is not None:
        hits = load_hits_csv(cfg.problem.file)
    else:
        gp = generator_params(cfg)
        det = DetectorModel(tuple(gp["layer_radii"]), gp["z_half_length"], gp["hit_sigma"], gp["b_field"])
        _, hits = generate_toy_event(int(gp["n_particles"]), det, int(gp.get("seed", seed)))
    dcuts = DoubletCuts(max_dphi=resolved(cfg, "max_dphi"), max_z0=resolved(cfg, "max_z0"))
    doublets = build_doublets(hits, dcuts)
    formulation = resolved(cfg, "formulation")
    if formulation == "triplet":
        tcuts = TripletCuts(max_curvature=resolved(cfg, "max_curvature"), max_dtheta=resolved(cfg, "max_dtheta"))
        segments = build_triplets(doublets, hits, tcuts)
        q = triplet_qubo(segments)
    elif formulation == "doublet":
        segments = doublets
        q = dp_qubo(doublets, hits, DpParams())
    else:
        raise ProblemError(f"unknown track formulation {formulation!r}; use 'triplet' or 'doublet'")
    t0 = time.perf_counter()
    res = run_solver(q, sid, seed, cfg.solver_params.get(sid)) if q.n else None
    wall = time.perf_counter() - t0
    sol = res.config if res is not None else np.zeros(0, dtype=np.int8)
    eff, pur = doublet_metrics(selected_pairs(sol, segments), truth_doublets(hits))
    return {
        "energy": res.energy if res is not None else 0.0,
        "evaluations": res.evaluations if res is not None else 0,
        "wall_time": wall,
        "n": q.n,
        "n_hits": len(hits),
        "n_tracks": len(decode_tracks(sol, segments)),
        "efficiency": eff,
        "purity": pur,
    }


def _run_jets(cfg: ExperimentConfig, sid: str, seed: int, _problem) -> dict:
    from .jets import (
        angle_qubo,
        build_jets,
        decode_jets,
        dijet_assignment,
        durham_matrix,
        eekt_cluster,
        generate_jet_event,
        invariant_mass,
        jet_efficiency,
        load_constituents_csv,
        multijet_qubo,
        thrust_qubo,
    )

    if cfg.problem.file is not None:
        ev = load_constituents_csv(cfg.problem.file)
    else:
        gp = generator_params(cfg)
        ev = generate_jet_event(
            int(gp["n_jet"]),
            float(gp["sqrt_s"]),
            float(gp["spread"]),
            int(gp["n_constituents_per_jet"]),
            int(gp.get("seed", seed)),
            energy_resolution=float(gp["energy_resolution"]),
        )
    n_jet = ev.n_jet
    formulation = resolved(cfg, "formulation")
    if formulation == "durham":
        q = multijet_qubo(durham_matrix(ev), n_jet, resolved(cfg, "lambda_pen"))
    elif formulation in ("angle", "thrust"):
        if n_jet != 2:
            raise ProblemError(f"the {formulation} QUBO is dijet only; event has {n_jet} jets")
        q = angle_qubo(ev) if formulation == "angle" else thrust_qubo(ev)
    else:
        raise ProblemError(f"unknown jet formulation {formulation!r}; use 'durham', 'angle' or 'thrust'")
    t0 = time.perf_counter()
    res = run_solver(q, sid, seed, cfg.solver_params.get(sid))
    wall = time.perf_counter() - t0
    if formulation == "durham":
        assign = decode_jets(res.config, ev.n, n_jet, ev.momenta())
    else:
        assign = dijet_assignment(res.config)
    jets = build_jets(ev, assign)
    ref = eekt_cluster(ev, n_jet)
    return {
        "energy": res.energy,
        "evaluations": res.evaluations,
        "wall_time": wall,
        "n": q.n,
        "jet_efficiency": jet_efficiency(assign, ref),
        "violations": assign.violations,
        "repairs": assign.repairs,
        "mass": invariant_mass(jets),
        "jet_masses": [invariant_mass([j]) if j.e > 0 else 0.0 for j in jets],
    }


def _run_vertex(cfg: ExperimentConfig, sid: str, seed: int, _problem) -> dict:
    from .tracking.vertex import (
        VertexProblemParams,
        best_permutation_accuracy,
        decode_vertices,
        generate_vertex_event,
        vertex_qubo,
    )

    gp = generator_params(cfg) if cfg.problem.generator else None
    if gp is None:
        raise ProblemError("the vertex task needs the 'vertex_event' generator")
    n_v, n_t = int(gp["n_vertices"]), int(gp["n_tracks"])
    tracks, truth = generate_vertex_event(n_v, n_t, float(gp["separation"]), float(gp["dz"]), int(gp.get("seed", seed)))
    lam = resolved(cfg, "lambda_pen")
    params = VertexProblemParams(n_v, float(resolved(cfg, "m")), None if lam == "auto" else float(lam))
    q = vertex_qubo(tracks, params)
    t0 = time.perf_counter()
    res = run_solver(q, sid, seed, cfg.solver_params.get(sid))
    wall = time.perf_counter() - t0
    labels, violations = decode_vertices(res.config, n_t, n_v)
    return {
        "energy": res.energy,
        "evaluations": res.evaluations,
        "wall_time": wall,
        "n": q.n,
        "accuracy": best_permutation_accuracy(labels, truth, n_v),
        "violations": violations,
    }


PIPELINES = {"solve": _run_solve, "bench": _run_bench, "track": _run_track, "jets": _run_jets, "vertex": _run_vertex}


def _one_run(cfg: ExperimentConfig, sid: str, seed: int) -> dict:
    base = {"type": "run", "task": cfg.task, "solver_id": sid, "seed": int(seed)}
    try:
        problem = _load_or_generate_problem(cfg) if cfg.task in ("solve", "bench") else None
        rec = PIPELINES[cfg.task](cfg, sid, seed, problem)
        base.update(rec)
        base["status"] = "ok"
    except (ProblemError, OSError, ValueError) as exc:
        base["status"] = "error"
        base["error"] = f"{type(exc).__name__}: {exc}"
    return base


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, write: bool = True) -> dict:
    """Run every (solver, seed) pair and write the report atomically.

    Records are ordered by solver then seed whatever ``jobs`` is; each run
    depends only on its own seed.
    """
    tasks = [(sid, seed) for sid in cfg.solvers for seed in cfg.seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_one_run, [cfg] * len(tasks), *zip(*tasks)))
    else:
        runs = [_one_run(cfg, sid, seed) for sid, seed in tasks]
    failures = [{"solver_id": r["solver_id"], "seed": r["seed"], "error": r["error"]} for r in runs if r["status"] != "ok"]
    report = {
        "header": {
            "type": "header",
            "library": "isingreco",
            "version": __version__,
            "report_schema_version": REPORT_SCHEMA_VERSION,
            "problem_format_version": PROBLEM_FORMAT_VERSION,
            "config": cfg.to_dict(),
        },
        "runs": runs,
        "summary": {"type": "summary", "n_runs": len(runs), "n_failed": len(failures), "failures": failures},
    }
    if cfg.task == "jets" and cfg.trace_dir is not None:
        masses = [r["mass"] for r in runs if r["status"] == "ok"]
        if masses:
            from .jets import mass_histogram

            edges, counts = mass_histogram(masses, int(resolved(cfg, "histogram_bins")))
            report["summary"]["mass_histogram_file"] = emit_histogram(edges, counts, os.path.join(cfg.trace_dir, "mass_histogram.txt"))
    if write:
        write_report(report, cfg.output)
    return report
