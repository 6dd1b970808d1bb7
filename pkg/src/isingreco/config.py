"""Experiment configuration: a versioned TOML file with strict keys.

Layout::

    schema_version = 1
    task = "solve"              # solve | track | jets | vertex | bench
    seeds = [0, 1, 2]
    output = "report.jsonl"
    trace_dir = "traces"        # optional sidecar directory

    [problem]
    generator = "random_ising"  # or: file = "problem.json"
    [problem.params]
    n = 12

    [solver]
    ids = ["brute", "sa", "dsb"]
    [solver.params.sa]
    cooling_ratio = 0.95

    [task_params]               # task-specific knobs, see TASK_PARAMS
    budget = 5.0
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field

from .solvers import SOLVER_IDS

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CONFIG_SCHEMA_VERSION = 1
TASKS = ("solve", "track", "jets", "vertex", "bench")

GENERATORS = {
    "solve": ("random_ising", "random_qubo"),
    "bench": ("random_ising", "random_qubo"),
    "track": ("toy_event",),
    "jets": ("jet_event",),
    "vertex": ("vertex_event",),
}

GENERATOR_PARAMS = {
    "random_ising": {"n": 12, "density": 0.5, "seed": 0},
    "random_qubo": {"n": 12, "density": 0.5, "seed": 0},
    "toy_event": {
        "n_particles": 50,
        "layer_radii": [32.0, 72.0, 116.0, 172.0, 260.0, 360.0, 500.0, 660.0, 820.0, 1020.0],
        "z_half_length": 1500.0,
        "hit_sigma": 0.02,
        "b_field": 2.0,
    },
    "jet_event": {
        "n_jet": 2,
        "sqrt_s": 91.2,
        "spread": 0.05,
        "n_constituents_per_jet": 5,
        "energy_resolution": 0.0,
    },
    "vertex_event": {"n_vertices": 2, "n_tracks": 10, "separation": 5.0, "dz": 1.0},
}

# ``seed`` in a generator's params fixes the instance; otherwise event generators
# take the run seed so each seed is a fresh event.
TASK_PARAMS = {
    "solve": {},
    "track": {"formulation": "triplet", "max_dphi": 0.2, "max_z0": 200.0, "max_curvature": 1.5e-3, "max_dtheta": 0.05},
    "jets": {"formulation": "durham", "lambda_pen": "tight", "histogram_bins": 40},
    "vertex": {"m": 1.0, "lambda_pen": "auto"},
    "bench": {"budget": 5.0, "target": "brute"},
}


class ConfigError(ValueError):
    pass


@dataclass
class ProblemSource:
    file: str | None = None
    generator: str | None = None
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    task: str
    seeds: list
    solvers: list
    problem: ProblemSource = field(default_factory=ProblemSource)
    solver_params: dict = field(default_factory=dict)
    task_params: dict = field(default_factory=dict)
    output: str = "report.jsonl"
    trace_dir: str | None = None
    schema_version: int = CONFIG_SCHEMA_VERSION

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> dict:
        """Normalised nested form; :func:`config_from_dict` of it rebuilds an equal config."""
        d = asdict(self)
        out = {
            "schema_version": d["schema_version"],
            "task": d["task"],
            "seeds": list(d["seeds"]),
            "output": d["output"],
            "problem": {k: v for k, v in d["problem"].items() if v is not None},
            "solver": {"ids": list(d["solvers"]), "params": d["solver_params"]},
            "task_params": d["task_params"],
        }
        if d["trace_dir"] is not None:
            out["trace_dir"] = d["trace_dir"]
        return out


def _unknown(where: str, got, allowed) -> None:
    extra = sorted(set(got) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {extra}")


def validate(cfg: ExperimentConfig) -> None:
    if cfg.schema_version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema_version {cfg.schema_version}; expected {CONFIG_SCHEMA_VERSION}")
    if cfg.task not in TASKS:
        raise ConfigError(f"unknown task {cfg.task!r}; choose from {TASKS}")
    if not isinstance(cfg.seeds, list) or not cfg.seeds:
        raise ConfigError("seeds must be a non-empty list of integers")
    if not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in cfg.seeds):
        raise ConfigError("seeds must be non-negative integers")
    if not cfg.solvers:
        raise ConfigError("at least one solver id is required")
    for sid in cfg.solvers:
        if sid not in SOLVER_IDS:
            raise ConfigError(f"unknown solver id {sid!r}; choose from {SOLVER_IDS}")
    _unknown("[solver.params]", cfg.solver_params, cfg.solvers)
    src = cfg.problem
    if (src.file is None) == (src.generator is None):
        raise ConfigError("[problem] needs exactly one of 'file' or 'generator'")
    if src.generator is not None:
        if src.generator not in GENERATORS[cfg.task]:
            raise ConfigError(f"generator {src.generator!r} does not fit task {cfg.task!r}; choose from {GENERATORS[cfg.task]}")
        allowed = set(GENERATOR_PARAMS[src.generator]) | {"seed"}
        _unknown("[problem.params]", src.params, allowed)
    elif src.params:
        raise ConfigError("[problem.params] only applies to generators")
    _unknown("[task_params]", cfg.task_params, TASK_PARAMS[cfg.task])
    if cfg.task == "bench" and not float(cfg.task_params.get("budget", 5.0)) > 0:
        raise ConfigError("bench budget must be positive")


def config_from_dict(d: dict) -> ExperimentConfig:
    _unknown("config", d, {"schema_version", "task", "seeds", "output", "trace_dir", "problem", "solver", "task_params"})
    for key in ("task", "seeds", "solver"):
        if key not in d:
            raise ConfigError(f"missing required key {key!r}")
    prob = d.get("problem", {})
    _unknown("[problem]", prob, {"file", "generator", "params"})
    solver = d["solver"]
    _unknown("[solver]", solver, {"ids", "params"})
    if "ids" not in solver:
        raise ConfigError("[solver] needs 'ids'")
    return ExperimentConfig(
        task=d["task"],
        seeds=list(d["seeds"]),
        solvers=list(solver["ids"]),
        problem=ProblemSource(prob.get("file"), prob.get("generator"), dict(prob.get("params", {}))),
        solver_params={k: dict(v) for k, v in solver.get("params", {}).items()},
        task_params=dict(d.get("task_params", {})),
        output=d.get("output", "report.jsonl"),
        trace_dir=d.get("trace_dir"),
        schema_version=d.get("schema_version", CONFIG_SCHEMA_VERSION),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data)


def resolved(cfg: ExperimentConfig, key: str, default=None):
    """Task parameter with the documented default filled in."""
    return cfg.task_params.get(key, TASK_PARAMS[cfg.task].get(key, default))


def generator_params(cfg: ExperimentConfig) -> dict:
    out = dict(GENERATOR_PARAMS[cfg.problem.generator])
    out.update(cfg.problem.params)
    return out

