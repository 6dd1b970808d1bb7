import json
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from isingreco import __version__
from isingreco.bench import (
    bench_compare,
    budgeted_solve,
    emit_trace,
    read_report,
    read_trace,
    run_experiment,
    time_to_target,
)
from isingreco.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUN_FAILED, main, version_string
from isingreco.config import ConfigError, config_from_dict, load_config
from isingreco.ising import ProblemError, SolveResult, brute_force_solve, random_problem, save_problem


def write_cfg(tmp_path, body, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(body))
    return path


def solve_cfg(tmp_path, problem_file, seeds="[0, 1]", extra=""):
    return write_cfg(
        tmp_path,
        f"""
        schema_version = 1
        task = "solve"
        seeds = {seeds}
        output = "{tmp_path / 'report.jsonl'}"
        trace_dir = "{tmp_path / 'traces'}"
        {extra}
        [problem]
        file = "{problem_file}"
        [solver]
        ids = ["brute", "sa", "dsb"]
        """,
    )


@pytest.fixture
def problem_file(tmp_path):
    path = tmp_path / "p12.json"
    save_problem(random_problem(12, 0.5, 3), path)
    return path


def strip_wall(text):
    out = []
    for line in text.splitlines():
        rec = json.loads(line)
        out.append({k: v for k, v in rec.items() if "wall_time" not in k})
    return out


# --- config ------------------------------------------------------------------


def base_dict(**over):
    d = {
        "task": "solve",
        "seeds": [0],
        "problem": {"generator": "random_ising", "params": {"n": 6}},
        "solver": {"ids": ["sa"]},
    }
    d.update(over)
    return d


@pytest.mark.parametrize(
    "over, msg",
    [
        ({"seeds": []}, "seeds"),
        ({"colour": 1}, "unknown key"),
        ({"solver": {"ids": ["magic"]}}, "unknown solver"),
        ({"problem": {"generator": "random_ising", "file": "x.json"}}, "exactly one"),
        ({"problem": {}}, "exactly one"),
        ({"problem": {"generator": "random_ising", "params": {"size": 3}}}, "unknown key"),
        ({"task": "dance"}, "unknown task"),
        ({"schema_version": 2}, "schema_version"),
        ({"task_params": {"budget": 1.0}}, "unknown key"),
        ({"problem": {"generator": "toy_event"}}, "does not fit"),
        ({"solver": {"ids": ["sa"], "params": {"dsb": {}}}}, "unknown key"),
    ],
)
def test_config_errors(over, msg):
    with pytest.raises(ConfigError, match=msg):
        config_from_dict(base_dict(**over))


def test_config_roundtrip():
    cfg = config_from_dict(base_dict(trace_dir="t", solver={"ids": ["sa"], "params": {"sa": {"cooling_ratio": 0.9}}}))
    assert config_from_dict(cfg.to_dict()) == cfg


def test_config_bad_toml(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write_cfg(tmp_path, "task = \n"))
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


# --- reports -----------------------------------------------------------------


def test_solve_report(tmp_path, problem_file):
    cfg = load_config(solve_cfg(tmp_path, problem_file))
    report = run_experiment(cfg)
    assert len(report["runs"]) == 3 * 2
    ground = brute_force_solve(random_problem(12, 0.5, 3)).energy
    for r in report["runs"]:
        assert r["status"] == "ok"
        assert r["energy"] >= ground - 1e-9
        assert {"solver_id", "seed", "energy", "wall_time", "evaluations"} <= set(r)
    back = read_report(cfg.output)
    assert back["header"]["version"] == __version__
    assert back["summary"]["n_runs"] == 6
    for r in back["runs"]:
        trace = read_trace(r["trace_file"])
        vals = [v for _, v in trace]
        assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_rerun_byte_identical_except_wall_time(tmp_path, problem_file):
    cfg = load_config(solve_cfg(tmp_path, problem_file))
    run_experiment(cfg)
    first = (tmp_path / "report.jsonl").read_text()
    run_experiment(cfg)
    second = (tmp_path / "report.jsonl").read_text()
    assert strip_wall(first) == strip_wall(second)


def test_closure_from_config_echo(tmp_path, problem_file):
    cfg = load_config(solve_cfg(tmp_path, problem_file, seeds="[4, 5]"))
    report = run_experiment(cfg)
    again = run_experiment(config_from_dict(report["header"]["config"]), write=False)
    assert [r["energy"] for r in report["runs"]] == [r["energy"] for r in again["runs"]]


def test_jobs_do_not_change_results(tmp_path, problem_file):
    cfg = load_config(solve_cfg(tmp_path, problem_file, seeds="[0, 1, 2]"))
    a = run_experiment(cfg, jobs=1, write=False)
    b = run_experiment(cfg, jobs=2, write=False)
    strip = lambda rs: [{k: v for k, v in r.items() if "wall_time" not in k} for r in rs]
    assert strip(a["runs"]) == strip(b["runs"])


@pytest.mark.parametrize(
    "task, generator, solvers, metric",
    [
        ("track", "toy_event", ["dsb"], "efficiency"),
        ("jets", "jet_event", ["sa"], "jet_efficiency"),
        ("vertex", "vertex_event", ["sa", "brute"], "accuracy"),
    ],
)
def test_task_pipelines(tmp_path, task, generator, solvers, metric):
    params = {"toy_event": {"n_particles": 5}, "jet_event": {}, "vertex_event": {}}[generator]
    cfg = config_from_dict(
        {
            "task": task,
            "seeds": [0, 1],
            "output": str(tmp_path / "r.jsonl"),
            "trace_dir": str(tmp_path / "t"),
            "problem": {"generator": generator, "params": params},
            "solver": {"ids": solvers},
        }
    )
    report = run_experiment(cfg)
    assert len(report["runs"]) == 2 * len(solvers)
    for r in report["runs"]:
        assert r["status"] == "ok", r.get("error")
        assert 0.0 <= r[metric] <= 1.0
    if task == "jets":
        hist = (tmp_path / "t" / "mass_histogram.txt").read_text().splitlines()
        assert hist[0].startswith("#") and len(hist) == 41


def test_failures_are_enumerated(tmp_path):
    cfg = config_from_dict(
        {
            "task": "solve",
            "seeds": [0],
            "output": str(tmp_path / "r.jsonl"),
            "problem": {"generator": "random_ising", "params": {"n": 30}},
            "solver": {"ids": ["sa", "brute"]},
        }
    )
    report = run_experiment(cfg)
    assert report["summary"]["n_failed"] == 1
    assert report["summary"]["failures"][0]["solver_id"] == "brute"
    assert "refused" in report["summary"]["failures"][0]["error"]


# --- traces ------------------------------------------------------------------


def test_single_step_trace(tmp_path):
    path = emit_trace(SolveResult(np.array([1]), -1.0, trace=[(0, -1.0)]), tmp_path / "t.txt")
    assert len(open(path).read().splitlines()) == 2


def test_trace_roundtrip_exact(tmp_path):
    p = random_problem(20, 0.5, 1)
    from isingreco.solvers import sa_solve

    res = sa_solve(p, seed=0)
    path = emit_trace(res, tmp_path / "t.txt")
    assert read_trace(path) == res.trace


def test_trace_rejects_non_monotone(tmp_path):
    with pytest.raises(ProblemError):
        emit_trace(SolveResult(np.array([1]), -1.0, trace=[(0, -1.0), (1, 0.0)]), tmp_path / "t.txt")
    with pytest.raises(ProblemError):
        emit_trace(SolveResult(np.array([1]), -1.0, trace=[]), tmp_path / "t.txt")


# --- bench -------------------------------------------------------------------


def test_bench_smoke_n1000():
    p = random_problem(1000, 0.5, 0)
    recs = bench_compare([p], ["sa", "bsb"], budget=0.5, seeds=[0])
    assert [r["solver_id"] for r in recs] == ["sa", "bsb"]
    for r in recs:
        assert np.isfinite(r["energy"]) and r["target"] is None and r["time_to_target"] is None
        assert r["model_time"] <= 0.5 + 1e-9


def test_bench_deterministic():
    p = random_problem(200, 0.5, 1)
    a = bench_compare([p], ["sa", "bsb", "dsb"], budget=0.2, seeds=[0, 1])
    b = bench_compare([p], ["sa", "bsb", "dsb"], budget=0.2, seeds=[0, 1])
    assert [r["energy"] for r in a] == [r["energy"] for r in b]


def test_bench_writes_traces(tmp_path):
    p = random_problem(30, 0.5, 3)
    recs = bench_compare([p], ["sa", "dsb"], budget=0.05, seeds=[4], trace_dir=tmp_path)
    for r in recs:
        trace = read_trace(r["trace_file"])
        assert r["trace_file"].endswith(f"bench-{r['solver_id']}-4.trace.txt")
        assert trace[-1][1] == pytest.approx(r["energy"], abs=1e-9)


def test_time_to_target():
    res = SolveResult(np.array([1]), -3.0, trace=[(0, 0.0), (10, -2.0), (20, -3.0)])
    assert time_to_target(res, 0.5, -2.0) == 5.0
    assert time_to_target(res, 0.5, -4.0) is None
    assert time_to_target(res, 0.5, None) is None


def test_bench_target_from_brute_force():
    p = random_problem(12, 0.5, 2)
    recs = bench_compare([p], ["sa"], budget=0.05, seeds=[0])
    assert recs[0]["target"] == brute_force_solve(p).energy
    if recs[0]["energy"] <= recs[0]["target"] + 1e-9:
        assert recs[0]["time_to_target"] is not None


def test_budget_must_be_positive():
    with pytest.raises(ProblemError):
        bench_compare([random_problem(5, 0.5, 0)], ["sa"], budget=0.0)


def test_budgeted_sb_rejects_steps():
    with pytest.raises(ProblemError):
        budgeted_solve(random_problem(5, 0.5, 0), "bsb", 0.1, 0, {"steps": 10})


# --- CLI ---------------------------------------------------------------------


def test_cli_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert out.strip() == version_string() and "schema" in out


def test_cli_ok(tmp_path, problem_file):
    out = tmp_path / "other.jsonl"
    code = main(["solve", "--config", str(solve_cfg(tmp_path, problem_file)), "--seed", "7", "--out", str(out)])
    assert code == EXIT_OK
    rep = read_report(out)
    assert [r["seed"] for r in rep["runs"]] == [7, 7, 7]


def test_cli_config_error(tmp_path, capsys):
    path = write_cfg(tmp_path, 'task = "solve"\nseeds = []\n[solver]\nids = ["sa"]\n[problem]\ngenerator = "random_ising"\n')
    assert main(["solve", "--config", str(path)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_cli_task_mismatch(tmp_path, problem_file):
    assert main(["jets", "--config", str(solve_cfg(tmp_path, problem_file))]) == EXIT_CONFIG


def test_cli_run_failure_exit_code(tmp_path, capsys):
    path = write_cfg(
        tmp_path,
        f"""
        task = "solve"
        seeds = [0]
        output = "{tmp_path / 'r.jsonl'}"
        [problem]
        generator = "random_ising"
        [problem.params]
        n = 30
        [solver]
        ids = ["brute"]
        """,
    )
    assert main(["solve", "--config", str(path)]) == EXIT_RUN_FAILED
    assert "run failed" in capsys.readouterr().err
    assert (tmp_path / "r.jsonl").exists()


def test_cli_entry_point_subprocess(tmp_path, problem_file):
    proc = subprocess.run(
        [sys.executable, "-m", "isingreco.cli", "solve", "--config", str(solve_cfg(tmp_path, problem_file)), "--jobs", "2"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "wrote 6 records" in proc.stdout
