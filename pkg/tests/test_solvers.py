import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isingreco.ising import (
    IsingProblem,
    ProblemError,
    QuboProblem,
    brute_force_solve,
    energy,
    ising_energy,
    ising_to_qubo,
    qubo_energy,
    random_problem,
)
from isingreco.solvers import (
    SaSchedule,
    SbParams,
    SbState,
    SubQuboParams,
    auto_c0,
    clamp,
    flip_impacts,
    local_refine,
    metropolis_accept,
    run_solver,
    sa_solve,
    sb_hamiltonian,
    sb_solve,
    sb_step,
    subqubo_solve,
)
from isingreco.solvers.sb import sgn

FERRO = IsingProblem.from_terms(2, [(0, 1, -1.0)])


def test_metropolis_examples():
    assert metropolis_accept(-0.5, 0.1, 0.999)
    assert metropolis_accept(0.0, 1.0, 0.999)
    assert not metropolis_accept(1.0, 1.0, 0.5)
    assert metropolis_accept(1.0, 1.0, 0.3)


@pytest.mark.parametrize("t", [0.0, -1.0])
def test_metropolis_rejects_bad_temperature(t):
    with pytest.raises(ProblemError):
        metropolis_accept(0.1, t, 0.5)


def test_schedule_validation():
    with pytest.raises(ProblemError):
        SaSchedule(1.0, 2.0)
    with pytest.raises(ProblemError):
        SaSchedule(1.0, 0.1, cooling_ratio=1.0)
    with pytest.raises(ProblemError):
        SaSchedule(1.0, 0.1, sweeps_per_stage=0)


def test_schedule_stages_end_at_or_below_t_end():
    temps = SaSchedule(10.0, 0.01, 0.9, 2).temperatures()
    assert temps[-1] <= 0.01 < temps[-2]
    assert np.allclose(temps[1:] / temps[:-1], 0.9)


def test_sa_ferromagnet():
    res = sa_solve(FERRO, seed=3)
    assert res.energy == -1.0 and res.config[0] == res.config[1]


def test_sa_single_stage_schedule():
    res = sa_solve(FERRO, SaSchedule(0.5, 0.5, 0.9, 3), seed=0)
    assert res.energy == ising_energy(FERRO, res.config)


def test_sa_deterministic_and_consistent():
    p = random_problem(30, 0.5, 1)
    a, b = sa_solve(p, seed=5), sa_solve(p, seed=5)
    assert np.array_equal(a.config, b.config) and a.trace == b.trace
    assert abs(a.energy - ising_energy(p, a.config)) <= 1e-9
    vals = [v for _, v in a.trace]
    assert all(v2 <= v1 for v1, v2 in zip(vals, vals[1:]))


def test_sa_oracle_rate_small_suite():
    hits = 0
    for seed in range(40):
        p = random_problem(12, 0.5, seed)
        hits += sa_solve(p, seed=seed).energy <= brute_force_solve(p).energy + 1e-9
    assert hits >= 36


def test_sb_free_particle():
    p = IsingProblem(np.zeros((3, 3)), np.zeros(3))
    params = SbParams(a0=1.0, dt=0.1, c0=1.0)
    s = SbState(np.array([0.1, -0.2, 0.0]), np.array([0.3, 0.1, -0.5]))
    out = sb_step(s, p, params, pump=1.0)
    assert np.array_equal(out.y, s.y)
    assert np.allclose(out.x, s.x + 0.1 * s.y)


def test_sb_wall():
    p = IsingProblem(np.zeros((1, 1)), np.zeros(1))
    out = sb_step(SbState(np.array([0.9]), np.array([3.0])), p, SbParams(dt=0.1, c0=1.0), pump=1.0)
    assert out.x[0] == 1.0 and out.y[0] == 0.0


def test_sb_step_guards():
    p = IsingProblem(np.zeros((1, 1)), np.zeros(1))
    with pytest.raises(ProblemError):
        sb_step(SbState(np.zeros(1), np.zeros(1)), p, SbParams(c0=1.0), pump=2.0)
    with pytest.raises(ProblemError):
        sb_step(SbState(np.array([np.nan]), np.zeros(1)), p, SbParams(c0=1.0), pump=0.5)


def test_sb_force_minimises():
    # with x_1 held positive, a ferromagnetic coupling must pull x_0 up
    params = SbParams(variant="ballistic", c0=1.0, dt=0.1)
    out = sb_step(SbState(np.array([0.0, 0.5]), np.zeros(2)), FERRO, params, pump=1.0)
    assert out.y[0] > 0


def test_sb_updates_from_snapshot():
    p = random_problem(6, 1.0, 2)
    params = SbParams(variant="ballistic", c0=0.3, dt=0.2)
    r = np.random.default_rng(0)
    s = SbState(r.uniform(-0.1, 0.1, 6), r.uniform(-0.1, 0.1, 6))
    out = sb_step(s, p, params, pump=0.4)
    y = s.y.copy()
    for i in range(6):
        y[i] += 0.2 * (-(1.0 - 0.4) * s.x[i] - 0.3 * (p.h[i] + p.dense_J()[i] @ s.x))
    assert np.allclose(out.y, y)


@pytest.mark.parametrize("variant", ["ballistic", "discrete"])
def test_sb_ferromagnet(variant):
    res = sb_solve(FERRO, SbParams(variant=variant), seed=1)
    assert res.energy == -1.0 and res.config[0] == res.config[1]


@pytest.mark.parametrize("field_mode", ["ancilla", "direct"])
def test_sb_single_spin(field_mode):
    p = IsingProblem(np.zeros((1, 1)), [1.0], offset=0.25)
    res = sb_solve(p, SbParams(field_mode=field_mode), seed=0)
    assert list(res.config) == [-1] and res.energy == -0.75


def test_sb_deterministic():
    p = random_problem(20, 0.5, 3)
    a, b = sb_solve(p, seed=4), sb_solve(p, seed=4)
    assert np.array_equal(a.config, b.config) and a.energy == b.energy and a.trace == b.trace


def test_sb_trace_monotone_and_consistent():
    p = random_problem(25, 0.5, 8)
    res = sb_solve(p, SbParams(variant="ballistic", trace_every=7), seed=0)
    vals = [v for _, v in res.trace]
    assert all(v2 <= v1 for v1, v2 in zip(vals, vals[1:]))
    assert abs(res.energy - ising_energy(p, res.config)) <= 1e-9
    assert res.trace[-1] == (1000, res.energy)


def test_sb_energy_conservation_frozen_pump():
    p = random_problem(10, 1.0, 6)
    params = SbParams(variant="ballistic", c0=0.002, dt=0.01)
    r = np.random.default_rng(2)
    s = SbState(r.uniform(-0.05, 0.05, 10), r.uniform(-0.05, 0.05, 10))
    h0 = sb_hamiltonian(s, p, params, pump=1.0)
    for _ in range(1000):
        s = sb_step(s, p, params, pump=1.0)
        assert np.all(np.abs(s.x) < 1.0)
    assert abs(sb_hamiltonian(s, p, params, pump=1.0) - h0) <= 0.01 * abs(h0)


def test_auto_c0_examples():
    p = IsingProblem.from_terms(2, [(0, 1, 1.0)])
    assert auto_c0(p, 1.0) == pytest.approx(0.5 / math.sqrt(2))
    assert auto_c0(IsingProblem(np.zeros((3, 3)), [1, 2, 3]), 2.0) == 2.0
    q = random_problem(10, 0.5, 0)
    assert auto_c0(q.scaled(10.0)) == pytest.approx(auto_c0(q) / 10)


def test_local_refine_fixed_point():
    assert list(local_refine(FERRO, [1, 1])) == [1, 1]


def test_local_refine_ferromagnet():
    out = local_refine(FERRO, [1, -1])
    assert out[0] == out[1]


def test_local_refine_never_worsens():
    r = np.random.default_rng(0)
    for seed in range(1000):
        p = random_problem(8, 0.6, seed)
        x = r.choice([-1, 1], 8)
        out = local_refine(p, x)
        assert ising_energy(p, out) <= ising_energy(p, x) + 1e-12
        for k in range(8):
            y = out.copy()
            y[k] = -y[k]
            assert ising_energy(p, y) >= ising_energy(p, out) - 1e-9


def random_qubo(n, seed):
    return ising_to_qubo(random_problem(n, 0.5, seed))


def test_flip_impacts_match_reevaluation():
    q = random_qubo(9, 1)
    s = np.random.default_rng(0).integers(0, 2, 9)
    d = flip_impacts(q, s)
    for k in range(9):
        t = s.copy()
        t[k] ^= 1
        assert d[k] == pytest.approx(qubo_energy(q, t) - qubo_energy(q, s), abs=1e-9)


@given(st.integers(2, 14), st.integers(0, 10_000), st.data())
def test_clamp_preserves_energy(n, seed, data):
    q = random_qubo(n, seed)
    r = np.random.default_rng(seed)
    s = r.integers(0, 2, n)
    k = data.draw(st.integers(1, n))
    free = np.sort(r.choice(n, k, replace=False))
    sub = clamp(q, free, s)
    assert abs(qubo_energy(sub, s[free]) - qubo_energy(q, s)) <= 1e-9


def test_subqubo_full_subset_is_single_inner_call():
    q = random_qubo(10, 3)
    res = subqubo_solve(q, SubQuboParams(subset_size=10, rounds=1), seed=0)
    assert res.energy == pytest.approx(brute_force_solve(q).energy, abs=1e-9)


def test_subqubo_monotone_rounds():
    q = random_qubo(20, 4)
    res = subqubo_solve(q, SubQuboParams(subset_size=5, rounds=15, inner_solver="sa"), seed=2)
    vals = [v for _, v in res.trace]
    assert all(v2 <= v1 for v1, v2 in zip(vals, vals[1:]))
    assert res.energy == pytest.approx(qubo_energy(q, res.config), abs=1e-9)


def test_subqubo_rejects_oversized_subset():
    with pytest.raises(ProblemError):
        subqubo_solve(random_qubo(4, 0), SubQuboParams(subset_size=5), seed=0)


def test_subqubo_inner_failure_propagates():
    def broken(sub, seed):
        raise RuntimeError("inner failed")

    with pytest.raises(RuntimeError):
        subqubo_solve(random_qubo(6, 0), SubQuboParams(subset_size=3, inner_solver=broken), seed=0)


def test_subqubo_near_optimal_suite():
    good = 0
    for seed in range(100):
        q = random_qubo(16, seed)
        opt = brute_force_solve(q).energy
        res = subqubo_solve(q, SubQuboParams(subset_size=8, rounds=20), seed=seed)
        good += res.energy - opt <= 0.02 * abs(opt)
    assert good >= 90


@pytest.mark.parametrize("sid", ["sa", "bsb", "dsb", "subqubo", "qaoa"])
def test_brute_force_dominance(sid):
    for seed in range(3):
        for p in (random_problem(8, 0.5, seed), random_qubo(8, seed)):
            res = run_solver(p, sid, seed=seed)
            assert res.energy >= brute_force_solve(p).energy - 1e-9
            assert abs(res.energy - energy(p, res.config)) <= 1e-9


def test_run_solver_rejects_unknown():
    with pytest.raises(ProblemError):
        run_solver(FERRO, "magic")
    with pytest.raises(ProblemError):
        run_solver(FERRO, "sa", params={"temperature": 1})


def test_run_solver_qubo_domain():
    q = QuboProblem(np.array([[1.0, -2.0], [-2.0, 1.0]]))
    res = run_solver(q, "dsb", seed=0)
    assert set(res.config.tolist()) <= {0, 1}
    assert res.energy == brute_force_solve(q).energy


def test_sgn_zero_is_positive():
    assert list(sgn(np.array([0.0, -0.0, -1e-9, 2.0]))) == [1, 1, -1, 1]
