import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from conftest import all_binaries
from isingreco.ising import ProblemError, brute_force_solve, qubo_energy
from isingreco.jets import (
    Constituent,
    Jet,
    JetAssignment,
    JetEvent,
    angle_qubo,
    build_jets,
    decode_jets,
    dijet_assignment,
    durham_matrix,
    eekt_cluster,
    generate_jet_event,
    invariant_mass,
    jet_efficiency,
    kt_distance,
    load_constituents_csv,
    mass_histogram,
    multijet_qubo,
    thrust_axis_scan,
    thrust_from_selection,
    thrust_qubo,
    tight_multijet_lambda,
)
from isingreco.jets.qubo import auto_multijet_lambda


def event_from(P, E=None, labels=None):
    P = np.asarray(P, dtype=float)
    E = np.linalg.norm(P, axis=1) if E is None else np.asarray(E, dtype=float)
    cons = [Constituent(float(e), *map(float, p)) for e, p in zip(E, P)]
    labels = np.zeros(len(P), int) if labels is None else labels
    return JetEvent(cons, labels, float(E.sum()))


STAR = [[1.0, 0.0, 0.0], [-0.5, math.sqrt(3) / 2, 0.0], [-0.5, -math.sqrt(3) / 2, 0.0]]


# --- generator -------------------------------------------------------------


@pytest.mark.parametrize("n_jet", [2, 4, 6])
def test_generator_balance(n_jet):
    for seed in range(10):
        ev = generate_jet_event(n_jet, sqrt_s=91.2, seed=seed)
        assert np.linalg.norm(ev.momenta().sum(axis=0)) < 1e-6 * 91.2
        assert ev.energies().sum() == pytest.approx(91.2)
        assert ev.n == 5 * n_jet and ev.n_jet == n_jet


def test_generator_zero_spread_parallel():
    ev = generate_jet_event(4, spread=0.0, seed=3)
    U = ev.momenta() / np.linalg.norm(ev.momenta(), axis=1)[:, None]
    for k in range(4):
        members = U[ev.truth_jet == k]
        assert np.allclose(members, members[0], atol=1e-12)


def test_generator_deterministic_and_massless():
    a, b = generate_jet_event(2, seed=8), generate_jet_event(2, seed=8)
    assert a.constituents == b.constituents
    m2 = a.energies() ** 2 - np.sum(a.momenta() ** 2, axis=1)
    assert np.all(np.abs(m2) <= 1e-9 * a.energies() ** 2)


def test_generator_guards():
    with pytest.raises(ProblemError):
        generate_jet_event(3)
    with pytest.raises(ProblemError):
        generate_jet_event(2, spread=-0.1)


def test_constituent_guards():
    with pytest.raises(ProblemError):
        Constituent(0.0, 0.0, 0.0, 0.0)
    with pytest.raises(ProblemError):
        Constituent(1.0, 2.0, 0.0, 0.0)
    Constituent(1.0, 1.0 + 1e-9, 0.0, 0.0)


# --- thrust ----------------------------------------------------------------


def test_thrust_back_to_back():
    T, axis = thrust_axis_scan(event_from([[1, 0, 0], [-1, 0, 0]]))
    assert T == pytest.approx(1.0)
    assert abs(axis[0]) == pytest.approx(1.0)


def test_thrust_three_fold_star():
    assert thrust_axis_scan(event_from(STAR))[0] == pytest.approx(2 / 3)


@given(st.integers(3, 9), st.integers(0, 10_000))
def test_thrust_lower_bound(n, seed):
    P = np.random.default_rng(seed).normal(size=(n, 3))
    T, _ = thrust_axis_scan(P)
    assert 0.5 - 1e-9 <= T <= 1 + 1e-12


def test_thrust_scan_guards():
    with pytest.raises(ProblemError):
        thrust_axis_scan(np.ones((17, 3)))
    with pytest.raises(ProblemError):
        thrust_axis_scan(np.ones((1, 3)))


def test_thrust_qubo_back_to_back():
    ev = event_from([[1, 0, 0], [-1, 0, 0]])
    res = brute_force_solve(thrust_qubo(ev))
    assert res.config.sum() == 1
    assert thrust_from_selection(ev, res.config) == pytest.approx(1.0)


def test_thrust_qubo_zero_momenta():
    assert np.all(thrust_qubo(np.zeros((3, 3))).dense_Q() == 0)


def test_thrust_qubo_energy_identity():
    P = np.random.default_rng(0).normal(size=(6, 3))
    q = thrust_qubo(P)
    for s in all_binaries(6):
        assert qubo_energy(q, s) == pytest.approx(-4 * np.sum((s @ P) ** 2), abs=1e-9)


def test_thrust_equivalence_small_events():
    for seed in range(10):
        ev = generate_jet_event(2, seed=seed, n_constituents_per_jet=4)
        res = brute_force_solve(thrust_qubo(ev))
        assert thrust_from_selection(ev, res.config) == pytest.approx(thrust_axis_scan(ev)[0], abs=1e-6)
        P = ev.momenta()
        assert res.energy <= -4 * np.max(np.sum(P**2, axis=1)) + 1e-9


# --- angle / Durham / multijet ---------------------------------------------


def test_angle_qubo_examples():
    Q = angle_qubo(event_from([[1, 0, 0], [2, 0, 0], [0, 1, 0], [-1, 0, 0]])).dense_Q()
    assert Q[0, 1] == pytest.approx(-0.5)
    assert Q[0, 2] == pytest.approx(0.0)
    assert Q[0, 3] == pytest.approx(0.5)
    assert np.all(np.diag(Q) == 0)


def test_angle_qubo_zero_momentum():
    with pytest.raises(ProblemError):
        angle_qubo(np.array([[1.0, 0, 0], [0, 0, 0]]))


def test_durham_examples():
    D = durham_matrix(event_from([[1, 0, 0], [0, 1, 0]]))
    assert D[0, 1] == pytest.approx(2.0)
    assert durham_matrix(event_from([[1, 0, 0], [3, 0, 0]]))[0, 1] == pytest.approx(0.0)
    assert durham_matrix(event_from([[2, 0, 0], [-1, 0, 0]]))[0, 1] == pytest.approx(4.0)
    assert np.allclose(D, D.T) and np.all(np.diag(D) == 0)


def test_multijet_single_constituent():
    q = multijet_qubo(np.zeros((1, 1)), 2, lambda_pen=1.0)
    res = brute_force_solve(q)
    assert res.config.sum() == 1 and res.energy == 0.0


@pytest.mark.parametrize("lam", ["auto", "tight", 2.5])
def test_multijet_offset_and_expansion(lam):
    ev = generate_jet_event(2, n_constituents_per_jet=2, seed=1)
    D = durham_matrix(ev)
    q = multijet_qubo(D, 3, lam)
    lam_v = q.offset / ev.n
    assert qubo_energy(q, np.zeros(3 * ev.n, int)) == pytest.approx(ev.n * lam_v)
    r = np.random.default_rng(0)
    for _ in range(30):
        s = r.integers(0, 2, 3 * ev.n)
        S = s.reshape(ev.n, 3)
        e = sum(S[:, k] @ D @ S[:, k] for k in range(3)) + lam_v * np.sum((1 - S.sum(axis=1)) ** 2)
        assert qubo_energy(q, s) == pytest.approx(e, abs=1e-9)


def test_auto_lambda_fallback():
    Q = -np.ones((3, 3))
    assert auto_multijet_lambda(Q) == pytest.approx(1 + 3 * 1.0)
    assert auto_multijet_lambda(np.array([[0.0, 2.0], [2.0, 0.0]])) == pytest.approx(1.1 * 2 * 2)


def test_tight_lambda_not_above_auto():
    for seed in range(10):
        D = durham_matrix(generate_jet_event(4, seed=seed))
        assert tight_multijet_lambda(D, 4) <= auto_multijet_lambda(D)


def test_multijet_guards():
    with pytest.raises(ProblemError):
        multijet_qubo(np.array([[0.0, 1.0], [2.0, 0.0]]), 2)
    with pytest.raises(ProblemError):
        multijet_qubo(np.zeros((2, 2)), 1)
    with pytest.raises(ProblemError):
        tight_multijet_lambda(-np.ones((2, 2)), 2)


@pytest.mark.parametrize("lam", ["auto", "tight"])
def test_multijet_one_hot_optima(lam):
    for seed in range(5):
        ev = generate_jet_event(2, n_constituents_per_jet=3, seed=seed)
        res = brute_force_solve(multijet_qubo(durham_matrix(ev), 2, lam))
        assert np.all(res.config.reshape(ev.n, 2).sum(axis=1) == 1)


# --- ee-kt and kt distance -------------------------------------------------


def test_eekt_collinear_merge_first():
    ev = event_from([[1, 0, 0], [2, 0, 0], [0, 1, 0]])
    a = eekt_cluster(ev, 2)
    assert a.jet_of.tolist() == [0, 0, 1]
    assert eekt_cluster(ev, 1).jet_of.tolist() == [0, 0, 0]


def test_eekt_identity_when_k_equals_n():
    ev = generate_jet_event(2, n_constituents_per_jet=3, seed=0)
    assert eekt_cluster(ev, ev.n).jet_of.tolist() == list(range(ev.n))


def test_eekt_clean_dijets_match_truth():
    for seed in range(20):
        ev = generate_jet_event(2, spread=0.05, seed=seed)
        a = eekt_cluster(ev, 2)
        assert jet_efficiency(a, JetAssignment(ev.truth_jet, 2)) == 1.0


def test_eekt_guards():
    ev = event_from(STAR)
    with pytest.raises(ProblemError):
        eekt_cluster(ev, 0)
    with pytest.raises(ProblemError):
        eekt_cluster(ev, 4)


def test_kt_identical_is_zero():
    c = Constituent(5.0, 1.0, 2.0, 3.0)
    assert kt_distance(c, c, 1, 0.4) == 0.0


def test_kt_cambridge_aachen():
    a = Constituent(math.cosh(0.3) * 2, 2.0, 0.0, math.sinh(0.3) * 2)
    b = Constituent(math.cosh(-0.2) * 7, 0.0, 7.0, math.sinh(-0.2) * 7)
    expected = ((0.5) ** 2 + (math.pi / 2) ** 2) / 0.8**2
    assert kt_distance(a, b, 0, 0.8) == pytest.approx(expected)


def test_kt_example():
    a = Constituent(math.cosh(1.0) * 2, 2.0, 0.0, math.sinh(1.0) * 2)
    b = Constituent(3.0, 3.0, 0.0, 0.0)
    assert kt_distance(a, b, 1, 1.0) == pytest.approx(4.0)


def test_kt_wraps_phi():
    a = Constituent(1.0, math.cos(3.1), math.sin(3.1), 0.0)
    b = Constituent(1.0, math.cos(-3.1), math.sin(-3.1), 0.0)
    assert kt_distance(a, b, 0, 1.0) == pytest.approx((2 * math.pi - 6.2) ** 2)


def test_kt_zero_pt_inverse_kt():
    a = Constituent(2.0, 0.0, 0.0, 1.0)
    b = Constituent(1.0, 1.0, 0.0, 0.0)
    with pytest.raises(ProblemError):
        kt_distance(a, b, -1, 1.0)


# --- decoding, efficiency, mass --------------------------------------------


def test_decode_clean():
    a = decode_jets([1, 0, 0, 1, 1, 0], 3, 2)
    assert a.jet_of.tolist() == [0, 1, 0] and a.violations == 0 and a.repairs == 0


def test_decode_double_bit():
    a = decode_jets([1, 1, 0, 1], 2, 2)
    assert a.jet_of.tolist() == [0, 1] and a.violations == 1


def test_decode_all_zero():
    a = decode_jets(np.zeros(8, int), 4, 2)
    assert a.repairs == 4 and np.all(a.jet_of >= 0)


def test_decode_repair_nearest_axis():
    P = [[1, 0, 0], [-1, 0, 0], [-1, 0.1, 0]]
    a = decode_jets([1, 0, 0, 1, 0, 0], 3, 2, momenta=P)
    assert a.jet_of.tolist() == [0, 1, 1] and a.repairs == 1


def test_decode_length_mismatch():
    with pytest.raises(ProblemError):
        decode_jets([1, 0, 1], 2, 2)


def test_efficiency_examples():
    ref = JetAssignment([0] * 5 + [1] * 5, 2)
    assert jet_efficiency(ref, ref) == 1.0
    assert jet_efficiency(JetAssignment([1] * 5 + [0] * 5, 2), ref) == 1.0
    assert jet_efficiency(JetAssignment([0] * 4 + [1] * 6, 2), ref) == pytest.approx(0.9)
    with pytest.raises(ProblemError):
        jet_efficiency(JetAssignment([0, 1], 2), ref)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=30), st.data())
def test_efficiency_permutation_invariant(labels, data):
    ref_labels = data.draw(st.lists(st.integers(0, 3), min_size=len(labels), max_size=len(labels)))
    perm = np.array(data.draw(st.permutations(range(4))))
    a, ref = JetAssignment(labels, 4), JetAssignment(ref_labels, 4)
    e = jet_efficiency(a, ref)
    assert 0.0 <= e <= 1.0
    assert jet_efficiency(JetAssignment(perm[labels], 4), ref) == pytest.approx(e)
    assert jet_efficiency(a, JetAssignment(perm[ref_labels], 4)) == pytest.approx(e)


def test_dijet_assignment():
    assert dijet_assignment([1, 0, 1]).jet_of.tolist() == [0, 1, 0]


def test_mass_examples():
    assert invariant_mass([Jet(1.0, 1.0, 0.0, 0.0)]) == 0.0
    assert invariant_mass([Jet(1.0, 1.0, 0, 0), Jet(1.0, -1.0, 0, 0)]) == pytest.approx(2.0)
    with pytest.raises(ProblemError):
        invariant_mass([])


def test_mass_rotation_invariant():
    ev = generate_jet_event(4, seed=2)
    jets = build_jets(ev, JetAssignment(ev.truth_jet, 4))
    R = Rotation.random(random_state=3).as_matrix()
    rotated = [Jet(j.e, *(R @ j.p)) for j in jets]
    for pair in ([0, 1], [1, 2], [0, 1, 2, 3]):
        a = invariant_mass([jets[k] for k in pair])
        b = invariant_mass([rotated[k] for k in pair])
        assert a == pytest.approx(b, abs=1e-9)


def test_jets_are_member_sums():
    ev = generate_jet_event(2, seed=4)
    a = JetAssignment(ev.truth_jet, 2)
    jets = build_jets(ev, a)
    P4 = ev.four_momenta()
    for k, j in enumerate(jets):
        assert np.array_equal(np.array([j.e, j.px, j.py, j.pz]), P4[a.jet_of == k].sum(axis=0))


def test_mass_histogram_shape():
    edges, counts = mass_histogram([90.0, 91.0, 91.5, 92.0], bins=4, range_=(88.0, 96.0))
    assert len(edges) == 5 and counts.sum() == 4


def test_constituents_csv_roundtrip(tmp_path):
    from isingreco.jets import save_constituents_csv

    ev = generate_jet_event(4, seed=5)
    path = tmp_path / "c.csv"
    save_constituents_csv(ev, path)
    back = load_constituents_csv(path, sqrt_s=ev.sqrt_s)
    assert back.constituents == ev.constituents and np.array_equal(back.truth_jet, ev.truth_jet)


def test_constituents_csv_errors(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("e,px,py,pz\n1,1,0,0\n")
    with pytest.raises(ProblemError, match="missing columns"):
        load_constituents_csv(path)
    path.write_text("e,px,py,pz,truth_jet\n1,1,0,0,0\n1,x,0,0,1\n")
    with pytest.raises(ProblemError, match="line 3"):
        load_constituents_csv(path)


def test_mass_histogram_sharp_peak_gets_finite_bins():
    masses = 91.2 + np.array([0.0, 1e-14, -1e-14, 2e-14])
    edges, counts = mass_histogram(masses, bins=40)
    assert counts.sum() == 4
    assert edges[-1] - edges[0] == pytest.approx(1.0)
