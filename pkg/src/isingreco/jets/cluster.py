"""Assignments, decoding, efficiency and the exclusive ee-kt (Durham) baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ising import ProblemError
from ..labels import best_permutation_accuracy

UNASSIGNED = -1


@dataclass
class JetAssignment:
    jet_of: np.ndarray
    n_jet: int
    violations: int = 0
    repairs: int = 0

    def __post_init__(self):
        self.jet_of = np.asarray(self.jet_of, dtype=int)
        if self.n_jet < 1:
            raise ProblemError("n_jet must be >= 1")
        bad = (self.jet_of != UNASSIGNED) & ((self.jet_of < 0) | (self.jet_of >= self.n_jet))
        if np.any(bad):
            raise ProblemError(f"jet indices must lie in [0, {self.n_jet})")

    @property
    def n(self) -> int:
        return int(self.jet_of.size)


@dataclass(frozen=True)
class Jet:
    e: float
    px: float
    py: float
    pz: float

    @property
    def p(self) -> np.ndarray:
        return np.array([self.px, self.py, self.pz])


def build_jets(event, assignment: JetAssignment) -> list[Jet]:
    """Four-momentum sums per jet label (empty jets are zero vectors)."""
    P4 = event.four_momenta()
    out = []
    for k in range(assignment.n_jet):
        s = P4[assignment.jet_of == k].sum(axis=0) if P4.size else np.zeros(4)
        out.append(Jet(*map(float, s)))
    return out


def invariant_mass(jets) -> float:
    """``sqrt(max(0, (sum E)^2 - |sum p|^2))``."""
    jets = list(jets)
    if not jets:
        raise ProblemError("invariant mass needs at least one jet")
    e = sum(j.e for j in jets)
    p = np.sum([j.p for j in jets], axis=0)
    return float(np.sqrt(max(0.0, e * e - float(p @ p))))


def mass_histogram(masses, bins: int = 40, range_: tuple | None = None):
    """``(bin_edges, counts)`` for external plotting.

    Without ``range_`` the data range is used, widened to at least 1 GeV
    around its centre so a sharp peak (no smearing) still gets finite bins.
    """
    m = np.asarray(masses, dtype=float)
    if range_ is None and m.size:
        lo, hi = float(m.min()), float(m.max())
        if hi - lo < 1.0:
            mid = 0.5 * (lo + hi)
            lo, hi = mid - 0.5, mid + 0.5
        range_ = (lo, hi)
    counts, edges = np.histogram(m, bins=bins, range=range_)
    return edges, counts


def jet_efficiency(assignment: JetAssignment, reference: JetAssignment) -> float:
    """Fraction of constituents clustered as in ``reference``, best over jet relabelings."""
    if assignment.n != reference.n or assignment.n_jet != reference.n_jet:
        raise ProblemError("assignments differ in size or jet count")
    return best_permutation_accuracy(assignment.jet_of, reference.jet_of, assignment.n_jet)


def decode_jets(solution, n: int, n_jet: int, momenta=None) -> JetAssignment:
    """Read ``s_i^(n)`` at index ``i * n_jet + n``.

    Several set bits keep the lowest jet index (one violation each). No set
    bit assigns the constituent to the jet whose decoded momentum sum is
    closest in angle (one repair each); with no ``momenta`` or no decoded jets
    it falls back to jet 0.
    """
    s = np.asarray(solution)
    if s.size != n * n_jet:
        raise ProblemError(f"solution length {s.size} != {n} * {n_jet}")
    s = s.reshape(n, n_jet)
    counts = s.sum(axis=1)
    jet_of = np.where(counts > 0, np.argmax(s > 0, axis=1), UNASSIGNED)
    violations = int(np.sum(counts > 1))
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        if momenta is not None and np.any(jet_of != UNASSIGNED):
            P = np.asarray(momenta, dtype=float).reshape(n, 3)
            axes = np.array([P[jet_of == k].sum(axis=0) for k in range(n_jet)])
            norms = np.linalg.norm(axes, axis=1)
            for i in missing:
                pn = np.linalg.norm(P[i])
                cos = np.where(norms > 0, axes @ P[i] / np.where(norms > 0, norms, 1.0) / (pn if pn > 0 else 1.0), -np.inf)
                jet_of[i] = int(np.argmax(cos))
        else:
            jet_of[missing] = 0
    return JetAssignment(jet_of, n_jet, violations, int(missing.size))


def dijet_assignment(selection) -> JetAssignment:
    """Dijet reading of a binary selection: selected constituents form jet 0, the rest jet 1."""
    s = np.asarray(selection).astype(int)
    return JetAssignment(np.where(s == 1, 0, 1), 2)


def _durham(P4: np.ndarray) -> np.ndarray:
    E = P4[:, 0]
    p = P4[:, 1:]
    norms = np.linalg.norm(p, axis=1)
    U = p / np.where(norms > 0, norms, 1.0)[:, None]
    cos = np.clip(U @ U.T, -1.0, 1.0)
    return 2.0 * np.minimum(E[:, None] ** 2, E[None, :] ** 2) * (1.0 - cos)


def eekt_cluster(event, k_target: int) -> JetAssignment:
    """Exclusive Durham clustering with E-scheme recombination down to ``k_target`` jets.

    The pair with the smallest ``2 min(E_i^2, E_j^2)(1 - cos theta_ij)`` merges
    first; exact ties go to the lexicographically smallest index pair. Final jets
    are labelled by their order of the smallest constituent index they contain.
    """
    if k_target < 1:
        raise ProblemError("k_target must be >= 1")
    P4 = event.four_momenta()
    n = len(P4)
    if k_target > n:
        raise ProblemError(f"k_target={k_target} exceeds the {n} constituents")
    clusters = [[i] for i in range(n)]
    mom = P4.copy()
    while len(clusters) > k_target:
        D = _durham(mom)
        D[np.tril_indices(len(clusters))] = np.inf
        i, j = np.unravel_index(int(np.argmin(D)), D.shape)
        clusters[i].extend(clusters[j])
        mom[i] = mom[i] + mom[j]
        del clusters[j]
        mom = np.delete(mom, j, axis=0)
    jet_of = np.empty(n, dtype=int)
    for label, members in enumerate(sorted(clusters, key=min)):
        jet_of[members] = label
    return JetAssignment(jet_of, k_target)


def _rapidity_phi_pt(p4):
    e, px, py, pz = p4
    pt = float(np.hypot(px, py))
    if e <= abs(pz):
        raise ProblemError("rapidity undefined for E <= |pz|")
    y = 0.5 * np.log((e + pz) / (e - pz))
    return float(y), float(np.arctan2(py, px)), pt


def kt_distance(ci, cj, p_index: int, R: float) -> float:
    """``min(pT_i^2p, pT_j^2p) ((y_i - y_j)^2 + dphi^2) / R^2`` with ``dphi`` wrapped to [-pi, pi]."""
    if p_index not in (-1, 0, 1):
        raise ProblemError("p_index must be -1, 0 or 1")
    if not R > 0:
        raise ProblemError("R must be positive")
    v = [np.array([c.e, c.px, c.py, c.pz]) if hasattr(c, "px") else np.asarray(c, dtype=float) for c in (ci, cj)]
    yi, phii, pti = _rapidity_phi_pt(v[0])
    yj, phij, ptj = _rapidity_phi_pt(v[1])
    if p_index == -1 and (pti == 0 or ptj == 0):
        raise ProblemError("zero transverse momentum with p = -1")
    dphi = (phii - phij + np.pi) % (2 * np.pi) - np.pi
    w = min(pti ** (2 * p_index), ptj ** (2 * p_index))
    return float(w * ((yi - yj) ** 2 + dphi**2) / R**2)
