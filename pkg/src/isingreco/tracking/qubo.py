"""Doublet (Denby-Peterson style) and triplet QUBO construction."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import gaussian_kde

from ..ising import ProblemError, QuboProblem
from .segments import hit_index, wrap_angle


@dataclass(frozen=True)
class DpParams:
    """Weights of the doublet Hamiltonian.

    ``prior`` is a constant or a callable mapping ``(n, 2)`` doublet features
    ``(dphi, dz/dr)`` to values in [0, 1]. Coordinates are divided by
    ``length_unit`` (mm per unit) before lengths and beam intercepts are formed;
    the default works in metres, which keeps the angle and beam-spot terms on the
    scale the weights were tuned for.
    """

    lambda_exp: float = 13.17
    rho: float = 5.00
    eta: float = 14.41
    zeta: float = 1.79
    alpha: float = 86.20
    beta: float = 20.91
    gamma: float = 9.79
    prior: float | Callable = 1.0
    length_unit: float = 1000.0

    def __post_init__(self):
        vals = [self.lambda_exp, self.rho, self.eta, self.zeta, self.alpha, self.beta, self.gamma, self.length_unit]
        if not all(np.isfinite(v) for v in vals):
            raise ProblemError("DpParams values must be finite")
        if not self.length_unit > 0:
            raise ProblemError("length_unit must be positive")
        if not callable(self.prior) and not np.isfinite(self.prior):
            raise ProblemError("constant prior must be finite")


@dataclass
class DpStats:
    pairs: int = 0
    skipped_pairs: int = 0
    bifurcations: int = 0


def doublet_features(doublets, hits) -> np.ndarray:
    """``(n, 2)`` array of ``(dphi, dz/dr)`` per doublet."""
    H = hit_index(hits)
    out = np.empty((len(doublets), 2))
    for k, d in enumerate(doublets):
        a, b = H[d.a], H[d.b]
        out[k, 0] = wrap_angle(b.phi - a.phi)
        out[k, 1] = (b.z - a.z) / (b.r - a.r)
    return out


class KdePrior:
    """Gaussian KDE over doublet features of true doublets, scaled so its peak is 1.

    The bandwidth follows Scott's rule. The peak is estimated as the largest
    density over the calibration points.
    """

    def __init__(self, features: np.ndarray):
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[0] < 3:
            raise ProblemError("KDE prior needs at least 3 calibration doublets")
        self.kde = gaussian_kde(features.T, bw_method="scott")
        self.peak = float(self.kde(features.T).max())

    def __call__(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(features)
        if features.shape[0] == 0:
            return np.zeros(0)
        return np.minimum(self.kde(features.T) / self.peak, 1.0)

    @classmethod
    def calibrate(cls, doublets, hits) -> "KdePrior":
        """Fit on the doublets of a truth-labelled event whose hits share a particle."""
        H = hit_index(hits)
        true = [d for d in doublets if H[d.a].truth_particle >= 0 and H[d.a].truth_particle == H[d.b].truth_particle]
        return cls(doublet_features(true, hits))


def _cos(u, v) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def dp_pair_terms(ha, hb, hc, params: DpParams):
    """Angle and beam-spot energies of the connected pair ``(a, b), (b, c)``; ``None`` if ``r_c == r_a``."""
    L = params.length_unit
    pa = np.array([ha.x, ha.y, ha.z]) / L
    pb = np.array([hb.x, hb.y, hb.z]) / L
    pc = np.array([hc.x, hc.y, hc.z]) / L
    ra, rc = np.hypot(pa[0], pa[1]), np.hypot(pc[0], pc[1])
    if rc == ra:
        return None
    u, v = pb - pa, pc - pb
    cos_theta = max(_cos(u, v), 0.0)
    cos_phi = max(_cos(u[:2], v[:2]), 0.0)
    length = np.linalg.norm(u) + np.linalg.norm(v)
    angle = -(cos_theta**params.lambda_exp + params.rho * cos_phi**params.lambda_exp) / length
    intercept = pc[2] - (pc[2] - pa[2]) / (rc - ra) * rc
    beam = params.eta * abs(intercept) ** params.zeta
    return float(angle), float(beam)


def dp_qubo(doublets, hits, params: DpParams = DpParams(), stats: DpStats | None = None) -> QuboProblem:
    """QUBO over doublets: connected-pair angle and beam terms, bifurcation penalty, prior bias.

    A pair term ``w`` adds ``w/2`` to both symmetric entries, so selecting both
    doublets costs ``w``. Each bifurcating pair (shared inner or shared outer hit)
    gets ``alpha`` in both entries, i.e. ``2 alpha`` when both are selected, because
    the penalty sums over ordered pairs.
    """
    stats = stats if stats is not None else DpStats()
    H = hit_index(hits)
    n = len(doublets)
    Q = np.zeros((n, n))
    by_inner, by_outer = defaultdict(list), defaultdict(list)
    for d in doublets:
        by_inner[d.a].append(d)
        by_outer[d.b].append(d)
    for d1 in doublets:
        for d2 in by_inner.get(d1.b, []):
            terms = dp_pair_terms(H[d1.a], H[d1.b], H[d2.b], params)
            if terms is None:
                stats.skipped_pairs += 1
                continue
            w = terms[0] + terms[1]
            Q[d1.index, d2.index] += w / 2
            Q[d2.index, d1.index] += w / 2
            stats.pairs += 1
    for group in list(by_inner.values()) + list(by_outer.values()):
        for i, d1 in enumerate(group):
            for d2 in group[i + 1 :]:
                Q[d1.index, d2.index] += params.alpha
                Q[d2.index, d1.index] += params.alpha
                stats.bifurcations += 1
    if callable(params.prior):
        prior = np.asarray(params.prior(doublet_features(doublets, hits)), dtype=float) if n else np.zeros(0)
    else:
        prior = np.full(n, float(params.prior))
    Q[np.diag_indices(n)] += -(params.beta * prior - params.gamma)
    return QuboProblem(Q, 0.0)


@dataclass(frozen=True)
class TripletQuboParams:
    """``sigma_kappa=None`` uses 10% of the median ``|curvature|`` of the given triplets."""

    sigma_kappa: float | None = None
    sigma_theta: float = 0.1
    w_d: float = 1e-3  # mm^-2
    w_z: float = 1e-3  # mm^-2
    conflict: float = 1.0

    def __post_init__(self):
        if self.sigma_kappa is not None and not self.sigma_kappa > 0:
            raise ProblemError("sigma_kappa must be positive")
        if not self.sigma_theta > 0:
            raise ProblemError("sigma_theta must be positive")
        if self.w_d < 0 or self.w_z < 0 or not self.conflict > 0:
            raise ProblemError("bias weights must be >= 0 and the conflict value > 0")


def default_sigma_kappa(triplets) -> float:
    if not triplets:
        return 1.0
    s = 0.1 * float(np.median([abs(t.curvature) for t in triplets]))
    return s if s > 0 else 1e-6


def triplet_relation(t1, t2) -> str:
    """``"extension"``, ``"conflict"`` or ``"none"`` for two triplets.

    An extension shares two hits as the tail of one and head of the other.
    Sharing a single hit as last of one and first of the other is a consistent
    chain and is not a conflict. Every other shared hit is a conflict.
    """
    h1, h2 = t1.hits, t2.hits
    shared = set(h1) & set(h2)
    if not shared:
        return "none"
    if h1[1:] == h2[:2] or h2[1:] == h1[:2]:
        return "extension"
    if len(shared) == 1 and (h1[2] == h2[0] or h2[2] == h1[0]):
        return "none"
    return "conflict"


def triplet_pair_coefficient(t1, t2, params: TripletQuboParams, sigma_kappa: float) -> float:
    """``b_ij``: ``-S_ij`` for extensions, ``+conflict`` for conflicts, else 0."""
    rel = triplet_relation(t1, t2)
    if rel == "none":
        return 0.0
    if rel == "conflict":
        return params.conflict
    dk = t1.curvature - t2.curvature
    dt = t1.polar_direction - t2.polar_direction
    return -float(np.exp(-(dk**2) / (2 * sigma_kappa**2)) * np.exp(-(dt**2) / (2 * params.sigma_theta**2)))


def triplet_bias(t, params: TripletQuboParams) -> float:
    return params.w_d * t.d0**2 + params.w_z * t.z0**2


def triplet_qubo(triplets, params: TripletQuboParams = TripletQuboParams()) -> QuboProblem:
    """``E = sum_i a_i T_i + sum_{i<j} b_ij T_i T_j``; each ``b_ij`` is split over both entries."""
    n = len(triplets)
    sigma_kappa = params.sigma_kappa if params.sigma_kappa is not None else default_sigma_kappa(triplets)
    Q = np.zeros((n, n))
    by_hit = defaultdict(list)
    for t in triplets:
        if len(set(t.hits)) != 3:
            raise ProblemError(f"triplet {t.index} repeats a hit")
        for h in t.hits:
            by_hit[h].append(t.index)
    seen = set()
    for idx in by_hit.values():
        for i in idx:
            for j in idx:
                if i < j and (i, j) not in seen:
                    seen.add((i, j))
                    b = triplet_pair_coefficient(triplets[i], triplets[j], params, sigma_kappa)
                    Q[i, j] += b / 2
                    Q[j, i] += b / 2
    for t in triplets:
        Q[t.index, t.index] = triplet_bias(t, params)
    return QuboProblem(Q, 0.0)
