"""Toy e+e- multijet events and constituents CSV interchange."""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from ..ising import ProblemError, make_rng

MASS_SLOP = 1e-6


@dataclass(frozen=True)
class Constituent:
    e: float
    px: float
    py: float
    pz: float

    def __post_init__(self):
        if not self.e > 0:
            raise ProblemError(f"constituent energy must be positive, got {self.e}")
        if self.e**2 < self.px**2 + self.py**2 + self.pz**2 - MASS_SLOP * max(1.0, self.e**2):
            raise ProblemError("constituent is space-like")

    @property
    def p(self) -> np.ndarray:
        return np.array([self.px, self.py, self.pz])


@dataclass
class JetEvent:
    constituents: list
    truth_jet: np.ndarray
    sqrt_s: float

    def __post_init__(self):
        self.truth_jet = np.asarray(self.truth_jet, dtype=int)
        if self.truth_jet.shape != (len(self.constituents),):
            raise ProblemError("one truth label per constituent is required")
        if np.any(self.truth_jet < 0):
            raise ProblemError("truth labels must be >= 0")

    @property
    def n(self) -> int:
        return len(self.constituents)

    @property
    def n_jet(self) -> int:
        return int(self.truth_jet.max()) + 1 if self.n else 0

    def momenta(self) -> np.ndarray:
        """``(N, 3)`` three-momenta."""
        return np.array([[c.px, c.py, c.pz] for c in self.constituents]).reshape(-1, 3)

    def energies(self) -> np.ndarray:
        return np.array([c.e for c in self.constituents])

    def four_momenta(self) -> np.ndarray:
        """``(N, 4)`` rows ``(E, px, py, pz)``."""
        return np.column_stack([self.energies(), self.momenta()]) if self.n else np.zeros((0, 4))


def random_unit(rng, size=None) -> np.ndarray:
    v = rng.normal(size=(size or 1, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v if size else v[0]


def smear_direction(axis: np.ndarray, spread: float, rng) -> np.ndarray:
    """Unit vector Gaussian-displaced from ``axis`` by ``spread`` (rad) per transverse direction."""
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    g = rng.normal(0.0, spread, 2)
    v = axis + g[0] * e1 + g[1] * e2
    return v / np.linalg.norm(v)


def boost_to_rest(P4: np.ndarray) -> np.ndarray:
    """Boost four-momenta ``(E, p)`` into the frame where their sum has zero momentum."""
    tot = P4.sum(axis=0)
    b = tot[1:] / tot[0]
    b2 = float(b @ b)
    if b2 == 0.0:
        return P4.copy()
    gamma = 1.0 / np.sqrt(1.0 - b2)
    bp = P4[:, 1:] @ b
    e = gamma * (P4[:, 0] - bp)
    p = P4[:, 1:] + ((gamma - 1.0) * bp / b2 - gamma * P4[:, 0])[:, None] * b[None, :]
    return np.column_stack([e, p])


def generate_jet_event(
    n_jet: int,
    sqrt_s: float = 91.2,
    spread: float = 0.05,
    n_constituents_per_jet: int = 5,
    seed: int = 0,
    dirichlet_alpha: float = 2.0,
    min_axis_angle: float = 0.6,
    energy_resolution: float = 0.0,
) -> JetEvent:
    """Massless constituents around ``n_jet`` parton axes drawn in back-to-back pairs.

    Every parton carries ``sqrt_s / n_jet``; its energy is split by a symmetric
    Dirichlet draw and each constituent direction is smeared around the axis.
    Axes of different pairs are redrawn until they are at least
    ``min_axis_angle`` apart (also from each other's partner). The constituents
    are then boosted to their rest frame and scaled so the total energy is
    ``sqrt_s``, which keeps them massless and balances momentum exactly up to
    rounding. ``energy_resolution > 0`` finally applies a relative Gaussian
    smear to each constituent's four-momentum, mimicking calorimeter response.
    """
    if n_jet not in (2, 4, 6):
        raise ProblemError(f"n_jet must be 2, 4 or 6, got {n_jet}")
    if spread < 0 or not sqrt_s > 0 or n_constituents_per_jet < 1:
        raise ProblemError("need spread >= 0, sqrt_s > 0 and at least one constituent per jet")
    rng = make_rng(seed)
    cos_min = np.cos(min_axis_angle)
    axes = []
    while len(axes) < n_jet:
        u = random_unit(rng)
        if all(abs(u @ a) < cos_min for a in axes):
            axes.extend([u, -u])
    e_parton = sqrt_s / n_jet
    rows, labels = [], []
    for k, axis in enumerate(axes):
        frac = rng.dirichlet(np.full(n_constituents_per_jet, dirichlet_alpha))
        for f in frac:
            d = smear_direction(axis, spread, rng) if spread > 0 else axis
            e = f * e_parton
            rows.append(np.r_[e, e * d])
            labels.append(k)
    P4 = np.array(rows)
    if spread > 0:
        P4 = boost_to_rest(P4)
        P4[:, 0] = np.linalg.norm(P4[:, 1:], axis=1)
        P4 *= sqrt_s / P4[:, 0].sum()
    if energy_resolution > 0:
        # floor keeps every smeared constituent physical
        P4 *= np.maximum(1.0 + energy_resolution * rng.normal(size=(len(P4), 1)), 0.05)
    cons = [Constituent(*map(float, r)) for r in P4]
    return JetEvent(cons, np.array(labels), float(sqrt_s))


CONSTITUENT_COLUMNS = ("e", "px", "py", "pz", "truth_jet")


def save_constituents_csv(event: JetEvent, path) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".cons-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CONSTITUENT_COLUMNS)
            for c, t in zip(event.constituents, event.truth_jet):
                w.writerow([repr(c.e), repr(c.px), repr(c.py), repr(c.pz), int(t)])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_constituents_csv(path, sqrt_s: float | None = None) -> JetEvent:
    """Read a constituents file; ``sqrt_s`` defaults to the summed energy."""
    cons, labels = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ProblemError(f"{path}: missing header line")
        missing = [c for c in CONSTITUENT_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ProblemError(f"{path}: missing columns {missing}")
        for row in reader:
            try:
                cons.append(Constituent(float(row["e"]), float(row["px"]), float(row["py"]), float(row["pz"])))
                labels.append(int(row["truth_jet"]))
            except (TypeError, ValueError) as exc:
                raise ProblemError(f"line {reader.line_num}: malformed constituent row ({exc})") from None
    if sqrt_s is None:
        sqrt_s = float(sum(c.e for c in cons))
    return JetEvent(cons, np.array(labels, dtype=int), sqrt_s)
