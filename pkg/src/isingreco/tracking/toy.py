"""Toy cylindrical detector and helix event generator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ising import ProblemError, make_rng

NOISE = -1


@dataclass(frozen=True)
class DetectorModel:
    """Barrel layers in mm; ``hit_sigma`` smears each Cartesian coordinate."""

    layer_radii: tuple = (32.0, 72.0, 116.0, 172.0, 260.0, 360.0, 500.0, 660.0, 820.0, 1020.0)
    z_half_length: float = 1500.0
    hit_sigma: float = 0.02
    b_field: float = 2.0

    def __post_init__(self):
        radii = np.asarray(self.layer_radii, dtype=float)
        if radii.size < 3:
            raise ProblemError("a detector needs at least three layers")
        if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
            raise ProblemError("layer radii must be positive and strictly increasing")
        object.__setattr__(self, "layer_radii", tuple(float(r) for r in radii))

    @property
    def n_layers(self) -> int:
        return len(self.layer_radii)


@dataclass(frozen=True)
class ToyParticle:
    pid: int
    charge: int
    pt: float
    phi0: float
    cot_theta: float
    z0: float

    def __post_init__(self):
        if not self.pt > 0:
            raise ProblemError("pt must be positive")

    def radius_mm(self, b_field: float) -> float:
        """Transverse radius of curvature, ``pt / (0.3 B)`` metres, in mm."""
        return 1000.0 * self.pt / (0.3 * b_field)


@dataclass(frozen=True)
class Hit:
    id: int
    x: float
    y: float
    z: float
    layer: int
    truth_particle: int = NOISE

    @property
    def r(self) -> float:
        return float(np.hypot(self.x, self.y))

    @property
    def phi(self) -> float:
        return float(np.arctan2(self.y, self.x))


def helix_center(particle: ToyParticle, b_field: float) -> tuple[np.ndarray, float]:
    """Centre and radius (mm) of the transverse circle through the origin."""
    R = particle.radius_mm(b_field)
    q = particle.charge
    return np.array([-q * R * np.sin(particle.phi0), q * R * np.cos(particle.phi0)]), R


def helix_crossing(particle: ToyParticle, radius: float, b_field: float):
    """Ideal ``(x, y, z)`` where the helix first crosses a cylinder, or ``None``."""
    c, R = helix_center(particle, b_field)
    if radius > 2.0 * R:
        return None
    alpha = 2.0 * np.arcsin(radius / (2.0 * R))
    theta0 = particle.phi0 - particle.charge * np.pi / 2
    ang = theta0 + particle.charge * alpha
    x, y = c + R * np.array([np.cos(ang), np.sin(ang)])
    z = particle.z0 + particle.cot_theta * R * alpha
    return float(x), float(y), float(z)


def draw_particles(n_particles: int, seed: int) -> list[ToyParticle]:
    rng = make_rng(seed)
    inv_pt = rng.uniform(1 / 10.0, 1 / 0.5, n_particles)
    phi0 = rng.uniform(-np.pi, np.pi, n_particles)
    cot = rng.uniform(-1.0, 1.0, n_particles)
    z0 = rng.normal(0.0, 1.0, n_particles)
    charge = rng.choice(np.array([-1, 1]), n_particles)
    return [
        ToyParticle(i, int(charge[i]), float(1 / inv_pt[i]), float(phi0[i]), float(cot[i]), float(z0[i]))
        for i in range(n_particles)
    ]


def generate_toy_event(n_particles: int, det: DetectorModel = DetectorModel(), seed: int = 0):
    """Particles from the beam line and one smeared hit per crossed layer.

    ``1/pt`` is uniform over [1/10, 1/0.5] GeV^-1, ``phi0`` uniform,
    ``cot(theta)`` uniform in [-1, 1], ``z0 ~ N(0, 1 mm)``, charge +-1.
    Hit ids are assigned after sorting by (layer, phi) so they carry no truth order.
    """
    if n_particles < 1:
        raise ProblemError("n_particles must be >= 1")
    particles = draw_particles(n_particles, seed)
    rng = make_rng(seed + 0x5EED)
    raw = []
    for part in particles:
        for layer, radius in enumerate(det.layer_radii):
            pos = helix_crossing(part, radius, det.b_field)
            if pos is None or abs(pos[2]) > det.z_half_length:
                break
            x, y, z = np.asarray(pos) + rng.normal(0.0, det.hit_sigma, 3)
            raw.append((layer, float(np.arctan2(y, x)), float(x), float(y), float(z), part.pid))
    raw.sort()
    hits = [Hit(i, x, y, z, layer, pid) for i, (layer, _, x, y, z, pid) in enumerate(raw)]
    return particles, hits


def truth_tracks(hits) -> dict[int, list[int]]:
    """Hit ids per particle ordered by layer."""
    tracks: dict[int, list] = {}
    for h in sorted(hits, key=lambda h: (h.layer, h.id)):
        if h.truth_particle != NOISE:
            tracks.setdefault(h.truth_particle, []).append(h.id)
    return tracks


def truth_doublets(hits) -> set[tuple[int, int]]:
    """Consecutive hit pairs along every truth particle."""
    pairs = set()
    for ids in truth_tracks(hits).values():
        pairs.update(zip(ids[:-1], ids[1:]))
    return pairs
