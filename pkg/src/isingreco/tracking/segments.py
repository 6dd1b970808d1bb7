"""Doublet and triplet building with simple geometric quality cuts."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ..ising import ProblemError


@dataclass(frozen=True)
class Doublet:
    a: int
    b: int
    index: int


@dataclass(frozen=True)
class DoubletCuts:
    """``max_dphi`` in rad; ``dz_dr_window`` bounds the r-z slope; ``max_z0`` bounds
    the r-z line intercept at ``r = 0`` (mm)."""

    max_dphi: float = 0.2
    dz_dr_window: tuple = (-1.6, 1.6)
    adjacent_layers_only: bool = True
    max_z0: float = 200.0


@dataclass(frozen=True)
class Triplet:
    a: int
    b: int
    c: int
    index: int
    curvature: float  # signed 1/mm
    polar_direction: float  # rad
    d0: float  # mm
    z0: float  # mm

    @property
    def hits(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)


@dataclass(frozen=True)
class TripletCuts:
    max_curvature: float = 1.5e-3
    max_dtheta: float = 0.05


def wrap_angle(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


def hit_index(hits) -> dict:
    return {h.id: h for h in hits}


def build_doublets(hits, cuts: DoubletCuts = DoubletCuts()) -> list[Doublet]:
    """All inner-outer hit pairs on increasing layers that pass the cuts."""
    by_layer = defaultdict(list)
    for h in hits:
        by_layer[h.layer].append(h)
    layers = sorted(by_layer)
    lo, hi = cuts.dz_dr_window
    out = []
    for li in layers:
        targets = [li + 1] if cuts.adjacent_layers_only else [m for m in layers if m > li]
        inner = by_layer[li]
        if not inner:
            continue
        ra = np.array([h.r for h in inner])
        pa = np.array([h.phi for h in inner])
        za = np.array([h.z for h in inner])
        for lo_layer in targets:
            outer = by_layer.get(lo_layer, [])
            if not outer:
                continue
            rb = np.array([h.r for h in outer])
            pb = np.array([h.phi for h in outer])
            zb = np.array([h.z for h in outer])
            dr = rb[None, :] - ra[:, None]
            dphi = np.abs(wrap_angle(pb[None, :] - pa[:, None]))
            with np.errstate(divide="ignore", invalid="ignore"):
                slope = (zb[None, :] - za[:, None]) / dr
                z0 = za[:, None] - slope * ra[:, None]
            ok = (dr > 0) & (dphi <= cuts.max_dphi) & (slope >= lo) & (slope <= hi) & (np.abs(z0) <= cuts.max_z0)
            for i, j in zip(*np.nonzero(ok)):
                out.append((inner[i].id, outer[j].id))
    out.sort()
    return [Doublet(a, b, k) for k, (a, b) in enumerate(out)]


def fit_circle(p1, p2, p3):
    """Circle through three transverse points: ``(center, radius)`` or ``(None, inf)`` if collinear."""
    (x1, y1), (x2, y2), (x3, y3) = p1, p2, p3
    d = 2.0 * (x1 * (y2 - y3) + x2 * (y3 - y1) + x3 * (y1 - y2))
    scale = max(abs(x1), abs(x2), abs(x3), abs(y1), abs(y2), abs(y3), 1.0)
    if abs(d) <= 1e-12 * scale**2:
        return None, np.inf
    s1, s2, s3 = x1 * x1 + y1 * y1, x2 * x2 + y2 * y2, x3 * x3 + y3 * y3
    ux = (s1 * (y2 - y3) + s2 * (y3 - y1) + s3 * (y1 - y2)) / d
    uy = (s1 * (x3 - x2) + s2 * (x1 - x3) + s3 * (x2 - x1)) / d
    center = np.array([ux, uy])
    return center, float(np.hypot(x1 - ux, y1 - uy))


def triplet_geometry(ha, hb, hc):
    """Signed curvature, polar direction, transverse and longitudinal impact parameters.

    ``z0`` and the polar direction come from a least-squares line ``z = z0 + s cot``
    in the transverse path length ``s`` along the fitted circle, measured from the
    point of closest approach to the beam line.
    """
    pts = [np.array([h.x, h.y]) for h in (ha, hb, hc)]
    center, R = fit_circle(*pts)
    cross = (pts[1][0] - pts[0][0]) * (pts[2][1] - pts[1][1]) - (pts[1][1] - pts[0][1]) * (pts[2][0] - pts[1][0])
    if center is None:
        curvature = 0.0
        direction = pts[2] - pts[0]
        direction = direction / np.linalg.norm(direction)
        normal = np.array([-direction[1], direction[0]])
        d0 = float(abs(pts[0] @ normal))
        pca = pts[0] - (pts[0] @ direction) * direction
        s = np.array([(p - pca) @ direction for p in pts])
        s = np.abs(s)
    else:
        curvature = float(np.sign(cross) / R) if cross != 0 else 0.0
        dist = float(np.linalg.norm(center))
        d0 = abs(dist - R)
        pca = center * (1.0 - R / dist) if dist > 0 else pts[0]
        base = np.arctan2(pca[1] - center[1], pca[0] - center[0])
        ang = np.array([np.arctan2(p[1] - center[1], p[0] - center[0]) for p in pts])
        s = R * np.abs(wrap_angle(ang - base))
    z = np.array([ha.z, hb.z, hc.z])
    A = np.column_stack([np.ones(3), s])
    (z0, cot), *_ = np.linalg.lstsq(A, z, rcond=None)
    polar = float(np.arctan2(1.0, cot))
    return curvature, polar, float(d0), float(z0)


def _polar(h1, h2) -> float:
    return float(np.arctan2(h2.r - h1.r, h2.z - h1.z))


def build_triplets(doublets, hits, cuts: TripletCuts = TripletCuts()) -> list[Triplet]:
    """Join doublets sharing a middle hit, fit them, and apply curvature / polar-angle cuts."""
    H = hit_index(hits)
    by_inner = defaultdict(list)
    for d in doublets:
        by_inner[d.a].append(d)
    out = []
    for d1 in doublets:
        for d2 in by_inner.get(d1.b, []):
            ha, hb, hc = H[d1.a], H[d1.b], H[d2.b]
            if not ha.layer < hb.layer < hc.layer:
                continue
            if abs(_polar(ha, hb) - _polar(hb, hc)) > cuts.max_dtheta:
                continue
            kappa, polar, d0, z0 = triplet_geometry(ha, hb, hc)
            if abs(kappa) > cuts.max_curvature:
                continue
            out.append((ha.id, hb.id, hc.id, kappa, polar, d0, z0))
    out.sort()
    return [Triplet(a, b, c, k, kappa, polar, d0, z0) for k, (a, b, c, kappa, polar, d0, z0) in enumerate(out)]


def segment_pairs(segment) -> list[tuple[int, int]]:
    """Consecutive hit pairs covered by a doublet or triplet."""
    if isinstance(segment, Doublet):
        return [(segment.a, segment.b)]
    if isinstance(segment, Triplet):
        return [(segment.a, segment.b), (segment.b, segment.c)]
    raise ProblemError(f"not a segment: {segment!r}")
