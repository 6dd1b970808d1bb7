"""Turning segment selections into tracks, and doublet-level metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..ising import ProblemError
from .segments import segment_pairs


@dataclass
class TrackSet:
    tracks: list = field(default_factory=list)

    def __len__(self):
        return len(self.tracks)

    def pairs(self) -> set[tuple[int, int]]:
        out = set()
        for t in self.tracks:
            out.update(zip(t[:-1], t[1:]))
        return out

    def check(self, hits) -> None:
        """Raise if a track's layers do not strictly increase or a hit is reused."""
        layer = {h.id: h.layer for h in hits}
        used = set()
        for t in self.tracks:
            ls = [layer[i] for i in t]
            if any(b <= a for a, b in zip(ls, ls[1:])):
                raise ProblemError(f"track {t} has non-increasing layers")
            if used & set(t):
                raise ProblemError(f"track {t} reuses hits")
            used.update(t)


def selected_pairs(solution, segments) -> set[tuple[int, int]]:
    """Union of the consecutive hit pairs of every selected segment."""
    s = np.asarray(solution)
    if s.shape != (len(segments),):
        raise ProblemError(f"solution has length {s.size}, expected {len(segments)}")
    out = set()
    for keep, seg in zip(s, segments):
        if keep:
            out.update(segment_pairs(seg))
    return out


def decode_tracks(solution, segments) -> TrackSet:
    """Chain selected segments into disjoint tracks.

    Repeatedly extracts the longest path (most hits) of the remaining pair
    graph, preferring the smallest first hit id and then the smallest next hit
    id, and removes its hits. Paths follow inner-to-outer edges, so the graph is
    acyclic for segments built on increasing layers.
    """
    edges = selected_pairs(solution, segments)
    succ: dict[int, set] = {}
    for a, b in edges:
        succ.setdefault(a, set()).add(b)
    removed: set = set()
    tracks = []
    while True:
        @lru_cache(maxsize=None)
        def longest(u):
            best = (1, None)
            for v in sorted(succ.get(u, ())):
                if v in removed:
                    continue
                cand = longest(v)[0] + 1
                if cand > best[0]:
                    best = (cand, v)
            return best

        starts = sorted(u for u in succ if u not in removed)
        if not starts:
            break
        length, start = max(((longest(u)[0], -u) for u in starts))
        start = -start
        if length < 2:
            break
        path = [start]
        while True:
            nxt = longest(path[-1])[1]
            if nxt is None:
                break
            path.append(nxt)
        tracks.append(path)
        removed.update(path)
    return TrackSet(tracks)


def doublet_metrics(kept, truth) -> tuple[float, float]:
    """``(efficiency, purity)`` of kept hit pairs against truth pairs.

    Efficiency is 1 when there are no truth pairs. Purity is 1 when nothing is
    kept and there is no truth, and 0 when nothing is kept but truth exists.
    """
    kept, truth = set(kept), set(truth)
    correct = len(kept & truth)
    eff = correct / len(truth) if truth else 1.0
    if kept:
        pur = correct / len(kept)
    else:
        pur = 1.0 if not truth else 0.0
    return eff, pur


def harmonic_mean(eff: float, pur: float) -> float:
    return 0.0 if eff + pur == 0 else 2 * eff * pur / (eff + pur)
