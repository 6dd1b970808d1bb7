"""Hits CSV interchange: ``hit_id,x,y,z,layer,particle_id`` (mm; particle_id -1 is noise)."""

from __future__ import annotations

import csv
import os
import tempfile

from ..ising import ProblemError
from .toy import NOISE, Hit

HIT_COLUMNS = ("hit_id", "x", "y", "z", "layer", "particle_id")


def _parse_row(row: dict, lineno: int) -> Hit:
    try:
        return Hit(
            id=int(row["hit_id"]),
            x=float(row["x"]),
            y=float(row["y"]),
            z=float(row["z"]),
            layer=int(row["layer"]),
            truth_particle=int(row["particle_id"]),
        )
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"line {lineno}: malformed hit row ({exc})") from None


def load_hits_csv(path) -> list[Hit]:
    hits, seen = [], set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise ProblemError(f"{path}: missing header line")
        missing = [c for c in HIT_COLUMNS if c not in header]
        if missing:
            raise ProblemError(f"{path}: missing columns {missing}")
        for row in reader:
            lineno = reader.line_num
            if None in row or any(row[c] is None for c in HIT_COLUMNS):
                raise ProblemError(f"line {lineno}: expected {len(header)} fields")
            h = _parse_row(row, lineno)
            if h.id in seen:
                raise ProblemError(f"line {lineno}: duplicate hit_id {h.id}")
            if h.layer < 0:
                raise ProblemError(f"line {lineno}: negative layer")
            seen.add(h.id)
            hits.append(h)
    return hits


def save_hits_csv(hits, path) -> None:
    """Write atomically; floats use ``repr`` so a reload is bit-exact."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".hits-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HIT_COLUMNS)
            for h in hits:
                pid = h.truth_particle if h.truth_particle is not None else NOISE
                w.writerow([h.id, repr(float(h.x)), repr(float(h.y)), repr(float(h.z)), h.layer, pid])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
