"""Ising and QUBO problem containers, energies, conversion and the exact oracle.

Conventions used throughout the package:

* Ising energy ``E(x) = 1/2 * sum_ij J_ij x_i x_j + sum_i h_i x_i + offset`` with
  ``x_i in {-1, +1}`` and a zero diagonal in ``J``.
* QUBO energy ``E(s) = sum_ij Q_ij s_i s_j + offset`` with ``s_i in {0, 1}``;
  the diagonal of ``Q`` carries the linear terms (``s**2 == s``).
* A spin ``x_i = +1`` corresponds to bit 0 and ``x_i = -1`` to bit 1. Spin
  configurations are ordered lexicographically through these bits, which is
  also the basis ordering of the QAOA statevector.

Matrices are dense ``numpy`` arrays up to :data:`DENSE_LIMIT` variables and
``scipy.sparse`` CSR matrices beyond (or whenever the caller passes one).
All randomness is drawn from ``numpy.random.Generator(PCG64(seed))``.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np
import scipy.sparse as sp

DENSE_LIMIT = 4096
BRUTE_FORCE_LIMIT = 24
PROBLEM_FORMAT = "isingreco-problem"
PROBLEM_FORMAT_VERSION = 1

Matrix = Union[np.ndarray, sp.csr_matrix]


class ProblemError(ValueError):
    """Invalid problem definition, configuration or size guard violation."""


def make_rng(seed: int) -> np.random.Generator:
    """The single generator construction used across the package (PCG64)."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def _as_matrix(a, name: str) -> Matrix:
    if sp.issparse(a):
        m = sp.csr_matrix(a, dtype=float)
        m.sum_duplicates()
        m.eliminate_zeros()
        return m
    m = np.array(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ProblemError(f"{name} must be a square matrix, got shape {m.shape}")
    return m


def _is_symmetric(m: Matrix) -> bool:
    if sp.issparse(m):
        return (m != m.T).nnz == 0
    return bool(np.array_equal(m, m.T))


def _diagonal(m: Matrix) -> np.ndarray:
    return np.asarray(m.diagonal(), dtype=float)


def _freeze(a):
    if isinstance(a, np.ndarray):
        a.setflags(write=False)
    return a


def _matvec(m: Matrix, v: np.ndarray) -> np.ndarray:
    return np.asarray(m @ v, dtype=float)


@dataclass(frozen=True, eq=False)
class IsingProblem:
    """Minimise ``1/2 x.J.x + h.x + offset`` over spins.

    ``J`` must be exactly symmetric with a zero diagonal; use
    :meth:`from_terms` to build one from an upper-triangle coupling list.
    """

    J: Matrix
    h: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        J = _as_matrix(self.J, "J")
        h = np.array(self.h, dtype=float).reshape(-1)
        if J.shape[0] < 1:
            raise ProblemError("an Ising problem needs at least one spin")
        if h.shape[0] != J.shape[0]:
            raise ProblemError(f"h has length {h.shape[0]}, J is {J.shape[0]}x{J.shape[0]}")
        if not _is_symmetric(J):
            raise ProblemError("J must be symmetric")
        if np.any(_diagonal(J) != 0):
            raise ProblemError("J must have a zero diagonal")
        if not np.isfinite(float(self.offset)):
            raise ProblemError("offset must be finite")
        object.__setattr__(self, "J", _freeze(J))
        object.__setattr__(self, "h", _freeze(h))
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_terms(cls, n: int, couplings=(), fields=(), offset: float = 0.0) -> "IsingProblem":
        """Build from ``(i, j, J_ij)`` with ``i != j`` and ``(i, h_i)`` terms.

        Repeated terms are summed; each coupling is mirrored to ``J_ji``.
        """
        rows, cols, vals = _coupling_triplets(n, couplings, allow_diagonal=False)
        h = np.zeros(n)
        for i, v in fields:
            h[int(i)] += float(v)
        return cls(_assemble(n, rows, cols, vals), h, offset)

    @property
    def n(self) -> int:
        return self.J.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.J)

    def dense_J(self) -> np.ndarray:
        return self.J.toarray() if self.is_sparse else np.asarray(self.J)

    def local_fields(self, x: np.ndarray) -> np.ndarray:
        """``J.x + h``; the energy change of flipping spin k is ``-2 x_k f_k``."""
        return _matvec(self.J, np.asarray(x, dtype=float)) + self.h

    def energy(self, x) -> float:
        return ising_energy(self, x)

    def scaled(self, factor: float) -> "IsingProblem":
        return IsingProblem(self.J * factor, self.h * factor, self.offset * factor)


@dataclass(frozen=True, eq=False)
class QuboProblem:
    """Minimise ``s.Q.s + offset`` over binaries; ``Q`` symmetric, diagonal = linear terms."""

    Q: Matrix
    offset: float = 0.0

    def __post_init__(self):
        Q = _as_matrix(self.Q, "Q")
        if Q.shape[0] < 1:
            raise ProblemError("a QUBO problem needs at least one variable")
        if not _is_symmetric(Q):
            raise ProblemError("Q must be symmetric")
        if not np.isfinite(float(self.offset)):
            raise ProblemError("offset must be finite")
        object.__setattr__(self, "Q", _freeze(Q))
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_terms(cls, n: int, couplings=(), linear=(), offset: float = 0.0) -> "QuboProblem":
        """Build from ``(i, j, Q_ij)`` entries (mirrored to ``Q_ji``) and ``(i, Q_ii)``.

        Note that a mirrored entry contributes ``2 * Q_ij * s_i * s_j`` to the energy.
        """
        rows, cols, vals = _coupling_triplets(n, couplings, allow_diagonal=False)
        for i, v in linear:
            i = int(i)
            if not 0 <= i < n:
                raise ProblemError(f"linear index {i} out of range for n={n}")
            rows.append(i)
            cols.append(i)
            vals.append(float(v))
        return cls(_assemble(n, rows, cols, vals), offset)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.Q)

    def dense_Q(self) -> np.ndarray:
        return self.Q.toarray() if self.is_sparse else np.asarray(self.Q)

    def energy(self, s) -> float:
        return qubo_energy(self, s)


def _coupling_triplets(n, couplings, allow_diagonal):
    n = int(n)
    if n < 1:
        raise ProblemError("n must be >= 1")
    rows, cols, vals = [], [], []
    for i, j, v in couplings:
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise ProblemError(f"coupling ({i}, {j}) out of range for n={n}")
        if i == j and not allow_diagonal:
            raise ProblemError(f"diagonal coupling ({i}, {i}) given as a pair term")
        rows += [i, j]
        cols += [j, i]
        vals += [float(v), float(v)]
    return rows, cols, vals


def _assemble(n, rows, cols, vals) -> Matrix:
    if n > DENSE_LIMIT:
        m = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        m.sum_duplicates()
        return m
    m = np.zeros((n, n))
    np.add.at(m, (np.asarray(rows, dtype=int), np.asarray(cols, dtype=int)), np.asarray(vals, dtype=float))
    return m


Problem = Union[IsingProblem, QuboProblem]


def as_spins(x, n: int | None = None) -> np.ndarray:
    """Validate a spin vector; raises on entries other than -1/+1 or wrong length."""
    a = np.asarray(x)
    if a.ndim != 1:
        raise ProblemError("spin configuration must be one-dimensional")
    if n is not None and a.shape[0] != n:
        raise ProblemError(f"configuration has length {a.shape[0]}, problem has n={n}")
    if not np.all((a == 1) | (a == -1)):
        raise ProblemError("spin entries must be exactly -1 or +1")
    return a.astype(np.int8)


def as_binary(s, n: int | None = None) -> np.ndarray:
    a = np.asarray(s)
    if a.ndim != 1:
        raise ProblemError("binary configuration must be one-dimensional")
    if n is not None and a.shape[0] != n:
        raise ProblemError(f"configuration has length {a.shape[0]}, problem has n={n}")
    if not np.all((a == 0) | (a == 1)):
        raise ProblemError("binary entries must be exactly 0 or 1")
    return a.astype(np.int8)


def spins_to_binary(x) -> np.ndarray:
    """Map spins to QUBO binaries with ``x = 2 s - 1``."""
    return ((np.asarray(x) + 1) // 2).astype(np.int8)


def binary_to_spins(s) -> np.ndarray:
    return (2 * np.asarray(s) - 1).astype(np.int8)


def ising_energy(p: IsingProblem, x) -> float:
    x = as_spins(x, p.n).astype(float)
    return float(0.5 * x @ _matvec(p.J, x) + p.h @ x + p.offset)


def qubo_energy(p: QuboProblem, s) -> float:
    s = as_binary(s, p.n).astype(float)
    return float(s @ _matvec(p.Q, s) + p.offset)


def energy(p: Problem, config) -> float:
    if isinstance(p, IsingProblem):
        return ising_energy(p, config)
    return qubo_energy(p, config)


def flip_delta(p: IsingProblem, x, k: int) -> float:
    """Energy change from flipping spin ``k``."""
    x = np.asarray(x, dtype=float)
    row = p.J[[k], :].toarray().ravel() if p.is_sparse else p.J[k]
    return float(-2.0 * x[k] * (row @ x + p.h[k]))


def qubo_to_ising(p: QuboProblem) -> IsingProblem:
    """Exact conversion (``x = 2 s - 1``) keeping the constant in ``offset``."""
    Q = p.Q
    diag = _diagonal(Q)
    row_sums = np.asarray(Q.sum(axis=1)).ravel()
    total = float(row_sums.sum())
    if sp.issparse(Q):
        J = (Q - sp.diags(diag)).tocsr() * 0.5
        J.eliminate_zeros()
    else:
        J = 0.5 * (Q - np.diag(diag))
    off_diag_total = total - float(diag.sum())
    offset = p.offset + off_diag_total / 4.0 + float(diag.sum()) / 2.0
    return IsingProblem(J, 0.5 * row_sums, offset)


def ising_to_qubo(p: IsingProblem) -> QuboProblem:
    """Inverse of :func:`qubo_to_ising` with the same offset bookkeeping."""
    J = p.J
    row_sums = np.asarray(J.sum(axis=1)).ravel()
    lin = 2.0 * p.h - 2.0 * row_sums
    if sp.issparse(J):
        Q = (2.0 * J + sp.diags(lin)).tocsr()
        Q.eliminate_zeros()
    else:
        Q = 2.0 * np.asarray(J) + np.diag(lin)
    offset = p.offset + 0.5 * float(row_sums.sum()) - float(p.h.sum())
    return QuboProblem(Q, offset)


@dataclass
class SolveResult:
    """Universal solver output.

    ``config`` is a spin vector for Ising problems and a binary vector for
    QUBO problems. ``trace`` holds ``(step, best energy so far)`` pairs.
    """

    config: np.ndarray
    energy: float
    trace: list = field(default_factory=list)
    evaluations: int = 0
    wall_time: float = 0.0
    seed: int = 0
    solver_id: str = ""
    info: dict = field(default_factory=dict)


def _enumeration_chunk(start: int, stop: int, n: int) -> np.ndarray:
    """Bits of the integers in ``[start, stop)``, most significant bit first."""
    ks = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((ks[:, None] >> shifts) & 1).astype(np.int8)


def brute_force_solve(p: Problem, chunk: int = 1 << 16, tie_tol: float = 1e-12) -> SolveResult:
    """Exhaustive global minimisation for ``n <= 24``.

    Ties (within ``tie_tol`` relative to the energy scale) are broken toward the
    lexicographically smallest bit string, i.e. the smallest enumeration index.
    """
    n = p.n
    if n > BRUTE_FORCE_LIMIT:
        raise ProblemError(f"brute force refused: n={n} exceeds the limit of {BRUTE_FORCE_LIMIT}")
    t0 = time.perf_counter()
    is_ising = isinstance(p, IsingProblem)
    if is_ising:
        M, lin = p.dense_J(), p.h
    else:
        M, lin = p.dense_Q(), None
    scale = float(np.abs(M).sum() + (np.abs(lin).sum() if lin is not None else 0.0) + 1.0)
    tol = tie_tol * scale
    best_e, best_k = np.inf, -1
    total = 1 << n
    trace = []
    for start in range(0, total, chunk):
        bits = _enumeration_chunk(start, min(start + chunk, total), n)
        if is_ising:
            X = 1.0 - 2.0 * bits
            e = 0.5 * np.einsum("ki,ki->k", X @ M, X) + X @ lin
        else:
            X = bits.astype(float)
            e = np.einsum("ki,ki->k", X @ M, X)
        k = int(np.argmin(e))
        if e[k] < best_e - tol:
            first = int(np.flatnonzero(e <= e[k] + tol)[0])
            best_e, best_k = float(e[first]), start + first
            trace.append((start + first, best_e + p.offset))
    bits = _enumeration_chunk(best_k, best_k + 1, n)[0]
    config = (1 - 2 * bits).astype(np.int8) if is_ising else bits
    e_final = energy(p, config)
    trace[-1] = (trace[-1][0], e_final)
    return SolveResult(
        config=config,
        energy=e_final,
        trace=trace,
        evaluations=total,
        wall_time=time.perf_counter() - t0,
        seed=0,
        solver_id="brute",
    )


def random_problem(n: int, density: float, seed: int) -> IsingProblem:
    """Random symmetric couplings with the given off-diagonal fill fraction.

    Couplings and fields are uniform in [-1, 1].
    """
    if n < 1:
        raise ProblemError("n must be >= 1")
    if not 0.0 <= density <= 1.0:
        raise ProblemError(f"density must lie in [0, 1], got {density}")
    rng = make_rng(seed)
    iu = np.triu_indices(n, k=1)
    mask = rng.random(iu[0].size) < density
    vals = rng.uniform(-1.0, 1.0, iu[0].size) * mask
    h = rng.uniform(-1.0, 1.0, n)
    if n > DENSE_LIMIT:
        r, c, v = iu[0][mask], iu[1][mask], vals[mask]
        J = sp.coo_matrix((np.r_[v, v], (np.r_[r, c], np.r_[c, r])), shape=(n, n)).tocsr()
    else:
        J = np.zeros((n, n))
        J[iu] = vals
        J = J + J.T
    return IsingProblem(J, h, 0.0)


# --- problem files -----------------------------------------------------------


def problem_to_dict(p: Problem) -> dict[str, Any]:
    """Serialisable form: upper-triangle couplings plus fields (Ising) or diagonal (QUBO)."""
    if isinstance(p, IsingProblem):
        kind, M, lin = "ising", p.J, p.h
    else:
        kind, M = "qubo", p.Q
        lin = _diagonal(M)
    coo = sp.triu(sp.coo_matrix(M), k=1).tocoo()
    order = np.lexsort((coo.col, coo.row))
    couplings = [[int(coo.row[k]), int(coo.col[k]), float(coo.data[k])] for k in order if coo.data[k] != 0]
    fields = [[int(i), float(v)] for i, v in enumerate(lin) if v != 0]
    return {
        "format": PROBLEM_FORMAT,
        "version": PROBLEM_FORMAT_VERSION,
        "kind": kind,
        "n": p.n,
        "offset": p.offset,
        "couplings": couplings,
        "fields": fields,
    }


_PROBLEM_KEYS = {"format", "version", "kind", "n", "offset", "couplings", "fields"}


def problem_from_dict(d: dict[str, Any]) -> Problem:
    unknown = set(d) - _PROBLEM_KEYS
    if unknown:
        raise ProblemError(f"unknown keys in problem document: {sorted(unknown)}")
    if d.get("format", PROBLEM_FORMAT) != PROBLEM_FORMAT:
        raise ProblemError(f"not a problem document: format={d.get('format')!r}")
    if int(d.get("version", PROBLEM_FORMAT_VERSION)) != PROBLEM_FORMAT_VERSION:
        raise ProblemError(f"unsupported problem format version {d.get('version')}")
    kind = d.get("kind", "ising")
    if kind not in ("ising", "qubo"):
        raise ProblemError(f"unknown problem kind {kind!r}")
    n = int(d["n"])
    seen = set()
    couplings = []
    for entry in d.get("couplings", []):
        i, j, v = int(entry[0]), int(entry[1]), float(entry[2])
        if i >= j:
            raise ProblemError(f"coupling ({i}, {j}) is not strictly upper-triangular")
        if (i, j) in seen:
            raise ProblemError(f"duplicate coupling ({i}, {j})")
        seen.add((i, j))
        couplings.append((i, j, v))
    seen_f = set()
    fields = []
    for entry in d.get("fields", []):
        i, v = int(entry[0]), float(entry[1])
        if i in seen_f:
            raise ProblemError(f"duplicate field entry for index {i}")
        seen_f.add(i)
        fields.append((i, v))
    offset = float(d.get("offset", 0.0))
    if kind == "ising":
        return IsingProblem.from_terms(n, couplings, fields, offset)
    return QuboProblem.from_terms(n, couplings, fields, offset)


def save_problem(p: Problem, path) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(p), indent=1) + "\n")


def load_problem(path) -> Problem:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{path}: not valid JSON ({exc})") from exc
    return problem_from_dict(d)
