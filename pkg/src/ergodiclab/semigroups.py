"""Concrete operators at truncation N, matrix-free where it matters.

Two uniformly continuous semigroups are implemented on the truncated
space: the diagonal decay semigroup M(t) with generator A, and its
rank-structured perturbation T(t) = M(t) + N_t with generator
B = A + Ndot, built from the all-ones functional.  M is diagonal and
therefore exact at every truncation; the perturbation drops coefficient
mass beyond the truncation edge and carries the tail certificate
tail_sum_b(N, t) <= t/N per unit input norm.

Convention: matrices act on column vectors; the image of basis vector
e_k is column k.  The row-action display of the same operators is the
transpose of what is stored here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coeffs import b_row, tail_sum_b
from .space import TruncatedVector

__all__ = [
    "TruncatedOperator",
    "KernelResult",
    "apply_M",
    "apply_A",
    "apply_A_inverse",
    "apply_N",
    "apply_T",
    "apply_Ndot",
    "apply_B",
    "apply_B_adjoint",
    "matrix_M",
    "matrix_N",
    "matrix_T",
    "matrix_A",
    "matrix_A_inverse",
    "matrix_Ndot",
    "matrix_B",
    "kernel_B",
    "adjoint_residual_vector",
    "opnorm_l1",
    "to_sparse_triples",
    "from_sparse_triples",
    "dense_rows",
]


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """N x N matrix in column-action convention plus a tail certificate.

    ``tail_bound(support_bound, t)`` bounds the l1 discrepancy against the
    untruncated operator, per unit l1 norm of an input supported in the
    first ``support_bound`` coordinates.
    """

    entries: np.ndarray
    tail_bound: Callable[[int, float], float]

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("entries must be a square matrix")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def apply(self, x: TruncatedVector) -> TruncatedVector:
        if x.dim != self.dim:
            raise ValueError(f"dimension mismatch: operator {self.dim}, vector {x.dim}")
        return TruncatedVector(self.entries @ x.coords)


def _no_tail(_support: int, _t: float) -> float:
    return 0.0


def _check_time(t: float):
    if t < 0:
        raise ValueError(f"time t must be >= 0, got {t}")


# --- matrix-free applications, O(N) each ---

def apply_M(t: float, x: TruncatedVector) -> TruncatedVector:
    """Diagonal decay semigroup: coordinate h is scaled by exp(-t/h).

    Exact at every truncation (no off-diagonal coupling).
    """
    _check_time(t)
    h = np.arange(1, x.dim + 1, dtype=float)
    return TruncatedVector(np.exp(-t / h) * x.coords)


def apply_A(x: TruncatedVector) -> TruncatedVector:
    """Generator of the decay semigroup: coordinate h is scaled by -1/h."""
    h = np.arange(1, x.dim + 1, dtype=float)
    return TruncatedVector(-x.coords / h)


def apply_A_inverse(x: TruncatedVector) -> TruncatedVector:
    """Inverse of the decay generator: coordinate h is scaled by -h.

    Its l1 operator norm at truncation N equals N, so the inverses blow up
    as the truncation grows: the finite shadow of an unbounded inverse.
    """
    h = np.arange(1, x.dim + 1, dtype=float)
    return TruncatedVector(-h * x.coords)


def apply_N(t: float, x: TruncatedVector) -> TruncatedVector:
    """Perturbation part: coordinate j >= 2 receives (sum of x_1..x_{j-1}) * b(j, t).

    Terms that would land beyond the truncation edge are dropped; the l1
    error against the untruncated operator is at most
    norm_l1(x) * tail_sum_b(N, t).
    """
    _check_time(t)
    out = np.zeros(x.dim)
    if x.dim > 1:
        prefix = np.cumsum(x.coords)[:-1]
        out[1:] = prefix * b_row(t, x.dim)[1:]
    return TruncatedVector(out)


def apply_T(t: float, x: TruncatedVector) -> TruncatedVector:
    """Perturbed semigroup T(t) = M(t) + N_t.

    Nonnegative matrix for t >= 0; every column of the truncated matrix
    sums to exp(-t/N), so the truncated operator has l1 norm exp(-t/N) <= 1
    and conserves the coordinate-sum functional up to that deficit.
    """
    _check_time(t)
    h = np.arange(1, x.dim + 1, dtype=float)
    out = np.exp(-t / h) * x.coords
    if x.dim > 1:
        prefix = np.cumsum(x.coords)[:-1]
        out[1:] += prefix * b_row(t, x.dim)[1:]
    return TruncatedVector(out)


def apply_Ndot(x: TruncatedVector) -> TruncatedVector:
    """Derivative at t=0 of the perturbation: coordinate h+1 is prefix_h / (h^2+h)."""
    out = np.zeros(x.dim)
    if x.dim > 1:
        h = np.arange(1, x.dim, dtype=float)
        prefix = np.cumsum(x.coords)[:-1]
        out[1:] = prefix / (h * h + h)
    return TruncatedVector(out)


def apply_B(x: TruncatedVector) -> TruncatedVector:
    """Generator of the perturbed semigroup: B = A + Ndot."""
    h = np.arange(1, x.dim + 1, dtype=float)
    out = -x.coords / h
    if x.dim > 1:
        hh = h[:-1]
        prefix = np.cumsum(x.coords)[:-1]
        out[1:] += prefix / (hh * hh + hh)
    return TruncatedVector(out)


def apply_B_adjoint(y: TruncatedVector) -> TruncatedVector:
    """Transpose action of the perturbed generator, matrix-free.

    Coordinate k of the result is -y_k/k plus the suffix sum of
    y_j/(j(j-1)) over j > k.
    """
    h = np.arange(1, y.dim + 1, dtype=float)
    out = -y.coords / h
    if y.dim > 1:
        j = h[1:]
        weighted = y.coords[1:] / (j * (j - 1.0))
        out[:-1] += np.cumsum(weighted[::-1])[::-1]
    return TruncatedVector(out)


# --- dense materializations ---

def matrix_M(t: float, N: int) -> TruncatedOperator:
    _check_time(t)
    _check_dim(N)
    h = np.arange(1, N + 1, dtype=float)
    return TruncatedOperator(np.diag(np.exp(-t / h)), _no_tail)


def matrix_A(N: int) -> TruncatedOperator:
    _check_dim(N)
    h = np.arange(1, N + 1, dtype=float)
    return TruncatedOperator(np.diag(-1.0 / h), _no_tail)


def matrix_A_inverse(N: int) -> TruncatedOperator:
    _check_dim(N)
    h = np.arange(1, N + 1, dtype=float)
    return TruncatedOperator(np.diag(-h), _no_tail)


def matrix_N(t: float, N: int) -> TruncatedOperator:
    """Strictly lower triangular: column k holds b(j, t) at rows j = k+1..N."""
    _check_time(t)
    _check_dim(N)
    entries = np.zeros((N, N))
    bv = b_row(t, N)
    for k in range(N):
        entries[k + 1 :, k] = bv[k + 1 :]

    def tail(support: int, s: float, _N=N) -> float:
        return tail_sum_b(_N, s) if support <= _N else math.inf

    return TruncatedOperator(entries, tail)


def matrix_T(t: float, N: int) -> TruncatedOperator:
    _check_time(t)
    _check_dim(N)
    entries = matrix_N(t, N).entries + matrix_M(t, N).entries

    def tail(support: int, s: float, _N=N) -> float:
        return tail_sum_b(_N, s) if support <= _N else math.inf

    return TruncatedOperator(entries, tail)


def matrix_Ndot(N: int) -> TruncatedOperator:
    _check_dim(N)
    entries = np.zeros((N, N))
    if N > 1:
        j = np.arange(2, N + 1, dtype=float)
        sub = 1.0 / (j * (j - 1))
        for k in range(N - 1):
            entries[k + 1 :, k] = sub[k:]
    return TruncatedOperator(entries, _no_tail)


def matrix_B(N: int) -> TruncatedOperator:
    """Generator matrix: column k has -1/k at row k and 1/(j(j-1)) at rows j > k.

    Lower triangular in the column-action convention; the row-action
    display of the same operator is this matrix's transpose.
    """
    _check_dim(N)
    entries = matrix_Ndot(N).entries.copy()
    h = np.arange(1, N + 1, dtype=float)
    entries[np.diag_indices(N)] = -1.0 / h
    return TruncatedOperator(entries, _no_tail)


def _check_dim(N: int):
    if N < 1:
        raise ValueError(f"truncation N must be >= 1, got {N}")


# --- structural diagnostics ---

@dataclass(frozen=True)
class KernelResult:
    is_trivial: bool
    witness: TruncatedVector | None


def kernel_B(N: int) -> KernelResult:
    """Solve Bx = 0 by forward substitution along the triangular structure.

    Row 1 forces x_1 = 0; row j forces x_j = (x_1 + ... + x_{j-1})/(j-1),
    so every coordinate vanishes inductively.  Runs in O(N).
    """
    _check_dim(N)
    x = np.zeros(N)
    running = 0.0
    for j in range(2, N + 1):
        x[j - 1] = running / (j - 1)
        running += x[j - 1]
    if np.any(x != 0.0):
        return KernelResult(is_trivial=False, witness=TruncatedVector(x))
    return KernelResult(is_trivial=True, witness=None)


def adjoint_residual_vector(N: int) -> np.ndarray:
    """Coordinate sums of B e_k for k = 1..N, i.e. the adjoint image of all-ones.

    Each entry telescopes to exactly -1/N.  Suffix sums are accumulated
    with Kahan compensation so the uniformity holds to ~1e-16 even at
    N = 65536, where a naive running sum would drift.
    """
    _check_dim(N)
    res = np.empty(N)
    res[N - 1] = -1.0 / N
    s = 0.0
    c = 0.0
    for k in range(N - 1, 0, -1):
        term = 1.0 / (k * (k + 1))
        y = term - c
        t2 = s + y
        c = (t2 - s) - y
        s = t2
        res[k - 1] = s - 1.0 / k
    return res


def opnorm_l1(entries: np.ndarray) -> float:
    """l1 operator norm of a matrix in column-action convention: max abs column sum."""
    arr = np.asarray(entries, dtype=float)
    if arr.ndim != 2:
        raise ValueError("expected a matrix")
    return float(np.abs(arr).sum(axis=0).max())


# --- exchange formats ---

def to_sparse_triples(op: TruncatedOperator, drop_tol: float = 0.0) -> str:
    """Plain-text sparse triples ``row col value`` (1-based, 17 significant digits)."""
    lines = [f"% sparse triples, column-action, dim {op.dim}"]
    rows, cols = np.nonzero(np.abs(op.entries) > drop_tol)
    order = np.lexsort((rows, cols))
    for idx in order:
        i, j = int(rows[idx]), int(cols[idx])
        lines.append(f"{i + 1} {j + 1} {op.entries[i, j]:.16e}")
    return "\n".join(lines) + "\n"


def from_sparse_triples(text: str) -> np.ndarray:
    """Parse the triple format back into a dense matrix (dim inferred)."""
    triples = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith(("%", "#")):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"malformed triple line: {raw!r}")
        triples.append((int(parts[0]), int(parts[1]), float(parts[2])))
    if not triples:
        raise ValueError("no triples found")
    dim = max(max(i, j) for i, j, _ in triples)
    entries = np.zeros((dim, dim))
    for i, j, v in triples:
        if i < 1 or j < 1:
            raise ValueError("triple indices are 1-based and must be >= 1")
        entries[i - 1, j - 1] = v
    return entries


def dense_rows(op: TruncatedOperator) -> list[list[float]]:
    """Row-major nested lists of the column-action matrix, for JSON export."""
    return [[float(v) for v in row] for row in op.entries]


def matrix_json(op: TruncatedOperator) -> str:
    """Dense JSON of the stored matrix, flagging the display convention."""
    payload = {
        "dim": op.dim,
        "convention": "column-action",
        "display_transpose_of_row_action": True,
        "entries": dense_rows(op),
    }
    return json.dumps(payload, indent=2, sort_keys=True)
