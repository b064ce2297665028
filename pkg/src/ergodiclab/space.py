"""Truncated l1 sequence-space arithmetic.

Vectors live in the span of the first N coordinate directions of l1 and
carry their truncation dimension explicitly.  Indices are 1-based at the
API surface; storage is a dense float64 array.  All operations are pure
and every vector is immutable once constructed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TruncatedVector",
    "DualFunctional",
    "vector",
    "zero_vector",
    "basis_vector",
    "project_Q",
    "project_P",
    "norm_l1",
    "pair",
    "vector_to_json",
    "vector_from_json",
    "functional_to_json",
    "functional_from_json",
]


@dataclass(frozen=True)
class TruncatedVector:
    """Element of the span of the first ``dim`` coordinate vectors of l1."""

    coords: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coords, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("coords must be a nonempty 1-d array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coords must be finite (no NaN/inf)")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def dim(self) -> int:
        return int(self.coords.size)

    def coord(self, k: int) -> float:
        """1-based coordinate access."""
        if not 1 <= k <= self.dim:
            raise IndexError(f"coordinate index {k} out of range 1..{self.dim}")
        return float(self.coords[k - 1])

    def __add__(self, other: "TruncatedVector") -> "TruncatedVector":
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return TruncatedVector(self.coords + other.coords)

    def __sub__(self, other: "TruncatedVector") -> "TruncatedVector":
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return TruncatedVector(self.coords - other.coords)

    def __rmul__(self, scalar: float) -> "TruncatedVector":
        return TruncatedVector(float(scalar) * self.coords)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TruncatedVector)
            and self.dim == other.dim
            and bool(np.array_equal(self.coords, other.coords))
        )


def vector(values) -> TruncatedVector:
    """Build a vector from any 1-d sequence of finite reals."""
    return TruncatedVector(np.asarray(values, dtype=float))


def zero_vector(dim: int) -> TruncatedVector:
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    return TruncatedVector(np.zeros(dim))


def basis_vector(k: int, dim: int) -> TruncatedVector:
    """The k-th coordinate vector at truncation ``dim`` (1 at k, 0 elsewhere)."""
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    if not 1 <= k <= dim:
        raise IndexError(f"basis index {k} out of range 1..{dim}")
    coords = np.zeros(dim)
    coords[k - 1] = 1.0
    return TruncatedVector(coords)


def project_Q(x: TruncatedVector, h: int) -> TruncatedVector:
    """Single-coordinate projection: keep coordinate h, zero the rest."""
    if not 1 <= h <= x.dim:
        raise IndexError(f"projection index {h} out of range 1..{x.dim}")
    coords = np.zeros(x.dim)
    coords[h - 1] = x.coords[h - 1]
    return TruncatedVector(coords)


def project_P(x: TruncatedVector, h: int) -> TruncatedVector:
    """Partial-sum projection: keep coordinates 1..h, zero those above h.

    Contractive on l1: the result never has larger l1 norm than x.
    """
    if not 1 <= h <= x.dim:
        raise IndexError(f"projection index {h} out of range 1..{x.dim}")
    coords = x.coords.copy()
    coords[h:] = 0.0
    return TruncatedVector(coords)


def norm_l1(x: TruncatedVector) -> float:
    return float(np.abs(x.coords).sum())


@dataclass(frozen=True)
class DualFunctional:
    """Bounded functional on the truncated space, an element of l-infinity.

    ``kind`` is either ``"constant_one"`` (the all-ones sequence) or
    ``"sequence"`` with an explicit coefficient array.
    """

    kind: str
    values: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in ("constant_one", "sequence"):
            raise ValueError(f"unknown functional kind {self.kind!r}")
        if self.kind == "sequence":
            if self.values is None:
                raise ValueError("sequence functional requires values")
            arr = np.asarray(self.values, dtype=float)
            if arr.ndim != 1 or arr.size < 1:
                raise ValueError("values must be a nonempty 1-d array")
            if not np.all(np.isfinite(arr)):
                raise ValueError("values must be finite")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, "values", arr)
        elif self.values is not None:
            raise ValueError("constant_one functional carries no values")

    def __eq__(self, other) -> bool:
        if not isinstance(other, DualFunctional) or self.kind != other.kind:
            return False
        if self.kind == "constant_one":
            return True
        return bool(np.array_equal(self.values, other.values))

    @classmethod
    def constant_one(cls) -> "DualFunctional":
        return cls(kind="constant_one")

    @classmethod
    def sequence(cls, values) -> "DualFunctional":
        return cls(kind="sequence", values=np.asarray(values, dtype=float))

    @property
    def sup_norm(self) -> float:
        if self.kind == "constant_one":
            return 1.0
        return float(np.abs(self.values).max())


def pair(f: DualFunctional, x: TruncatedVector) -> float:
    """Duality pairing sum_k f_k x_k; for constant_one this is the coordinate sum."""
    if f.kind == "constant_one":
        return float(x.coords.sum())
    if f.values.size < x.dim:
        raise ValueError(
            f"functional length {f.values.size} shorter than vector dim {x.dim}"
        )
    return float((f.values[: x.dim] * x.coords).sum())


# --- JSON wire formats ---

def vector_to_json(x: TruncatedVector) -> str:
    return json.dumps(list(x.coords))


def vector_from_json(text: str) -> TruncatedVector:
    data = json.loads(text)
    if not isinstance(data, list):
        raise ValueError("vector JSON must be an array of numbers")
    return vector(data)


def functional_to_json(f: DualFunctional) -> str:
    if f.kind == "constant_one":
        return json.dumps({"kind": "constant_one"})
    return json.dumps({"kind": "sequence", "values": list(f.values)})


def functional_from_json(text: str) -> DualFunctional:
    data = json.loads(text)
    kind = data.get("kind")
    if kind == "constant_one":
        return DualFunctional.constant_one()
    if kind == "sequence":
        return DualFunctional.sequence(data["values"])
    raise ValueError(f"unknown functional kind {kind!r}")
