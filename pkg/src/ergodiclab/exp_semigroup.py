"""Exponential semigroup S(t) = e^{-t} e^{tT} for a power-bounded matrix T.

The construction turns any power-bounded operator into a bounded
uniformly continuous semigroup: under the renorm
|||x||| = sup_n ||T^n x||_1 the operator T is contractive, hence
|||S(t)||| <= exp(t(|||T||| - 1)) <= 1.  Fixed vectors of T are exactly
the fixed vectors of every S(t).

Series evaluation is matrix-free: e^{tT} x is accumulated with the
running-term recurrence term_{j+1} = term_j * t/(j+1) applied to vectors,
never forming the exponential densely.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .semigroups import from_sparse_triples, matrix_T, opnorm_l1
from .space import TruncatedVector, norm_l1

__all__ = ["PowerBoundedOperator", "renorm", "apply_S", "semigroup_defect_S"]

_MAX_SERIES_TERMS = 100_000


@dataclass(frozen=True, eq=False)
class PowerBoundedOperator:
    """Square matrix with an empirical bound on sup_n of its power norms.

    ``power_bound`` is the max of the l1 operator norms of T^n over
    n = 0..horizon (n = 0 included, so the bound is always >= 1 and the
    renorm below dominates the original norm).
    """

    matrix: np.ndarray
    power_bound: float
    horizon: int

    def __post_init__(self):
        arr = np.asarray(self.matrix, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("matrix must be square")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @classmethod
    def from_matrix(cls, matrix, horizon: int = 256) -> "PowerBoundedOperator":
        """Estimate the power bound by scanning ||T^n|| for n = 0..horizon."""
        arr = np.asarray(matrix, dtype=float)
        bound = 1.0  # n = 0 term
        power = np.eye(arr.shape[0])
        for _ in range(horizon):
            power = arr @ power
            bound = max(bound, opnorm_l1(power))
        return cls(matrix=arr, power_bound=bound, horizon=horizon)

    @classmethod
    def identity(cls, dim: int, horizon: int = 256) -> "PowerBoundedOperator":
        return cls(matrix=np.eye(dim), power_bound=1.0, horizon=horizon)

    @classmethod
    def from_timestep(cls, t: float, dim: int, horizon: int = 256) -> "PowerBoundedOperator":
        """The perturbed-semigroup matrix T(t) at truncation ``dim`` as input."""
        return cls.from_matrix(matrix_T(t, dim).entries, horizon=horizon)

    @classmethod
    def from_triples(cls, text: str, horizon: int = 256) -> "PowerBoundedOperator":
        return cls.from_matrix(from_sparse_triples(text), horizon=horizon)


def renorm(x: TruncatedVector, T: PowerBoundedOperator) -> float:
    """Renorm |||x||| = max_{0 <= n <= horizon} ||T^n x||_1.

    Includes n = 0, so ||x||_1 <= |||x||| <= power_bound * ||x||_1.  The
    finite horizon stands in for a sup over all powers; if the max is
    attained only in the last 10% of powers the horizon has not
    stabilized and a warning is emitted.
    """
    if x.dim != T.dim:
        raise ValueError(f"dimension mismatch: operator {T.dim}, vector {x.dim}")
    v = x.coords.copy()
    best = float(np.abs(v).sum())
    best_at = 0
    for n in range(1, T.horizon + 1):
        v = T.matrix @ v
        norm = float(np.abs(v).sum())
        if norm > best:
            best = norm
            best_at = n
    if best_at > 0.9 * T.horizon:
        warnings.warn(
            f"renorm max attained at power {best_at} of {T.horizon}: "
            "horizon too short to have stabilized",
            stacklevel=2,
        )
    return best


def apply_S(t: float, x: TruncatedVector, T: PowerBoundedOperator, tol: float) -> TruncatedVector:
    """e^{-t} e^{tT} x by truncated Taylor series with a certified remainder.

    The series stops once the dropped weight e^{-t} sum_{j>J} t^j/j!,
    multiplied by power_bound * ||x||_1, falls below ``tol``; that weight
    is tracked exactly as 1 minus the accumulated Poisson mass.
    """
    if t < 0:
        raise ValueError(f"time t must be >= 0, got {t}")
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if x.dim != T.dim:
        raise ValueError(f"dimension mismatch: operator {T.dim}, vector {x.dim}")
    scale = T.power_bound * norm_l1(x)
    weight = math.exp(-t)          # e^{-t} t^j / j! at j = 0
    cum = weight
    v = x.coords.copy()
    acc = weight * v
    j = 0
    while (1.0 - cum) * scale >= tol:
        j += 1
        if j > _MAX_SERIES_TERMS:
            raise RuntimeError("exponential series failed to reach tolerance")
        v = T.matrix @ v
        weight *= t / j
        acc = acc + weight * v
        cum += weight
    return TruncatedVector(acc)


def semigroup_defect_S(
    t: float, s: float, x: TruncatedVector, T: PowerBoundedOperator, tol: float
) -> float:
    """l1 defect ||S(t+s)x - S(t)S(s)x||; bounded by 4 * tol * power_bound."""
    joint = apply_S(t + s, x, T, tol)
    stepped = apply_S(t, apply_S(s, x, T, tol), T, tol)
    return norm_l1(joint - stepped)
