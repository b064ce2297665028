"""Ergodicity verdicts assembled from finite-truncation evidence.

Finite truncations of the operators here are always mean ergodic and
uniformly mean ergodic as matrices, so every verdict about the
infinite-dimensional objects is phrased as a scaling law across the
truncation dimension (adjoint residuals shrinking like -1/N, an
operator-norm floor persisting for r <= N, l1 mass escaping to ever
higher coordinates), never as a single-N fact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cesaro import CesaroCurve, cesaro_M_opnorm, curve_cesaro_T
from .exp_semigroup import PowerBoundedOperator
from .space import TruncatedVector, basis_vector

__all__ = [
    "Evidence",
    "ErgodicityReport",
    "ConvergenceVerdict",
    "kernel_criterion",
    "sine_criterion",
    "uniform_criterion_M",
    "mass_escape_profile",
    "cauchy_convergence_test",
]

UNIFORM_FLOOR = 1.0 - 1.0 / math.e

# singular values below this fraction of the largest count as zero
_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class Evidence:
    """One named numerical fact supporting a verdict.

    ``bound`` is the threshold the value is compared against when the
    fact acts as a quantitative witness; ``ref`` names the criterion the
    fact instantiates.
    """

    name: str
    value: float | int | list | bool
    bound: float | None = None
    ref: str | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "bound": self.bound, "paper_ref": self.ref}


_VERDICTS = ("converges", "diverges", "inconclusive")


@dataclass(frozen=True)
class ErgodicityReport:
    """Structured verdict with the numerical evidence that justifies it."""

    subject: str
    truncation: int
    mean_verdict: str
    uniform_verdict: str
    evidence: tuple[Evidence, ...]
    caveats: tuple[str, ...] = ()

    def __post_init__(self):
        if self.mean_verdict not in _VERDICTS or self.uniform_verdict not in _VERDICTS:
            raise ValueError(f"verdicts must be one of {_VERDICTS}")
        if not self.evidence:
            raise ValueError("every verdict needs at least one evidence entry")
        if "diverges" in (self.mean_verdict, self.uniform_verdict):
            witnesses = [e for e in self.evidence if e.bound is not None]
            if not witnesses:
                raise ValueError("diverges verdicts need a quantitative lower-bound witness")

    def to_json(self) -> str:
        payload = {
            "subject": self.subject,
            "truncation": self.truncation,
            "verdicts": {"mean": self.mean_verdict, "uniform": self.uniform_verdict},
            "evidence": [e.to_dict() for e in self.evidence],
            "caveats": list(self.caveats),
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _null_dim(matrix: np.ndarray) -> int:
    """Nullity of a square matrix; triangular fast path reads the diagonal."""
    n = matrix.shape[0]
    diag_scale = float(np.abs(matrix).max())
    if diag_scale == 0.0:
        return n
    lower = np.allclose(matrix, np.tril(matrix), atol=0.0)
    upper = np.allclose(matrix, np.triu(matrix), atol=0.0)
    if lower or upper:
        return int(np.sum(np.abs(np.diag(matrix)) <= _RANK_RTOL * diag_scale))
    svals = np.linalg.svd(matrix, compute_uv=False)
    return int(np.sum(svals <= _RANK_RTOL * svals[0]))


def _materialize(apply_fn: Callable[[TruncatedVector], TruncatedVector], N: int) -> np.ndarray:
    cols = [apply_fn(basis_vector(k, N)).coords for k in range(1, N + 1)]
    return np.column_stack(cols)


def kernel_criterion(
    generator_apply: Callable[[TruncatedVector], TruncatedVector],
    adjoint_apply: Callable[[TruncatedVector], TruncatedVector],
    N: int,
) -> list[Evidence]:
    """Null-space dimensions of a generator and its adjoint at truncation N.

    A trivial adjoint null space certifies mean ergodicity.  The evidence
    also records the adjoint image of the all-ones functional (the
    coordinate sums of the generator columns): when that residual is
    uniformly small but nonzero, the finite truncations are flagging an
    emergent fixed functional of the infinite-dimensional adjoint.
    """
    if N < 1:
        raise ValueError(f"truncation N must be >= 1, got {N}")
    gen = _materialize(generator_apply, N)
    adj = _materialize(adjoint_apply, N)
    if gen.shape != adj.shape:
        raise ValueError("generator and adjoint act on different dimensions")
    ones = TruncatedVector(np.ones(N))
    residual = adjoint_apply(ones).coords
    return [
        Evidence("generator_null_dim", _null_dim(gen), ref="adjoint-kernel criterion"),
        Evidence("adjoint_null_dim", _null_dim(adj), ref="adjoint-kernel criterion"),
        Evidence("adjoint_ones_residual_max", float(np.abs(residual).max())),
        Evidence("adjoint_ones_residual_min", float(np.abs(residual).min())),
        Evidence(
            "adjoint_ones_residual_uniform",
            bool(np.abs(residual - residual.mean()).max() <= 1e-12 + 1e-9 * np.abs(residual).max()),
        ),
    ]


def _null_basis(matrix: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the null space (columns); may have zero columns."""
    u, svals, vt = np.linalg.svd(matrix)
    if svals.size == 0 or svals[0] == 0.0:
        return np.eye(matrix.shape[0])
    rank = int(np.sum(svals > _RANK_RTOL * svals[0]))
    return vt[rank:].T


def sine_criterion(T: PowerBoundedOperator) -> list[Evidence]:
    """Fixed-space separation check for a power-bounded matrix.

    Computes bases of fix(T) and fix(T'); separation holds when no
    nonzero fixed functional annihilates the whole fixed space, i.e. the
    cross-Gram matrix has full rank over fix(T').  Mean ergodicity of T
    is equivalent to separation.
    """
    eye = np.eye(T.dim)
    fix_T = _null_basis(T.matrix - eye)
    fix_Tp = _null_basis(T.matrix.T - eye)
    dim_fix = fix_T.shape[1]
    dim_fix_adj = fix_Tp.shape[1]
    if dim_fix_adj == 0:
        separated = True  # vacuous: nothing to separate
    elif dim_fix == 0:
        separated = False
    else:
        gram = fix_T.T @ fix_Tp  # rows: fixed vectors, cols: fixed functionals
        svals = np.linalg.svd(gram, compute_uv=False)
        rank = int(np.sum(svals > _RANK_RTOL * max(svals[0], 1e-300)))
        separated = rank == dim_fix_adj
    evidence = [
        Evidence("fixed_space_dim", dim_fix, ref="fixed-space separation"),
        Evidence("adjoint_fixed_space_dim", dim_fix_adj, ref="fixed-space separation"),
        Evidence("separation_holds", bool(separated), ref="fixed-space separation"),
    ]
    if dim_fix == 0 and dim_fix_adj == 0:
        evidence.append(
            Evidence("obstruction_infinite_dimensional_only", True)
        )
    return evidence


def uniform_criterion_M(N: int, r_grid) -> list[Evidence]:
    """Three mutually consistent facts behind the uniform-ergodicity failure.

    (i) the inverse of the decay generator has l1 norm exactly N, growing
    without bound; (ii) the generator eigenvalues -1/h accumulate at 0;
    (iii) the mean's operator norm keeps a floor of 1 - 1/e for every
    r <= N.  Any one of these degenerates at fixed N; together, across
    growing N, they witness the failure in the limit.
    """
    if N < 1:
        raise ValueError(f"truncation N must be >= 1, got {N}")
    r_grid = np.asarray(r_grid, dtype=float)
    h = np.arange(1, N + 1, dtype=float)
    # the inverse generator is diagonal, so its l1 norm is the largest |entry|
    inv_norm = float(np.abs(-h).max())
    min_eig = float(np.abs(-1.0 / h).min())
    floor_rs = r_grid[r_grid <= N]
    floor_vals = np.array([cesaro_M_opnorm(r, N) for r in floor_rs])
    floor_ok = bool(floor_vals.size > 0 and np.all(floor_vals >= UNIFORM_FLOOR - 1e-12))
    return [
        Evidence("inverse_generator_norm", float(inv_norm), bound=float(N), ref="resolvent-pole criterion"),
        Evidence("min_eigenvalue_modulus", float(min_eig), ref="spectral accumulation at 0"),
        Evidence("opnorm_floor_holds_on_grid", floor_ok, bound=UNIFORM_FLOOR, ref="operator-norm floor"),
        Evidence(
            "opnorm_min_on_grid",
            float(floor_vals.min()) if floor_vals.size else float("nan"),
            bound=UNIFORM_FLOOR,
        ),
    ]


def mass_escape_profile(r_grid, N: int) -> CesaroCurve:
    """Means of the perturbed semigroup applied to e_1, tracked across r.

    The coordinate-sum functional stays within r/(2N) of 1 while every
    individual coordinate decays: the l1 mass survives but escapes to
    ever higher coordinates, so no strong limit can exist (any candidate
    would have to lie in the trivial generator kernel, forcing 0, yet the
    conserved functional forbids 0).
    """
    if N < 1:
        raise ValueError(f"truncation N must be >= 1, got {N}")
    curve = curve_cesaro_T(np.asarray(r_grid, dtype=float), basis_vector(1, N))
    degraded = [float(r) for r in curve.r_grid if r / (2.0 * N) > 0.1]
    if degraded:
        curve.caveats.append(
            "certificate degraded: r/(2N) exceeds 0.1 at r = "
            + ", ".join(f"{r:g}" for r in degraded)
        )
    return curve


@dataclass(frozen=True)
class ConvergenceVerdict:
    verdict: str  # "converges" | "diverges" | "inconclusive"
    witness: float | None = None
    threshold: float | None = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in _VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "diverges":
            if self.witness is None or self.threshold is None or self.witness < self.threshold:
                raise ValueError("diverges requires witness >= threshold")

    def to_json(self) -> str:
        return json.dumps(
            {
                "verdict": self.verdict,
                "witness": self.witness,
                "threshold": self.threshold,
                "detail": self.detail,
            },
            indent=2,
            sort_keys=True,
        )


def cauchy_convergence_test(
    curve: CesaroCurve,
    window: int,
    tol: float,
    floor: float = UNIFORM_FLOOR,
) -> ConvergenceVerdict:
    """Numerical stand-in for convergence of the means as r grows.

    converges: successive differences over the last ``window`` samples
    all fall below ``tol`` and the difference tail is dominated by a
    fitted power decay (or has already hit rounding level).
    diverges: a quantitative lower-bound witness exists: the curve stays
    at or above ``floor`` over the last window while failing the Cauchy
    test (norm mode), or the l1 norm holds the floor while the max
    coordinate decays (vector mode: mass escape).
    Anything else is inconclusive.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    n = len(curve)
    if n < 2 * window:
        raise ValueError(f"need at least {2 * window} samples, got {n}")

    if curve.kind == "norm":
        series = curve.values
        diffs = np.abs(np.diff(series))
    else:
        diffs = np.array(
            [
                float(np.abs(curve.vectors[i + 1].coords - curve.vectors[i].coords).sum())
                for i in range(n - 1)
            ]
        )
    tail_diffs = diffs[-window:]
    scale = float(np.abs(curve.norms()).max())
    cauchy_ok = bool(np.all(tail_diffs < tol))
    decay_ok = _power_decay_dominates(curve.r_grid[1:], diffs, scale)
    detail = {
        "max_tail_diff": float(tail_diffs.max()),
        "cauchy_ok": cauchy_ok,
        "power_decay_ok": decay_ok,
    }

    if cauchy_ok and decay_ok:
        return ConvergenceVerdict("converges", detail=detail)

    norms = curve.norms()
    window_min = float(norms[-window:].min())
    if curve.kind == "norm":
        if window_min >= floor - 1e-12:
            detail["norm_window_min"] = window_min
            return ConvergenceVerdict(
                "diverges", witness=window_min, threshold=floor - 1e-12, detail=detail
            )
    else:
        maxes = curve.max_coordinates()
        mass_escaping = maxes[-1] <= 0.5 * maxes[0]
        if window_min >= floor - 1e-12 and mass_escaping:
            detail["norm_window_min"] = window_min
            detail["max_coordinate_drop"] = float(maxes[-1] / maxes[0])
            return ConvergenceVerdict(
                "diverges", witness=window_min, threshold=floor - 1e-12, detail=detail
            )
    return ConvergenceVerdict("inconclusive", detail=detail)


def _power_decay_dominates(r_values: np.ndarray, diffs: np.ndarray, scale: float) -> bool:
    """True when the difference sequence sits under a fitted decaying power law."""
    rounding = 100.0 * np.finfo(float).eps * max(scale, 1.0)
    live = diffs > rounding
    if not np.any(live[-max(2, live.size // 2):]):
        return True  # differences already at rounding level: flat tail
    if np.sum(live) < 3:
        return True
    logs_r = np.log(r_values[live])
    logs_d = np.log(diffs[live])
    slope, intercept = np.polyfit(logs_r, logs_d, 1)
    if slope >= 0:
        return False
    fitted = intercept + slope * logs_r
    return bool(np.all(logs_d <= fitted + math.log(10.0)))
