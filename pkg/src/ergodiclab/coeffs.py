"""Exponential-gap coefficient family and its exact sum and integral identities.

The family b(n, t) = exp(-t/n) - exp(-t/(n-1)) (with b(1, t) = exp(-t))
drives every off-diagonal operator in this package.  Its partial sums
telescope to differences of exponentials, its infinite tails are
1 - exp(-t/m), and its time antiderivatives are available in closed form;
those three identities are what make rigorous truncation certificates
possible at all.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["b", "partial_sum_b", "tail_sum_b", "integral_b", "b_row", "integral_b_row"]


def b(n: int, t: float) -> float:
    """Coefficient b(n, t): exp(-t) for n=1, exp(-t/n) - exp(-t/(n-1)) for n>=2.

    Always nonnegative.  For n >= 2 the difference is evaluated as
    exp(-t/n) * (1 - exp(-t/(n(n-1)))) to avoid cancellation between two
    nearly equal exponentials when t/n is small.
    """
    if n < 1:
        raise ValueError(f"index n must be >= 1, got {n}")
    if t < 0:
        raise ValueError(f"time t must be >= 0, got {t}")
    if n == 1:
        return math.exp(-t)
    return math.exp(-t / n) * -math.expm1(-t / (n * (n - 1)))


def partial_sum_b(m: int, n: int, t: float) -> float:
    """Sum of b(h, t) for h = m+1 .. n, in closed form exp(-t/n) - exp(-t/m).

    m = 0 addresses the full leading sum h = 1..n and is handled by the
    limit convention exp(-t/0) := 0 for t > 0 and 1 for t = 0.
    """
    if m < 0:
        raise ValueError(f"lower index m must be >= 0, got {m}")
    if m >= n:
        raise ValueError(f"need m < n, got m={m}, n={n}")
    if t < 0:
        raise ValueError(f"time t must be >= 0, got {t}")
    if m == 0:
        lower = 1.0 if t == 0 else 0.0
    else:
        lower = math.exp(-t / m)
    return math.exp(-t / n) - lower


def tail_sum_b(m: int, t: float) -> float:
    """Infinite tail sum of b(h, t) over h > m: exactly 1 - exp(-t/m).

    This is the master truncation-error quantity: the l1 mass of the
    coefficient family past index m.  Bounded above by t/m.
    """
    if m < 1:
        raise ValueError(f"index m must be >= 1, got {m}")
    if t < 0:
        raise ValueError(f"time t must be >= 0, got {t}")
    return -math.expm1(-t / m)


def integral_b(h: int, r: float) -> float:
    """Time integral of b(h, s) over s in [0, r], in closed form.

    Equals 1 - exp(-r) for h = 1 and
    h*(1 - exp(-r/h)) - (h-1)*(1 - exp(-r/(h-1))) for h >= 2.
    """
    if h < 1:
        raise ValueError(f"index h must be >= 1, got {h}")
    if r < 0:
        raise ValueError(f"upper limit r must be >= 0, got {r}")
    if h == 1:
        return -math.expm1(-r)
    return (h - 1) * math.expm1(-r / (h - 1)) - h * math.expm1(-r / h)


def b_row(t: float, n_max: int) -> np.ndarray:
    """Vectorized b(n, t) for n = 1..n_max (0-based entry n-1)."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if t < 0:
        raise ValueError(f"time t must be >= 0, got {t}")
    out = np.empty(n_max)
    out[0] = math.exp(-t)
    if n_max > 1:
        n = np.arange(2, n_max + 1, dtype=float)
        out[1:] = np.exp(-t / n) * -np.expm1(-t / (n * (n - 1)))
    return out


def integral_b_row(r: float, n_max: int) -> np.ndarray:
    """Vectorized integral_b(h, r) for h = 1..n_max."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if r < 0:
        raise ValueError(f"upper limit r must be >= 0, got {r}")
    out = np.empty(n_max)
    out[0] = -math.expm1(-r)
    if n_max > 1:
        h = np.arange(2, n_max + 1, dtype=float)
        out[1:] = (h - 1) * np.expm1(-r / (h - 1)) - h * np.expm1(-r / h)
    return out
