"""A small dense simplex method over exact rationals.

Only the form needed here is supported: maximise ``c @ x`` subject to
``A @ x <= b`` and ``x >= 0`` with ``b >= 0``, so the slack basis is an
initial feasible vertex and no phase one is needed.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

__all__ = ["UnboundedError", "simplex_max"]


class UnboundedError(ArithmeticError):
    pass


def simplex_max(c: Sequence, A: Sequence[Sequence], b: Sequence, max_iter: int = 50_000):
    """Return ``(value, x)`` maximising ``c @ x`` with Bland's anti-cycling rule."""
    m, n = len(A), len(c)
    if any(Fraction(v) < 0 for v in b):
        raise ValueError("right-hand side must be nonnegative")
    # tableau rows: [A | I | b]; basis holds column indices
    T = [[Fraction(v) for v in A[r]] + [Fraction(int(r == k)) for k in range(m)] + [Fraction(b[r])] for r in range(m)]
    z = [-Fraction(v) for v in c] + [Fraction(0)] * (m + 1)
    basis = list(range(n, n + m))
    for _ in range(max_iter):
        col = next((j for j in range(n + m) if z[j] < 0), None)
        if col is None:
            break
        best = None
        for r in range(m):
            a = T[r][col]
            if a > 0:
                ratio = T[r][-1] / a
                key = (ratio, basis[r])
                if best is None or key < best[0]:
                    best = (key, r)
        if best is None:
            raise UnboundedError("objective is unbounded")
        row = best[1]
        piv = T[row][col]
        T[row] = [v / piv for v in T[row]]
        for r in range(m):
            if r != row and T[r][col] != 0:
                f = T[r][col]
                T[r] = [v - f * w for v, w in zip(T[r], T[row])]
        if z[col] != 0:
            f = z[col]
            z = [v - f * w for v, w in zip(z, T[row])]
        basis[row] = col
    else:
        raise RuntimeError("simplex did not terminate")
    x = [Fraction(0)] * n
    for r, j in enumerate(basis):
        if j < n:
            x[j] = T[r][-1]
    return z[-1], x
