"""Seeded random instances: spaces, codes and molecules."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .free_space import Molecule
from .metric import FiniteMetricSpace

__all__ = [
    "rational_space",
    "graph_space",
    "random_space",
    "collinear_space",
    "random_molecule",
    "integer_code",
    "duplicate_points",
]


def rational_space(rng: np.random.Generator, n: int) -> FiniteMetricSpace:
    """Exact distances ``a / q`` with ``q <= a <= 2q``; any such matrix is a metric."""
    q = int(rng.integers(1, 7))
    A = rng.integers(q, 2 * q + 1, size=(n, n))
    A = np.triu(A, 1)
    A = A + A.T
    exact = [[Fraction(int(A[i, j]), q) for j in range(n)] for i in range(n)]
    return FiniteMetricSpace(A / q, exact=exact)


def graph_space(rng: np.random.Generator, n: int) -> FiniteMetricSpace:
    """Shortest-path metric of a complete graph with integer weights 1..3.

    Shortest paths usually leave some triangle equalities behind.
    """
    W = rng.integers(1, 4, size=(n, n)).astype(float)
    W = np.triu(W, 1)
    W = W + W.T
    D = shortest_path(W, directed=False)
    return FiniteMetricSpace(D, exact=[[Fraction(int(round(v))) for v in row] for row in D])


def random_space(rng: np.random.Generator, n: int) -> FiniteMetricSpace:
    return rational_space(rng, n) if rng.random() < 0.5 else graph_space(rng, n)


def collinear_space(rng: np.random.Generator, n: int) -> tuple[FiniteMetricSpace, tuple[int, int]]:
    """Random points in the plane with the l1 metric, three of them on a line.

    Returns the space and the outer pair ``(p, r)`` of the collinear triple,
    for which ``d(p, r) = d(p, q) + d(q, r)``.
    """
    if n < 3:
        raise ValueError("need at least three points")
    a, b = rng.integers(1, 5, size=2)
    pts = [(0, 0), (int(a), 0), (int(a + b), 0)]
    while len(pts) < n:
        p = tuple(int(v) for v in rng.integers(-4, 9, size=2))
        if p not in pts:
            pts.append(p)
    perm = rng.permutation(n)
    P = np.array(pts)[perm]
    D = np.abs(P[:, None, :] - P[None, :, :]).sum(axis=2)
    inv = np.argsort(perm)
    p, r = sorted((int(inv[0]), int(inv[2])))
    return FiniteMetricSpace(D, exact=[[Fraction(int(v)) for v in row] for row in D]), (p, r)


def random_molecule(rng: np.random.Generator, n: int, exact: bool = True, support: int | None = None) -> Molecule:
    """Integer (or scaled float) coefficients on a random support of size at least two."""
    k = support if support is not None else int(rng.integers(2, n + 1))
    pts = sorted(int(x) for x in rng.choice(n, size=k, replace=False))
    coeffs = [int(c) for c in rng.choice([-5, -4, -3, -2, -1, 1, 2, 3, 4, 5], size=k - 1)]
    last = -sum(coeffs)
    if last == 0:
        coeffs[0] += 1
        last = -sum(coeffs)
        if coeffs[0] == 0:
            coeffs[0], last = 1, last - 1
    coeffs.append(last)
    if exact:
        return Molecule({p: Fraction(c) for p, c in zip(pts, coeffs)})
    scale = float(rng.uniform(0.1, 3.0))
    return Molecule({p: c * scale for p, c in zip(pts, coeffs)})


def integer_code(rng: np.random.Generator, n: int, low: int = 8, high: int = 12) -> np.ndarray:
    """Symmetric integer matrix with off-diagonal entries in ``[low, high]``.

    With ``high <= 2 * (low - 2)`` any single entry may move by 2 and the
    matrix stays a metric.
    """
    A = rng.integers(low, high + 1, size=(n, n))
    A = np.triu(A, 1)
    return (A + A.T).astype(float)


def duplicate_points(rng: np.random.Generator, D: np.ndarray, extra: int) -> np.ndarray:
    """Append ``extra`` copies of random points (distance zero to their original)."""
    idx = list(range(D.shape[0])) + [int(rng.integers(D.shape[0])) for _ in range(extra)]
    return D[np.ix_(idx, idx)]
