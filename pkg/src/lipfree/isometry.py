"""Exact isometry and dilatation search between finite metric spaces.

The search is a backtracking over partial maps. Candidate images are first
filtered by sorted distance rows (an isometry invariant of each point), and
at every node the unassigned point with the fewest consistent images is
extended next, ties going to the smallest index. Exploration order is fixed,
so results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import config
from .metric import FiniteMetricSpace, diameter

__all__ = [
    "IsometryWitness",
    "DilatationWitness",
    "SameDiameterReport",
    "find_isometry",
    "find_embedding",
    "find_dilatation",
    "same_diameter_dilatation_is_isometry_check",
    "distortion",
]


def distortion(X, Y, mapping: Sequence[int], lam: float = 1.0) -> float:
    """Largest ``|d_Y(s x, s x') - lam d_X(x, x')|`` over all pairs."""
    if len(mapping) == 0:
        return 0.0
    idx = np.asarray(mapping, dtype=int)
    return float(np.max(np.abs(Y.d[np.ix_(idx, idx)] - lam * X.d)))


@dataclass(frozen=True)
class IsometryWitness:
    """``mapping[i]`` is the image of point ``i``."""

    mapping: tuple[int, ...]

    def check(self, X, Y, tol=None) -> bool:
        tol = config.resolve(tol)
        return sorted(self.mapping) == list(range(Y.n)) and distortion(X, Y, self.mapping) <= tol


@dataclass(frozen=True)
class DilatationWitness:
    mapping: tuple[int, ...]
    lam: float

    def check(self, X, Y, tol=None) -> bool:
        tol = config.resolve(tol)
        return (
            self.lam > 0
            and sorted(self.mapping) == list(range(Y.n))
            and distortion(X, Y, self.mapping, self.lam) <= tol
        )


def _sorted_rows_match(DX, DY, tol):
    rx = np.sort(DX, axis=1)
    ry = np.sort(DY, axis=1)
    return np.all(np.abs(rx[:, None, :] - ry[None, :, :]) <= tol, axis=2)


def _backtrack(DX, DY, cand, tol, fixed):
    n = DX.shape[0]
    assign = -np.ones(n, dtype=int)
    used = np.zeros(DY.shape[0], dtype=bool)
    for x, y in fixed.items():
        assign[x] = y
        used[y] = True
    done = list(fixed)

    def options(x):
        ok = cand[x] & ~used
        if done:
            A = np.array(done)
            ok &= np.all(np.abs(DY[:, assign[A]] - DX[x, A]) <= tol, axis=1)
        return np.nonzero(ok)[0]

    def recurse():
        if len(done) == n:
            return True
        best_x, best_opts = None, None
        for x in range(n):
            if assign[x] >= 0:
                continue
            opts = options(x)
            if best_opts is None or len(opts) < len(best_opts):
                best_x, best_opts = x, opts
                if len(opts) == 0:
                    return False
        for y in best_opts:
            assign[best_x] = y
            used[y] = True
            done.append(best_x)
            if recurse():
                return True
            done.pop()
            used[y] = False
            assign[best_x] = -1
        return False

    return tuple(int(v) for v in assign) if recurse() else None


def _check_fixed(DX, DY, fixed, tol):
    items = list(fixed.items())
    if len({y for _, y in items}) != len(items):
        return False
    for a, (x, y) in enumerate(items):
        for x2, y2 in items[a + 1:]:
            if abs(DY[y, y2] - DX[x, x2]) > tol:
                return False
    return True


def find_isometry(
    X: FiniteMetricSpace,
    Y: FiniteMetricSpace,
    tol=None,
    fixed: Mapping[int, int] | None = None,
) -> IsometryWitness | None:
    """A distance-preserving bijection ``X -> Y`` if one exists, else ``None``.

    ``fixed`` pins some images in advance (e.g. basepoint to basepoint).
    """
    tol = config.resolve(tol)
    fixed = dict(fixed or {})
    if X.n != Y.n:
        return None
    n = X.n
    if n == 0:
        return IsometryWitness(())
    iu = np.triu_indices(n, 1)
    if np.any(np.abs(np.sort(X.d[iu]) - np.sort(Y.d[iu])) > tol):
        return None
    DX, DY = X.d, Y.d
    cand = _sorted_rows_match(DX, DY, tol)
    if any(not cand[x, y] for x, y in fixed.items()) or not _check_fixed(DX, DY, fixed, tol):
        return None
    mapping = _backtrack(DX, DY, cand, tol, fixed)
    if mapping is None:
        return None
    witness = IsometryWitness(mapping)
    if not witness.check(X, Y, tol):
        raise AssertionError("isometry search returned an invalid witness")
    return witness


def find_embedding(X: FiniteMetricSpace, Y: FiniteMetricSpace, tol=None) -> tuple[int, ...] | None:
    """An injective distance-preserving map ``X -> Y`` (``Y`` may be larger)."""
    tol = config.resolve(tol)
    if X.n > Y.n:
        return None
    if X.n == 0:
        return ()
    cand = np.ones((X.n, Y.n), dtype=bool)
    mapping = _backtrack(X.d, Y.d, cand, tol, {})
    if mapping is not None and distortion(X, Y, mapping) > tol:
        raise AssertionError("embedding search returned an invalid map")
    return mapping


def find_dilatation(X: FiniteMetricSpace, Y: FiniteMetricSpace, tol=None) -> DilatationWitness | None:
    """A bijection scaling every distance by one ``lam > 0``, if any.

    For spaces with at least two points the scale is forced to
    ``diam(Y) / diam(X)``; two singletons get ``lam = 1``.
    """
    tol = config.resolve(tol)
    if (X.n == 1) != (Y.n == 1):
        raise ValueError("no bijection between a singleton and a larger space")
    if X.n <= 1 and Y.n <= 1:
        if X.n != Y.n:
            return None
        return DilatationWitness(tuple(range(X.n)), 1.0)
    if X.n != Y.n:
        return None
    lam = diameter(Y) / diameter(X)
    w = find_isometry(X.scaled(lam), Y, tol)
    if w is None:
        return None
    witness = DilatationWitness(w.mapping, lam)
    if not witness.check(X, Y, tol):
        raise AssertionError("dilatation search returned an invalid witness")
    return witness


@dataclass(frozen=True)
class SameDiameterReport:
    found: bool
    lam: float | None
    lam_is_one: bool
    witness: DilatationWitness | None


def same_diameter_dilatation_is_isometry_check(X, Y, tol=None) -> SameDiameterReport:
    """Search for a dilatation between equal-diameter spaces and confirm ``lam = 1``."""
    tol = config.resolve(tol)
    dx, dy = diameter(X), diameter(Y)
    if dx <= 0 or abs(dx - dy) > tol:
        raise ValueError(f"spaces must share a positive diameter, got {dx} and {dy}")
    w = find_dilatation(X, Y, tol)
    if w is None:
        return SameDiameterReport(False, None, True, None)
    return SameDiameterReport(True, w.lam, abs(w.lam - 1.0) <= tol, w)
