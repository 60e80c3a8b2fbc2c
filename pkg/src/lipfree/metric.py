"""Finite metric spaces, their codes, and the metric transforms used by the reduction.

A *code* is any finite square matrix meant to hold pairwise distances; it is
only a metric once :func:`validate_code` reports no violations. Zero
off-diagonal entries are allowed in a code and removed by :func:`quotient_zero`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

from . import config

__all__ = [
    "Violation",
    "InvalidCodeError",
    "MetricCode",
    "FiniteMetricSpace",
    "PointedSpace",
    "validate_code",
    "zero_classes",
    "quotient_zero",
    "bound_transform",
    "snowflake",
    "diameter",
    "normalize_diameter_one",
    "psi_unbounded",
]


@dataclass(frozen=True)
class Violation:
    """One failed metric axiom.

    ``excess`` is the amount by which the condition fails, so larger is worse.
    For ``"triangle"`` the indices ``(i, j, k)`` mean ``d[i][k] > d[i][j] + d[j][k]``.
    """

    kind: str
    indices: tuple[int, ...]
    excess: float

    def __str__(self) -> str:
        idx = ",".join(str(i) for i in self.indices)
        return f"{self.kind} violation at ({idx}) by {self.excess:.3g}"

    def to_json(self) -> dict:
        return {"kind": self.kind, "indices": list(self.indices), "excess": self.excess}


class InvalidCodeError(ValueError):
    def __init__(self, violations: Sequence[Violation], what: str = "code"):
        self.violations = list(violations)
        head = "; ".join(str(v) for v in self.violations[:3])
        more = f" (+{len(self.violations) - 3} more)" if len(self.violations) > 3 else ""
        super().__init__(f"invalid {what}: {head}{more}")


def _is_exact(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


class MetricCode:
    """A square matrix of finite reals, not yet known to be a metric.

    If every entry is an ``int`` or a :class:`~fractions.Fraction` the exact
    values are kept alongside the float matrix (see :meth:`exact_matrix`).
    """

    __slots__ = ("_d", "_exact")

    def __init__(self, d, exact=None):
        if isinstance(d, MetricCode):
            exact = d._exact if exact is None else exact
            d = d._d
        rows = [list(r) for r in d] if not isinstance(d, np.ndarray) else None
        if exact is None and rows is not None and rows and all(_is_exact(x) for r in rows for x in r):
            exact = rows
        arr = np.array(d if rows is None else [[float(x) for x in r] for r in rows], dtype=float)
        if arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("distance matrix has non-finite entries")
        arr.flags.writeable = False
        self._d = arr
        self._exact = None
        if exact is not None:
            ex = tuple(tuple(Fraction(x) for x in r) for r in exact)
            if len(ex) != arr.shape[0] or any(len(r) != arr.shape[0] for r in ex):
                raise ValueError("exact matrix shape does not match")
            self._exact = ex

    @property
    def d(self) -> np.ndarray:
        return self._d

    @property
    def n(self) -> int:
        return self._d.shape[0]

    @property
    def is_exact(self) -> bool:
        return self._exact is not None

    def exact_matrix(self) -> tuple[tuple[Fraction, ...], ...]:
        """Distances as fractions; floats are converted without rounding."""
        if self._exact is not None:
            return self._exact
        return tuple(tuple(Fraction(float(x)) for x in r) for r in self._d)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n})"


class FiniteMetricSpace(MetricCode):
    """A validated finite metric space: a code with strictly positive off-diagonal entries.

    Raises :class:`InvalidCodeError` when the matrix is not a metric within ``tol``.
    """

    __slots__ = ("labels",)

    def __init__(self, d, labels: Sequence[str] | None = None, *, exact=None, tol=None):
        super().__init__(d, exact=exact)
        violations = validate_code(self, tol)
        n = self.n
        if n > 1:
            off = self._d[~np.eye(n, dtype=bool)].reshape(n, n - 1)
            for i, j in zip(*np.nonzero(off <= 0)):
                jj = int(j) + (1 if j >= i else 0)
                if i < jj:
                    violations.append(Violation("positivity", (int(i), jj), 0.0))
        if violations:
            raise InvalidCodeError(violations, "metric space")
        if labels is not None:
            labels = tuple(str(x) for x in labels)
            if len(labels) != n:
                raise ValueError("one label per point required")
        self.labels = labels

    @classmethod
    def from_code(cls, code: MetricCode, tol=None) -> "FiniteMetricSpace":
        return cls(code.d, exact=code._exact, tol=tol)

    def diameter(self) -> float:
        return diameter(self)

    def subspace(self, indices: Sequence[int]) -> "FiniteMetricSpace":
        idx = list(indices)
        ex = None
        if self._exact is not None:
            ex = [[self._exact[i][j] for j in idx] for i in idx]
        labels = None if self.labels is None else [self.labels[i] for i in idx]
        return FiniteMetricSpace(self._d[np.ix_(idx, idx)], labels, exact=ex)

    def permuted(self, perm: Sequence[int]) -> "FiniteMetricSpace":
        """The same space with point ``perm[i]`` renamed ``i``."""
        return self.subspace(perm)

    def scaled(self, lam: float) -> "FiniteMetricSpace":
        if lam <= 0:
            raise ValueError("scale must be positive")
        ex = None
        if self._exact is not None and _is_exact(lam):
            ex = [[lam * x for x in r] for r in self._exact]
        return FiniteMetricSpace(lam * self._d, self.labels, exact=ex)


@dataclass(frozen=True, eq=False)
class PointedSpace:
    space: FiniteMetricSpace
    basepoint: int = 0

    def __post_init__(self):
        if not 0 <= self.basepoint < self.space.n:
            raise ValueError(f"basepoint {self.basepoint} out of range for {self.space.n} points")

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def d(self) -> np.ndarray:
        return self.space.d


def _as_matrix(code) -> np.ndarray:
    if isinstance(code, MetricCode):
        return code.d
    return MetricCode(code).d


def validate_code(code, tol=None) -> list[Violation]:
    """Check nonnegativity, zero diagonal, symmetry and the triangle inequality.

    Returns every violation found, worst first; an empty list means the code
    is a (pseudo)metric within ``tol``.
    """
    tol = config.resolve(tol)
    D = _as_matrix(code)
    n = D.shape[0]
    out: list[Violation] = []
    for i, j in zip(*np.nonzero(D < -tol)):
        out.append(Violation("nonnegativity", (int(i), int(j)), float(-D[i, j])))
    diag = np.abs(np.diag(D))
    for i in np.nonzero(diag > tol)[0]:
        out.append(Violation("diagonal", (int(i),), float(diag[i])))
    asym = np.abs(D - D.T)
    for i, j in zip(*np.nonzero(np.triu(asym > tol, 1))):
        out.append(Violation("symmetry", (int(i), int(j)), float(asym[i, j])))
    symmetric = not np.any(asym > tol)
    for j in range(n):
        slack = D - (D[:, j][:, None] + D[j, :][None, :])
        slack[j, :] = -np.inf
        slack[:, j] = -np.inf
        np.fill_diagonal(slack, -np.inf)
        if symmetric:
            slack = np.triu(slack, 1) + np.tril(np.full_like(slack, -np.inf), 0)
        for i, k in zip(*np.nonzero(slack > tol)):
            out.append(Violation("triangle", (int(i), j, int(k)), float(slack[i, k])))
    out.sort(key=lambda v: (-v.excess, v.kind, v.indices))
    return out


def _require_valid(code, tol=None):
    violations = validate_code(code, tol)
    if violations:
        raise InvalidCodeError(violations)


def zero_classes(code, threshold: float = config.MERGE_THRESHOLD) -> list[int]:
    """Representative (smallest index) of each point's zero-distance class."""
    D = _as_matrix(code)
    _require_valid(code)
    n = D.shape[0]
    rep = list(range(n))
    for i in range(n):
        if rep[i] != i:
            continue
        for j in range(i + 1, n):
            if rep[j] == j and D[i, j] < threshold:
                rep[j] = i
    return rep


def quotient_zero(code, threshold: float = config.MERGE_THRESHOLD) -> FiniteMetricSpace:
    """Merge points at distance (numerically) zero, keeping the first of each class."""
    rep = zero_classes(code, threshold)
    keep = [i for i, r in enumerate(rep) if r == i]
    if isinstance(code, FiniteMetricSpace) and len(keep) == code.n:
        return code
    mc = code if isinstance(code, MetricCode) else MetricCode(code)
    ex = None
    if mc.is_exact:
        full = mc.exact_matrix()
        ex = [[full[i][j] for j in keep] for i in keep]
    labels = getattr(mc, "labels", None)
    if labels is not None:
        labels = [labels[i] for i in keep]
    return FiniteMetricSpace(mc.d[np.ix_(keep, keep)], labels, exact=ex)


def bound_transform(space: FiniteMetricSpace) -> FiniteMetricSpace:
    """Replace every distance ``t`` by ``t / (1 + t)``; the result has diameter < 1."""
    ex = None
    if space.is_exact:
        ex = [[t / (1 + t) for t in r] for r in space.exact_matrix()]
    return FiniteMetricSpace(space.d / (1.0 + space.d), space.labels, exact=ex)


def snowflake(space: FiniteMetricSpace, alpha: float = 0.5) -> FiniteMetricSpace:
    """Replace every distance ``t`` by ``t ** alpha`` for ``0 < alpha < 1``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"snowflake exponent must lie in (0, 1), got {alpha}")
    return FiniteMetricSpace(np.power(space.d, alpha), space.labels)


def diameter(space) -> float:
    D = _as_matrix(space)
    return float(D.max()) if D.size else 0.0


def _with_labels(space: FiniteMetricSpace, extra: Iterable[str]):
    if space.labels is None:
        return None
    return list(space.labels) + list(extra)


def normalize_diameter_one(space: FiniteMetricSpace) -> FiniteMetricSpace:
    """Adjoin two points ``u, v`` with ``d(u, v) = 1`` and distance 1/2 to everything else.

    The input must be nonempty with diameter < 1, so ``{u, v}`` is the only
    pair at distance 1 in the output and isometries must preserve it.
    """
    n = space.n
    if n == 0:
        raise ValueError("cannot normalize an empty space")
    if diameter(space) >= 1.0:
        raise ValueError("normalize_diameter_one needs diameter < 1; apply bound_transform first")
    D = np.full((n + 2, n + 2), 0.5)
    D[:n, :n] = space.d
    D[n, n + 1] = D[n + 1, n] = 1.0
    D[n, n] = D[n + 1, n + 1] = 0.0
    ex = None
    if space.is_exact:
        half = Fraction(1, 2)
        src = space.exact_matrix()
        ex = [list(r) + [half, half] for r in src]
        ex.append([half] * n + [Fraction(0), Fraction(1)])
        ex.append([half] * n + [Fraction(1), Fraction(0)])
    return FiniteMetricSpace(D, _with_labels(space, ["gadget_u", "gadget_v"]), exact=ex)


def psi_unbounded(space: FiniteMetricSpace, k: int) -> FiniteMetricSpace:
    """Adjoin a ray ``t_1 .. t_k`` with ``d(t_j, x) = j + 2`` and ``d(t_j, t_l) = |j - l|``.

    Isometries of the result preserve the original points (except in the
    symmetric 1-point, k=1 case), so the transform respects isometry. The
    diameter ``k + 2`` grows without bound in ``k``.
    """
    if k < 1 or int(k) != k:
        raise ValueError("ray length k must be a positive integer")
    k = int(k)
    if space.n == 0:
        raise ValueError("cannot extend an empty space")
    if diameter(space) > 1.0 + config.TOL:
        raise ValueError("psi_unbounded needs diameter <= 1")
    n = space.n
    D = np.zeros((n + k, n + k))
    D[:n, :n] = space.d
    j = np.arange(1, k + 1)
    D[:n, n:] = j + 2.0
    D[n:, :n] = (j + 2.0)[:, None]
    D[n:, n:] = np.abs(j[:, None] - j[None, :])
    ex = None
    if space.is_exact:
        src = space.exact_matrix()
        ex = [list(r) + [Fraction(int(t) + 2) for t in j] for r in src]
        for a in j:
            ex.append([Fraction(int(a) + 2)] * n + [Fraction(abs(int(a) - int(b))) for b in j])
    return FiniteMetricSpace(D, _with_labels(space, [f"ray_{t}" for t in j]), exact=ex)
