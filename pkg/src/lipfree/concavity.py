"""Extreme points of the free-space unit ball and concavity of finite spaces.

The unit ball of the free space over a finite metric space is the convex hull
of the normalized elementary molecules ``+-(chi_p - chi_q) / d(p, q)``. A
space is *concave* when every such molecule is an extreme point of the ball.
When two concave spaces have isometric free spaces, the isometry maps
extreme points to extreme points, which forces the underlying spaces to be
dilatations of each other; :func:`free_space_isometry_test` runs that
argument in the other direction as a decision procedure.

Two LP tests for extremality are available:

``"coordinates"``
    For each coordinate ``x`` maximize ``z_x`` over molecules ``z`` with
    ``m + z`` and ``m - z`` in the ball. ``m`` is extreme exactly when every
    optimum is 0. The ball is encoded by transport representations, so each
    coordinate is one LP; by the symmetry ``z -> -z`` only maxima are needed.
``"representation"``
    ``m`` is extreme exactly when it is one of the generators and every
    representation of ``m`` as a convex combination of generators puts all
    weight on ``m`` itself, which one LP decides.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from . import config
from .free_space import Molecule, primal_norm
from .isometry import DilatationWitness, find_dilatation
from .metric import FiniteMetricSpace, PointedSpace

__all__ = [
    "ExtremeReport",
    "ConcavityReport",
    "NotConcaveError",
    "is_extreme",
    "is_concave",
    "free_space_isometry_test",
    "vertex_enumeration_extreme",
    "normalized_generator",
    "METHODS",
]

METHODS = ("coordinates", "representation")
_HIGHS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


class NotConcaveError(ValueError):
    def __init__(self, which: str, failing: list[tuple[int, int]]):
        super().__init__(f"{which} space is not concave; failing pairs {failing[:5]}")
        self.failing = failing


@dataclass(frozen=True, eq=False)
class ExtremeReport:
    """Outcome of an extremality test.

    ``margin`` is 0 for extreme points. For the coordinate method it is the
    largest coordinate of a feasible ``z``; for the representation method it
    is the weight a representation can move off ``m``. When ``m`` is not
    extreme, ``witness`` is a nonzero ``z`` with ``m + z`` and ``m - z`` in the
    unit ball and ``witness_norms`` are their norms.
    """

    molecule: Molecule
    is_extreme: bool
    margin: float
    method: str
    witness: Molecule | None = None
    witness_norms: tuple[float, float] | None = None

    def to_json(self) -> dict:
        out = {"molecule": self.molecule.to_json(), "extreme": self.is_extreme, "margin": self.margin, "method": self.method}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
            out["witness_norms"] = list(self.witness_norms)
        return out


def _space(s) -> FiniteMetricSpace:
    return s.space if isinstance(s, PointedSpace) else s


def _edges(n):
    I, J = np.nonzero(~np.eye(n, dtype=bool))
    return I, J


def _incidence(n, I, J):
    B = np.zeros((n, len(I)))
    cols = np.arange(len(I))
    B[I, cols] = 1.0
    B[J, cols] = -1.0
    return B


def _molecule(vec: np.ndarray, scale: float = 1e-13) -> Molecule:
    return Molecule({i: float(v) for i, v in enumerate(vec) if abs(v) > scale})


def normalized_generator(p: int, q: int, space) -> Molecule:
    """``(chi_p - chi_q) / d(p, q)``."""
    d = float(_space(space).d[p, q])
    return Molecule({p: 1.0 / d, q: -1.0 / d})


def _as_generator(m: np.ndarray, D: np.ndarray, tol: float):
    nz = np.nonzero(np.abs(m) > tol)[0]
    if len(nz) != 2:
        return None
    a, b = nz
    p, q = (a, b) if m[a] > 0 else (b, a)
    if abs(m[p] + m[q]) > tol or abs(m[p] * D[p, q] - 1.0) > tol:
        return None
    return int(p), int(q)


def _split_witness(m: np.ndarray, weights: np.ndarray, I, J, D):
    """Write ``m = alpha a + (1 - alpha) b`` with ``a`` a generator and return ``s (a - b)``."""
    e = int(np.argmax(weights))
    alpha = float(weights[e])
    a = np.zeros_like(m)
    a[I[e]] += 1.0 / D[I[e], J[e]]
    a[J[e]] -= 1.0 / D[I[e], J[e]]
    b = (m - alpha * a) / (1.0 - alpha)
    s = min(alpha, 1.0 - alpha)
    return s * (a - b)


def _coordinates(m, D, tol):
    n = len(m)
    I, J = _edges(n)
    E = len(I)
    B = _incidence(n, I, J)
    c = D[I, J]
    A_eq = np.hstack([B[: n - 1], B[: n - 1]])
    b_eq = 2.0 * m[: n - 1]
    A_ub = np.zeros((2, 2 * E))
    A_ub[0, :E] = c
    A_ub[1, E:] = c
    b_ub = np.ones(2)
    best, best_t = -np.inf, None
    for x in range(n - 1):
        obj = np.zeros(2 * E)
        obj[:E] = -B[x]
        res = linprog(obj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs", options=_HIGHS)
        if res.status != 0:
            raise RuntimeError(f"extremality LP failed: {res.message}")
        val = -res.fun - m[x]
        if val > best + 1e-15:
            best, best_t = val, res.x[:E]
    margin = max(best, 0.0)
    z = B @ best_t - m if margin > tol else None
    return margin, z


def _representation(m, space, tol):
    D = space.d
    n = len(m)
    I, J = _edges(n)
    gen = _as_generator(m, D, tol)
    c = D[I, J]
    B = _incidence(n, I, J)
    if gen is None:
        _, decomposition = primal_norm(_molecule(m), space)
        index = {(int(i), int(j)): k for k, (i, j) in enumerate(zip(I, J))}
        weights = np.zeros(len(I))
        for p, q, a in decomposition:
            weights[index[(p, q)]] += a * D[p, q]
        weights /= weights.sum()
        return 1.0 - float(weights.max()), _split_witness(m, weights, I, J, D)
    p, q = gen
    direct = int(np.nonzero((I == p) & (J == q))[0][0])
    obj = np.zeros(len(I))
    obj[direct] = 1.0
    res = linprog(
        obj,
        A_ub=c[None, :],
        b_ub=[1.0],
        A_eq=B[: n - 1],
        b_eq=m[: n - 1],
        bounds=(0, None),
        method="highs",
        options=_HIGHS,
    )
    if res.status != 0:
        raise RuntimeError(f"representation LP failed: {res.message}")
    alpha = float(res.x[direct] * D[p, q])
    margin = max(1.0 - alpha, 0.0)
    if margin <= tol:
        return margin, None
    rest = res.x * c
    rest[direct] = 0.0
    return margin, _split_witness(m, rest / rest.sum(), I, J, D)


def is_extreme(m: Molecule, pointed, tol=None, method: str = "coordinates") -> ExtremeReport:
    """Decide whether the unit-norm molecule ``m`` is an extreme point of the unit ball.

    Parameters
    ----------
    m : Molecule
        Must have norm 1 within ``tol``; it is rescaled to norm exactly 1.
    pointed : PointedSpace or FiniteMetricSpace
    method : {"coordinates", "representation"}
    """
    tol = config.resolve(tol)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    space = _space(pointed)
    nm = float(primal_norm(m, space)[0])
    if abs(nm - 1.0) > tol:
        raise ValueError(f"molecule must have norm 1, got {nm}")
    vec = m.dense(space.n) / nm
    D = space.d
    if method == "coordinates":
        margin, z = _coordinates(vec, D, tol)
    else:
        margin, z = _representation(vec, space, tol)
    if z is None:
        return ExtremeReport(m, True, margin, method)
    zm = _molecule(z)
    norms = (float(primal_norm(m + zm, space)[0]), float(primal_norm(m - zm, space)[0]))
    if max(norms) > 1.0 + 1e-7 or not zm:
        raise RuntimeError(f"extremality witness is invalid, norms {norms}")
    return ExtremeReport(m, False, margin, method, zm, norms)


@dataclass(frozen=True, eq=False)
class ConcavityReport:
    concave: bool
    failing_pairs: tuple[tuple[int, int], ...]
    margins: dict = field(default_factory=dict)
    method: str = "coordinates"

    def to_json(self) -> dict:
        return {
            "concave": self.concave,
            "failing_pairs": [list(p) for p in self.failing_pairs],
            "max_margin": max(self.margins.values(), default=0.0),
            "method": self.method,
        }


@lru_cache(maxsize=4096)
def _concavity_cached(raw: bytes, n: int, tol: float, method: str) -> ConcavityReport:
    space = FiniteMetricSpace(np.frombuffer(raw, dtype=float).reshape(n, n))
    failing, margins = [], {}
    for p, q in combinations(range(n), 2):
        rep = is_extreme(normalized_generator(p, q, space), space, tol, method)
        margins[(p, q)] = rep.margin
        if not rep.is_extreme:
            failing.append((p, q))
    return ConcavityReport(not failing, tuple(failing), margins, method)


def is_concave(space, basepoint: int = 0, tol=None, method: str = "coordinates") -> ConcavityReport:
    """Test every normalized elementary molecule for extremality.

    The unit ball does not depend on the basepoint, which is accepted only
    for interface symmetry. Results are cached by distance matrix.
    """
    tol = config.resolve(tol)
    space = _space(space)
    if not 0 <= basepoint < max(space.n, 1):
        raise ValueError("basepoint out of range")
    D = np.ascontiguousarray(space.d, dtype=float)
    return _concavity_cached(D.tobytes(), space.n, float(tol), method)


def free_space_isometry_test(X, Y, tol=None, method: str = "representation") -> DilatationWitness | None:
    """For concave spaces, decide whether the free spaces are isometric.

    Returns the dilatation between the base spaces (which induces a linear
    isometry of the free spaces) or ``None``.

    Raises
    ------
    NotConcaveError
        If either space is not concave, where the test says nothing.
    """
    X, Y = _space(X), _space(Y)
    for name, S in (("first", X), ("second", Y)):
        rep = is_concave(S, tol=tol, method=method)
        if not rep.concave:
            raise NotConcaveError(name, list(rep.failing_pairs))
    if (X.n == 1) != (Y.n == 1):
        return None
    return find_dilatation(X, Y, tol)


# exact vertex enumeration, used as an independent oracle on tiny spaces

def _nullspace(rows: list[list[Fraction]], k: int) -> list[list[Fraction]]:
    A = [list(r) for r in rows]
    pivots = []
    r = 0
    for col in range(k):
        piv = next((i for i in range(r, len(A)) if A[i][col] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        pv = A[r][col]
        A[r] = [v / pv for v in A[r]]
        for i in range(len(A)):
            if i != r and A[i][col] != 0:
                f = A[i][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(col)
        r += 1
        if r == len(A):
            break
    free = [c for c in range(k) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * k
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -A[i][fc]
        basis.append(v)
    return basis


def _rank(rows: list[list[Fraction]], k: int) -> int:
    return k - len(_nullspace(rows, k)) if rows else 0


def vertex_enumeration_extreme(m: Molecule, space, tol=None) -> bool:
    """Decide extremality by enumerating the facets of the unit ball exactly.

    Works in coordinates ``x_0 .. x_{n-2}`` (the last coordinate is minus their
    sum) with exact rational distances. Exponential; meant for ``n <= 4``.
    """
    tol = config.resolve(tol)
    space = _space(space)
    n = space.n
    if n < 2:
        raise ValueError("the unit ball of a one-point space is {0}")
    D = [[Fraction(v) for v in row] for row in space.d.tolist()] if not space.is_exact else space.exact_matrix()
    k = n - 1
    gens = []
    for p in range(n):
        for q in range(n):
            if p != q:
                g = [Fraction(0)] * k
                if p < k:
                    g[p] += 1 / D[p][q]
                if q < k:
                    g[q] -= 1 / D[p][q]
                gens.append(g)
    facets = []
    for combo in combinations(range(len(gens)), k):
        base = gens[combo[0]]
        rows = [[a - b for a, b in zip(gens[i], base)] for i in combo[1:]]
        ns = _nullspace(rows, k)
        if len(ns) != 1:
            continue
        a = ns[0]
        b = sum(x * y for x, y in zip(a, base))
        vals = [sum(x * y for x, y in zip(a, g)) for g in gens]
        if all(v <= b for v in vals):
            facets.append((a, b))
        elif all(v >= b for v in vals):
            facets.append(([-x for x in a], -b))
    target = m.dense(n)[:k]
    for g in gens:
        if np.max(np.abs(np.array([float(x) for x in g]) - target)) > tol:
            continue
        tight = [a for a, b in facets if sum(x * y for x, y in zip(a, g)) == b]
        if _rank(tight, k) == k:
            return True
    return False
