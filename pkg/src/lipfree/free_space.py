"""Molecules and the Lipschitz-free (Arens-Eells) norm over a finite metric space.

The norm of a molecule ``m`` is computed two independent ways:

* :func:`primal_norm` solves the transportation problem that moves the
  positive part of ``m`` onto its negative part, which is the cheapest
  decomposition ``m = sum a_i (chi_p_i - chi_q_i)``;
* :func:`dual_norm` maximises the pairing ``sum f(x) m(x)`` over 1-Lipschitz
  functions vanishing at the basepoint.

:func:`norm_certificate` runs both and insists the values agree.
"""

from __future__ import annotations

import warnings
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from . import config
from .exact_lp import simplex_max
from .metric import FiniteMetricSpace, PointedSpace
from .transport import exhaustive_transport, transport_simplex

__all__ = [
    "Molecule",
    "LipschitzFunction",
    "NormCertificate",
    "CertificationError",
    "DegenerateMoleculeWarning",
    "elementary_molecule",
    "combine",
    "lipschitz_constant",
    "mcshane_extend",
    "pairing",
    "primal_norm",
    "transport_oracle_norm",
    "dual_norm",
    "norm",
    "norm_certificate",
    "support_restricted_norm",
    "canonical_embed",
    "holmes_norm",
    "separation_lower_bound",
]

_HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


class DegenerateMoleculeWarning(UserWarning):
    pass


class CertificationError(ArithmeticError):
    """The primal and dual solvers disagree by more than the tolerance."""

    def __init__(self, message: str, certificate: "NormCertificate"):
        super().__init__(message)
        self.certificate = certificate


def _exact(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


class Molecule(Mapping):
    """A finitely supported function on point indices whose values sum to zero.

    Behaves as a read-only mapping ``index -> coefficient``; zero coefficients
    are never stored. Coefficients may be floats or fractions.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[int, float] | Iterable[tuple[int, float]] = ()):
        items = dict(entries)
        clean = {}
        for k, v in items.items():
            k = int(k)
            if k < 0:
                raise ValueError("point indices must be nonnegative")
            if not _exact(v):
                v = float(v)
                if not np.isfinite(v):
                    raise ValueError("molecule coefficients must be finite")
            if v != 0:
                clean[k] = v
        total = sum(clean.values())
        if all(_exact(v) for v in clean.values()):
            ok = total == 0
        else:
            scale = max(1.0, sum(abs(float(v)) for v in clean.values()))
            ok = abs(float(total)) <= config.MOLECULE_SUM_TOL * scale
        if not ok:
            raise ValueError(f"molecule coefficients sum to {total}, not 0")
        self._entries = dict(sorted(clean.items()))

    def __getitem__(self, k):
        return self._entries[k]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def get(self, k, default=0):
        return self._entries.get(k, default)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(self._entries)

    @property
    def is_exact(self) -> bool:
        return all(_exact(v) for v in self._entries.values())

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for k, v in self._entries.items():
            out[k] = float(v)
        return out

    def exact(self) -> "Molecule":
        """Fraction coefficients; float rounding residue is folded into the last entry."""
        ex = {k: Fraction(v) for k, v in self._entries.items()}
        if ex:
            last = max(ex)
            ex[last] -= sum(ex.values())
        return Molecule(ex)

    def relabel(self, mapping: Mapping[int, int] | Sequence[int]) -> "Molecule":
        return Molecule({mapping[k]: v for k, v in self._entries.items()})

    def __add__(self, other):
        if not isinstance(other, Molecule):
            return NotImplemented
        return combine([(1, self), (1, other)])

    def __sub__(self, other):
        if not isinstance(other, Molecule):
            return NotImplemented
        return combine([(1, self), (-1, other)])

    def __neg__(self):
        return Molecule({k: -v for k, v in self._entries.items()})

    def __mul__(self, c):
        return Molecule({k: c * v for k, v in self._entries.items()})

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Molecule({k: v / c for k, v in self._entries.items()})

    def __repr__(self):
        body = ", ".join(f"{k}: {v}" for k, v in self._entries.items())
        return f"Molecule({{{body}}})"

    def to_json(self) -> dict:
        return {str(k): (str(v) if isinstance(v, Fraction) else v) for k, v in self._entries.items()}


def elementary_molecule(p: int, q: int) -> Molecule:
    """``chi_p - chi_q``. Equal points give the zero molecule with a warning."""
    if p == q:
        warnings.warn(f"m_pq with p = q = {p} is the zero molecule", DegenerateMoleculeWarning, stacklevel=2)
        return Molecule()
    return Molecule({p: 1, q: -1})


def combine(terms: Iterable[tuple[float, Molecule]]) -> Molecule:
    acc: dict[int, float] = {}
    for c, m in terms:
        for k, v in m.items():
            acc[k] = acc.get(k, 0) + c * v
    return Molecule(acc)


@dataclass(frozen=True, eq=False)
class LipschitzFunction:
    """Real values on every point of a finite space, optionally pinned to 0 at a basepoint."""

    values: tuple
    basepoint: int | None = None

    def __post_init__(self):
        vals = tuple(v if _exact(v) else float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if self.basepoint is not None and vals[self.basepoint] != 0:
            raise ValueError("a pointed Lipschitz function must vanish at its basepoint")

    def __getitem__(self, x):
        return self.values[x]

    def __len__(self):
        return len(self.values)

    @property
    def array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])


@dataclass(frozen=True, eq=False)
class NormCertificate:
    """Matching primal decomposition and dual witness for one molecule.

    ``value`` is the primal value (the achieved decomposition cost).
    """

    molecule: Molecule
    value: float
    primal_value: float
    dual_value: float
    primal: tuple[tuple[int, int, float], ...]
    dual_witness: LipschitzFunction
    gap: float
    witness_lipschitz: float
    recombination_error: float
    tol: float
    exact: bool = False
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.notes

    def to_json(self) -> dict:
        return {
            "value": float(self.value),
            "primal_value": float(self.primal_value),
            "dual_value": float(self.dual_value),
            "gap": float(self.gap),
            "primal": [[p, q, float(a)] for p, q, a in self.primal],
            "dual_witness": [float(v) for v in self.dual_witness.values],
            "witness_lipschitz": float(self.witness_lipschitz),
            "recombination_error": float(self.recombination_error),
            "tol": self.tol,
            "exact": self.exact,
            "certified": self.ok,
            "notes": list(self.notes),
        }


def _check_support(m: Molecule, n: int):
    if m and max(m.support) >= n:
        raise ValueError(f"molecule support {m.support} exceeds the {n}-point space")


def lipschitz_constant(f: LipschitzFunction | Sequence[float], space: FiniteMetricSpace) -> float:
    """Smallest ``k`` with ``|f(x) - f(y)| <= k d(x, y)``; 0 for constant ``f`` and 1-point spaces."""
    vals = f.array if isinstance(f, LipschitzFunction) else np.asarray(f, dtype=float)
    n = space.n
    if len(vals) != n:
        raise ValueError("function must be defined on every point")
    if n < 2:
        return 0.0
    iu = np.triu_indices(n, 1)
    return float(np.max(np.abs(vals[iu[0]] - vals[iu[1]]) / space.d[iu]))


def mcshane_extend(
    partial: Mapping[int, float],
    space: FiniteMetricSpace,
    tol=None,
    basepoint: int | None = None,
) -> LipschitzFunction:
    """Extend a 1-Lipschitz function on a subset by ``g(x) = min_s f(s) + d(x, s)``.

    Raises ``ValueError`` if ``partial`` is empty or is not 1-Lipschitz within ``tol``.
    """
    tol = config.resolve(tol)
    if not partial:
        raise ValueError("nothing to extend")
    S = np.array(sorted(partial), dtype=int)
    fS = np.array([float(partial[s]) for s in S])
    D = space.d
    sub = D[np.ix_(S, S)]
    diff = np.abs(fS[:, None] - fS[None, :]) - sub
    if np.any(diff > tol):
        i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
        raise ValueError(f"partial function is not 1-Lipschitz at points ({S[i]}, {S[j]})")
    g = np.min(fS[None, :] + D[:, S], axis=1)
    g[S] = fS
    if basepoint is not None:
        if basepoint not in partial or partial[basepoint] != 0:
            raise ValueError("basepoint must be in the subset with value 0")
    return LipschitzFunction(tuple(g), basepoint)


def pairing(f: LipschitzFunction | Sequence[float], m: Molecule):
    """``sum_x f(x) m(x)``; exact when both sides are exact."""
    vals = f.values if isinstance(f, LipschitzFunction) else f
    return sum(vals[k] * v for k, v in m.items()) if m else 0


def _transport_data(m: Molecule, D, exact: bool):
    pos = [(k, v) for k, v in m.items() if v > 0]
    neg = [(k, -v) for k, v in m.items() if v < 0]
    if exact:
        supply = [Fraction(v) for _, v in pos]
        demand = [Fraction(v) for _, v in neg]
    else:
        supply = [float(v) for _, v in pos]
        demand = [float(v) for _, v in neg]
    cost = [[D[p][q] for q, _ in neg] for p, _ in pos]
    return pos, neg, supply, demand, cost


def _distances(space: FiniteMetricSpace, exact: bool):
    return space.exact_matrix() if exact else space.d.tolist()


def primal_norm(m: Molecule, space: FiniteMetricSpace, exact: bool = False):
    """Cheapest decomposition of ``m`` into elementary molecules.

    Returns ``(value, decomposition)`` where the decomposition is a list of
    ``(p, q, a)`` with ``a > 0`` and ``m = sum a (chi_p - chi_q)``. With
    ``exact=True`` the computation is carried out in fractions.
    """
    _check_support(m, space.n)
    if not m:
        return (Fraction(0) if exact else 0.0), []
    if exact:
        m = m.exact()
    pos, neg, supply, demand, cost = _transport_data(m, _distances(space, exact), exact)
    scale = max(1.0, max(float(max(r)) for r in cost) * float(sum(supply)))
    eps = 0 if exact else 1e-13 * scale
    value, plan = transport_simplex(supply, demand, cost, eps=eps)
    decomposition = [(pos[i][0], neg[j][0], x) for (i, j), x in sorted(plan.items())]
    return value, decomposition


def transport_oracle_norm(m: Molecule, space: FiniteMetricSpace, exact: bool = True):
    """Norm by enumerating every basic transport plan; only for tiny supports."""
    _check_support(m, space.n)
    if not m:
        return Fraction(0) if exact else 0.0
    if exact:
        m = m.exact()
    _, _, supply, demand, cost = _transport_data(m, _distances(space, exact), exact)
    value, _ = exhaustive_transport(supply, demand, cost)
    return value


def _dual_lp_float(coeffs: np.ndarray, D: np.ndarray, base: int) -> np.ndarray:
    """Maximise ``coeffs @ f`` over 1-Lipschitz ``f`` with ``f[base] = 0``."""
    n = D.shape[0]
    if n == 1:
        return np.zeros(1)
    I, J = np.nonzero(~np.eye(n, dtype=bool))
    A = np.zeros((len(I), n))
    A[np.arange(len(I)), I] = 1.0
    A[np.arange(len(I)), J] = -1.0
    bounds = [(None, None)] * n
    bounds[base] = (0.0, 0.0)
    res = linprog(-coeffs, A_ub=A, b_ub=D[I, J], bounds=bounds, method="highs", options=_HIGHS_OPTIONS)
    if res.status != 0:
        raise RuntimeError(f"dual linear program failed: {res.message}")
    f = np.asarray(res.x, dtype=float)
    f[base] = 0.0
    return f


def _dual_lp_exact(coeffs: Sequence[Fraction], D, base: int) -> list[Fraction]:
    n = len(D)
    free = [x for x in range(n) if x != base]
    if not free:
        return [Fraction(0)] * n
    col = {x: i for i, x in enumerate(free)}
    k = len(free)
    rows, rhs = [], []
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            row = [Fraction(0)] * (2 * k)
            if x in col:
                row[col[x]] += 1
                row[k + col[x]] -= 1
            if y in col:
                row[col[y]] -= 1
                row[k + col[y]] += 1
            rows.append(row)
            rhs.append(D[x][y])
    c = [coeffs[x] for x in free] + [-coeffs[x] for x in free]
    _, sol = simplex_max(c, rows, rhs)
    f = [Fraction(0)] * n
    for x in free:
        f[x] = sol[col[x]] - sol[k + col[x]]
    return f


def dual_norm(m: Molecule, pointed: PointedSpace, exact: bool = False):
    """Maximise ``sum f(x) m(x)`` over 1-Lipschitz ``f`` with ``f(e) = 0``.

    Returns ``(value, witness)``. Witness rule: the optimal values on
    ``support(m) | {e}`` as returned by the LP solver (HiGHS, or the exact
    simplex with Bland's rule), extended to the other points by
    :func:`mcshane_extend`. The zero molecule gets the zero witness.
    """
    space, e = pointed.space, pointed.basepoint
    n = space.n
    _check_support(m, n)
    if not m:
        zero = Fraction(0) if exact else 0.0
        return zero, LipschitzFunction((zero,) * n, e)
    keep = sorted(set(m.support) | {e})
    if exact:
        m = m.exact()
        f = _dual_lp_exact([m.get(x, Fraction(0)) for x in range(n)], space.exact_matrix(), e)
        partial = {x: f[x] for x in keep}
        ex = space.exact_matrix()
        vals = [min(partial[s] + ex[x][s] for s in keep) if x not in partial else partial[x] for x in range(n)]
        witness = LipschitzFunction(tuple(vals), e)
    else:
        f = _dual_lp_float(m.dense(n), space.d, e)
        partial = {x: f[x] for x in keep}
        g = np.min(np.array([partial[s] for s in keep])[None, :] + space.d[:, keep], axis=1)
        for x in keep:
            g[x] = partial[x]
        witness = LipschitzFunction(tuple(g), e)
    return pairing(witness, m), witness


def norm(m: Molecule, space: FiniteMetricSpace | PointedSpace, exact: bool = False):
    """The free-space norm of ``m`` (primal value)."""
    if isinstance(space, PointedSpace):
        space = space.space
    return primal_norm(m, space, exact)[0]


def norm_certificate(m: Molecule, pointed: PointedSpace, tol=None, exact: bool = False) -> NormCertificate:
    """Run both solvers and certify that their values agree within ``tol``.

    Raises :class:`CertificationError` (carrying the failed certificate) if the
    duality gap, the witness Lipschitz constant or the recombined
    decomposition is off by more than ``tol``. In exact mode all three must
    hold exactly.
    """
    tol = config.resolve(tol)
    space = pointed.space
    pv, decomposition = primal_norm(m, space, exact)
    dv, witness = dual_norm(m, pointed, exact)
    gap = abs(pv - dv)
    lip = lipschitz_constant(witness, space)
    recombined = combine((a, Molecule({p: 1, q: -1})) for p, q, a in decomposition)
    keys = set(recombined) | set(m)
    rec_err = max((abs(float(recombined.get(k, 0)) - float(m.get(k, 0))) for k in keys), default=0.0)
    cost = sum(a * _distances(space, exact)[p][q] for p, q, a in decomposition)
    notes = []
    limit = 0 if exact else tol
    if gap > limit:
        notes.append(f"duality gap {float(gap):.3g} exceeds {limit:g}")
    if lip > 1 + (tol if not exact else 1e-12):
        notes.append(f"dual witness has Lipschitz constant {lip:.12g}")
    if rec_err > tol:
        notes.append(f"decomposition misses the molecule by {rec_err:.3g}")
    if abs(float(cost) - float(pv)) > tol:
        notes.append("decomposition cost differs from the primal value")
    cert = NormCertificate(
        molecule=m,
        value=pv,
        primal_value=pv,
        dual_value=dv,
        primal=tuple(decomposition),
        dual_witness=witness,
        gap=gap,
        witness_lipschitz=lip,
        recombination_error=rec_err,
        tol=tol,
        exact=exact,
        notes=tuple(notes),
    )
    if notes:
        raise CertificationError("; ".join(notes), cert)
    return cert


def support_restricted_norm(m: Molecule, pointed: PointedSpace, exact: bool = False):
    """Dual norm computed on the subspace ``support(m) | {e}`` only."""
    _check_support(m, pointed.n)
    if not m:
        return Fraction(0) if exact else 0.0
    keep = sorted(set(m.support) | {pointed.basepoint})
    index = {x: i for i, x in enumerate(keep)}
    sub = PointedSpace(pointed.space.subspace(keep), index[pointed.basepoint])
    return dual_norm(m.relabel(index), sub, exact)[0]


def canonical_embed(x: int, pointed: PointedSpace) -> Molecule:
    """``m_{xe}``; the basepoint embeds as the zero molecule."""
    if not 0 <= x < pointed.n:
        raise ValueError(f"point {x} out of range")
    e = pointed.basepoint
    return Molecule() if x == e else Molecule({x: 1, e: -1})


def holmes_norm(terms: Iterable[tuple[float, int]], pointed: PointedSpace) -> float:
    """``sup |sum lambda_i f(x_i)|`` over 1-Lipschitz ``f`` on ``{x_i} | {e}`` with ``f(e) = 0``.

    ``terms`` is a sequence of ``(lambda_i, x_i)`` pairs; the basepoint plays
    the role of the origin. Both the maximum and the minimum of the linear
    functional are computed, so the absolute value is taken literally.
    """
    e = pointed.basepoint
    weights: dict[int, float] = {}
    for lam, x in terms:
        if not 0 <= x < pointed.n:
            raise ValueError(f"point {x} out of range")
        weights[x] = weights.get(x, 0.0) + float(lam)
    pts = sorted(set(weights) | {e})
    if len(pts) == 1:
        return 0.0
    D = pointed.d[np.ix_(pts, pts)]
    coeffs = np.array([0.0 if x == e else weights.get(x, 0.0) for x in pts])
    if not np.any(coeffs):
        return 0.0
    base = pts.index(e)
    hi = coeffs @ _dual_lp_float(coeffs, D, base)
    lo = coeffs @ _dual_lp_float(-coeffs, D, base)
    return float(max(abs(hi), abs(lo)))


def separation_lower_bound(m: Molecule, pointed: PointedSpace):
    """The positivity witness: ``f(p) = eps * sign(m(p))`` and ``f(e) = 0``.

    ``eps`` is half the smallest distance within ``support(m) | {e}``, which
    keeps ``f`` 1-Lipschitz even between points of opposite sign. Returns
    ``(eps * sum |m(p)|, f)`` where the sum skips the basepoint; ``f`` is
    McShane-extended to the whole space.
    """
    _check_support(m, pointed.n)
    e = pointed.basepoint
    pts = sorted(set(m.support) | {e})
    if len(pts) < 2:
        return 0.0, LipschitzFunction((0.0,) * pointed.n, e)
    D = pointed.d
    sub = D[np.ix_(pts, pts)]
    eps = 0.5 * float(np.min(sub[~np.eye(len(pts), dtype=bool)]))
    partial = {x: (0.0 if x == e else eps * float(np.sign(float(m.get(x, 0))))) for x in pts}
    f = mcshane_extend(partial, pointed.space, basepoint=e)
    bound = eps * sum(abs(float(v)) for k, v in m.items() if k != e)
    return bound, f
