"""The finite reduction from metric codes to concave pointed spaces and their free spaces.

``phi0`` runs a code through

1. merging points at distance zero,
2. ``t -> t / (1 + t)`` so the diameter drops below 1,
3. the diameter-one gadget (a new pair at distance 1, both at 1/2 from the rest),
4. the square-root snowflake,
5. a fresh basepoint at the same fixed distance from every point.

Every stage maps isometric inputs to isometric outputs, and the snowflake
leaves no triangle equalities, so the result is concave. ``theorem1_check``
compares three verdicts on a pair of codes: isometry of the coded spaces,
isometry of the free spaces (via dilatations of concave bases) and existence
of a basepoint-fixing base isometry whose linear extension preserves norms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import config
from .concavity import ConcavityReport, free_space_isometry_test, is_concave
from .free_space import Molecule, canonical_embed, norm, norm_certificate
from .isometry import find_isometry
from .metric import (
    FiniteMetricSpace,
    InvalidCodeError,
    MetricCode,
    PointedSpace,
    bound_transform,
    normalize_diameter_one,
    quotient_zero,
    snowflake,
    validate_code,
    zero_classes,
)

__all__ = ["Stage", "FreeSpaceInstance", "Theorem1Report", "phi0", "phi", "theorem1_check", "adjoin_basepoint"]

CONCAVITY_METHOD = "representation"


@dataclass(frozen=True)
class Stage:
    name: str
    points: int
    params: tuple = ()

    def to_json(self) -> dict:
        return {"stage": self.name, "points": self.points, "params": dict(self.params)}


def adjoin_basepoint(space: FiniteMetricSpace, distance: float) -> PointedSpace:
    """A new last point at ``distance`` from every point, used as basepoint."""
    n = space.n
    D = np.full((n + 1, n + 1), float(distance))
    D[:n, :n] = space.d
    D[n, n] = 0.0
    labels = None if space.labels is None else list(space.labels) + ["basepoint"]
    return PointedSpace(FiniteMetricSpace(D, labels), n)


def _as_code(code) -> MetricCode:
    code = code if isinstance(code, MetricCode) else MetricCode(code)
    if code.n == 0:
        raise ValueError("cannot reduce an empty code")
    violations = validate_code(code)
    if violations:
        raise InvalidCodeError(violations)
    return code


def _run(code: MetricCode, alpha: float, base_distance: float):
    stages = [Stage("input", code.n)]
    reps = zero_classes(code)
    space = quotient_zero(code)
    stages.append(Stage("quotient_zero", space.n, (("threshold", config.MERGE_THRESHOLD), ("classes", tuple(reps)))))
    space = bound_transform(space)
    stages.append(Stage("bound_transform", space.n))
    space = normalize_diameter_one(space)
    stages.append(Stage("normalize_diameter_one", space.n))
    space = snowflake(space, alpha)
    stages.append(Stage("snowflake", space.n, (("alpha", alpha),)))
    pointed = adjoin_basepoint(space, base_distance)
    stages.append(Stage("adjoin_basepoint", pointed.n, (("distance", base_distance),)))
    return pointed, tuple(stages)


def phi0(code, alpha: float = 0.5, base_distance: float = config.BASEPOINT_DISTANCE, tol=None) -> PointedSpace:
    """The concave pointed space attached to a code (deterministic).

    Raises ``RuntimeError`` if the result unexpectedly fails the concavity test.
    """
    return phi(code, alpha, base_distance, tol).pointed


@dataclass(frozen=True, eq=False)
class FreeSpaceInstance:
    """The free space over ``phi0(code)``, queried through the norm solvers."""

    code: MetricCode
    pointed: PointedSpace
    provenance: tuple[Stage, ...]
    concavity: ConcavityReport
    alpha: float = 0.5
    base_distance: float = config.BASEPOINT_DISTANCE

    @property
    def n(self) -> int:
        return self.pointed.n

    def elementary(self, x: int, y: int) -> Molecule:
        return Molecule({x: 1, y: -1}) if x != y else Molecule()

    def embed(self, x: int) -> Molecule:
        return canonical_embed(x, self.pointed)

    def norm(self, m: Molecule, exact: bool = False):
        return norm(m, self.pointed.space, exact)

    def certificate(self, m: Molecule, tol=None):
        return norm_certificate(m, self.pointed, tol)

    def replay(self) -> PointedSpace:
        """Rebuild the base from the stored code and stage parameters."""
        return _run(self.code, self.alpha, self.base_distance)[0]

    def to_json(self) -> dict:
        space = self.pointed.space
        return {
            "n": space.n,
            "d": space.d.tolist(),
            "labels": list(space.labels) if space.labels else None,
            "basepoint": self.pointed.basepoint,
            "provenance": [s.to_json() for s in self.provenance],
            "concavity": self.concavity.to_json(),
        }


def phi(code, alpha: float = 0.5, base_distance: float = config.BASEPOINT_DISTANCE, tol=None) -> FreeSpaceInstance:
    code = _as_code(code)
    pointed, stages = _run(code, alpha, base_distance)
    report = is_concave(pointed.space, pointed.basepoint, tol, CONCAVITY_METHOD)
    if not report.concave:
        raise RuntimeError(f"reduced space is not concave at {report.failing_pairs[:3]}")
    return FreeSpaceInstance(code, pointed, stages, report, alpha, base_distance)


@dataclass
class Theorem1Report:
    """Three verdicts on a pair of codes and whether they agree.

    ``pointed_isometry`` is the finite stand-in for an ambient isometry: a
    base isometry fixing the basepoint, extended linearly to molecules.
    """

    base_isometry: bool
    free_space_isometry: bool
    pointed_isometry: bool
    base_mapping: tuple | None = None
    free_space_mapping: tuple | None = None
    free_space_lambda: float | None = None
    pointed_mapping: tuple | None = None
    norms_checked: int = 0
    max_norm_error: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def agree(self) -> bool:
        return self.base_isometry == self.free_space_isometry == self.pointed_isometry

    def to_json(self) -> dict:
        return {
            "agree": self.agree,
            "verdicts": {
                "coded_spaces_isometric": self.base_isometry,
                "free_spaces_isometric": self.free_space_isometry,
                "basepoint_fixing_isometry_extends": self.pointed_isometry,
            },
            "witnesses": {
                "coded_spaces": None if self.base_mapping is None else list(self.base_mapping),
                "free_spaces": None
                if self.free_space_mapping is None
                else {"mapping": list(self.free_space_mapping), "lambda": self.free_space_lambda},
                "pointed": None if self.pointed_mapping is None else list(self.pointed_mapping),
            },
            "norms_checked": self.norms_checked,
            "max_norm_error": self.max_norm_error,
            "clause3_label": "finite analog: basepoint-fixing base isometry extended linearly",
            "notes": list(self.notes),
        }


def _probe_molecules(n: int, e: int):
    for x, y in combinations(range(n), 2):
        yield Molecule({x: 1, y: -1})
    mix = {}
    for x in range(n):
        if x != e:
            c = (x + 1) * (-1) ** x
            mix[x] = mix.get(x, 0) + c
            mix[e] = mix.get(e, 0) - c
    m = Molecule(mix)
    if m:
        yield m


def theorem1_check(d, d_prime, tol=None) -> Theorem1Report:
    """Compare the three equivalent conditions on two codes."""
    tol = config.resolve(tol)
    c1, c2 = _as_code(d), _as_code(d_prime)
    X, Y = quotient_zero(c1), quotient_zero(c2)
    w1 = find_isometry(X, Y, tol)
    A, B = phi(c1, tol=tol), phi(c2, tol=tol)
    w2 = free_space_isometry_test(A.pointed.space, B.pointed.space, tol, CONCAVITY_METHOD)
    w3 = find_isometry(A.pointed.space, B.pointed.space, tol, fixed={A.pointed.basepoint: B.pointed.basepoint})
    report = Theorem1Report(
        base_isometry=w1 is not None,
        free_space_isometry=w2 is not None,
        pointed_isometry=False,
        base_mapping=None if w1 is None else w1.mapping,
        free_space_mapping=None if w2 is None else w2.mapping,
        free_space_lambda=None if w2 is None else w2.lam,
    )
    if w3 is not None:
        worst, count = 0.0, 0
        for m in _probe_molecules(A.n, A.pointed.basepoint):
            a = float(A.norm(m))
            b = float(B.norm(m.relabel(w3.mapping)))
            worst = max(worst, abs(a - b))
            count += 1
        report.pointed_mapping = w3.mapping
        report.norms_checked = count
        report.max_norm_error = worst
        report.pointed_isometry = worst <= tol
        if worst > tol:
            report.notes.append(f"linear extension changes a norm by {worst:.3g}")
    if not report.agree:
        report.notes.append("verdicts disagree")
    return report
