"""The property suite behind ``lipfree suite``.

Each criterion draws its own seeded instances, checks them, and returns a
:class:`CriterionResult`. Reports contain no timings, so two runs with the
same configuration are byte-identical.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import config
from .concavity import is_concave, is_extreme, normalized_generator, vertex_enumeration_extreme
from .corpus import collinear_space, duplicate_points, integer_code, random_molecule, random_space, rational_space
from .free_space import (
    CertificationError,
    Molecule,
    canonical_embed,
    combine,
    dual_norm,
    holmes_norm,
    norm,
    norm_certificate,
    primal_norm,
    separation_lower_bound,
    support_restricted_norm,
    transport_oracle_norm,
)
from .io import InputError, load_space
from .isometry import find_dilatation, find_isometry, same_diameter_dilatation_is_isometry_check
from .katetov import UrysohnApprox, embed_code, grow_urysohn, katetov_extension, one_point_extension
from .metric import FiniteMetricSpace, PointedSpace, bound_transform, quotient_zero, snowflake, validate_code
from .pipeline import theorem1_check

__all__ = ["SuiteConfig", "CriterionResult", "CRITERIA", "run_suite", "run_criterion"]

_ERRORS = (ArithmeticError, RuntimeError, ValueError)


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 0
    tol: float = config.TOL
    budget: int = config.POINT_BUDGET
    quick: bool = False
    corpus: Path | None = None

    def count(self, full: int) -> int:
        return max(2, full // 10) if self.quick else full


@dataclass
class CriterionResult:
    number: int
    name: str
    checked: int = 0
    failures: int = 0
    first_failure: str | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.checked > 0

    def fail(self, message: str) -> None:
        self.failures += 1
        if self.first_failure is None:
            self.first_failure = message

    def check(self, ok: bool, message: str) -> None:
        self.checked += 1
        if not ok:
            self.fail(message)

    def to_json(self) -> dict:
        return {
            "criterion": self.number,
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "failures": self.failures,
            "first_failure": self.first_failure,
            "details": self.details,
        }


def _rng(cfg: SuiteConfig, number: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, number])


def _pointed(space: FiniteMetricSpace, rng) -> PointedSpace:
    return PointedSpace(space, int(rng.integers(space.n)))


def duality(cfg: SuiteConfig) -> CriterionResult:
    res = CriterionResult(1, "primal and dual norms agree; exact oracle agreement for n <= 4")
    rng = _rng(cfg, 1)
    exact_checked = 0
    for i in range(cfg.count(500)):
        n = int(rng.integers(2, 9))
        space = random_space(rng, n)
        pointed = _pointed(space, rng)
        m = random_molecule(rng, n, exact=bool(rng.random() < 0.5))
        try:
            cert = norm_certificate(m, pointed, cfg.tol)
            res.check(cert.gap <= cfg.tol, f"instance {i}: gap {cert.gap}")
        except CertificationError as exc:
            res.checked += 1
            res.fail(f"instance {i}: {exc}")
            continue
        if n <= 4:
            me = m.exact()
            pv, _ = primal_norm(me, space, exact=True)
            dv, _ = dual_norm(me, pointed, exact=True)
            ov = transport_oracle_norm(me, space, exact=True)
            exact_checked += 1
            res.check(pv == dv == ov, f"instance {i}: exact values {pv}, {dv}, {ov}")
    res.details = {"exact_instances": exact_checked}
    return res


def _norm_corpus(cfg: SuiteConfig):
    rng = _rng(cfg, 2)
    return rng, [random_space(rng, int(rng.integers(2, 9))) for _ in range(cfg.count(100))]


def elementary_norms(cfg: SuiteConfig) -> CriterionResult:
    res = CriterionResult(2, "norm of m_pq equals d(p, q)")
    _, spaces = _norm_corpus(cfg)
    for s, space in enumerate(spaces):
        for p, q in itertools.combinations(range(space.n), 2):
            v = float(norm(Molecule({p: 1, q: -1}), space))
            res.check(abs(v - space.d[p, q]) <= cfg.tol, f"space {s} pair {(p, q)}: {v} vs {space.d[p, q]}")
    return res


def norm_axioms(cfg: SuiteConfig) -> CriterionResult:
    res = CriterionResult(3, "homogeneity, triangle inequality, positivity, separation lower bound")
    rng, spaces = _norm_corpus(cfg)
    tol = cfg.tol
    for s, space in enumerate(spaces):
        n = space.n
        pointed = _pointed(space, rng)
        m1 = random_molecule(rng, n, exact=False)
        m2 = random_molecule(rng, n, exact=False)
        c = float(rng.uniform(-4, 4))
        a, b = float(norm(m1, space)), float(norm(m2, space))
        cm = float(norm(m1 * c, space))
        res.check(abs(cm - abs(c) * a) <= tol * max(1.0, abs(c) * a), f"space {s}: homogeneity {cm} vs {abs(c) * a}")
        res.check(float(norm(m1 + m2, space)) <= a + b + tol, f"space {s}: triangle inequality")
        res.check(a > 0 and b > 0, f"space {s}: nonzero molecule with zero norm")
        for m in (m1, m2):
            bound, f = separation_lower_bound(m, pointed)
            dv, _ = dual_norm(m, pointed)
            res.check(float(dv) >= bound - tol, f"space {s}: dual value {dv} below bound {bound}")
    return res


def support_restriction(cfg: SuiteConfig) -> CriterionResult:
    res = CriterionResult(4, "support-restricted norm equals the full norm")
    rng = _rng(cfg, 4)
    for i in range(cfg.count(200)):
        n = int(rng.integers(3, 9))
        space = random_space(rng, n)
        pointed = _pointed(space, rng)
        m = random_molecule(rng, n, exact=False, support=int(rng.integers(2, n)))
        a = float(support_restricted_norm(m, pointed))
        b = float(norm(m, space))
        res.check(abs(a - b) <= cfg.tol, f"instance {i}: {a} vs {b}")
    return res


def holmes(cfg: SuiteConfig) -> CriterionResult:
    res = CriterionResult(5, "Holmes formula equals the free-space norm")
    rng = _rng(cfg, 5)
    for i in range(cfg.count(200)):
        n = int(rng.integers(2, 7))
        space = random_space(rng, n)
        pointed = _pointed(space, rng)
        others = [x for x in range(n) if x != pointed.basepoint]
        k = int(rng.integers(1, len(others) + 1))
        xs = [int(x) for x in rng.choice(others, size=k, replace=False)]
        lams = [float(v) for v in rng.uniform(-3, 3, size=k)]
        h = holmes_norm(list(zip(lams, xs)), pointed)
        m = combine((lam, canonical_embed(x, pointed)) for lam, x in zip(lams, xs))
        v = float(norm(m, space))
        res.check(abs(h - v) <= cfg.tol, f"instance {i}: holmes {h} vs norm {v}")
    return res


def _unit_molecules(space, rng, count):
    out = [normalized_generator(p, q, space) for p, q in itertools.permutations(range(space.n), 2)]
    for _ in range(count):
        m = random_molecule(rng, space.n, exact=False)
        out.append(m / float(norm(m, space)))
    return out


def concavity(cfg: SuiteConfig) -> CriterionResult:
    res = CriterionResult(6, "snowflaked spaces are concave; triangle equalities fail; oracle agreement")
    rng = _rng(cfg, 6)
    for i in range(cfg.count(100)):
        space = snowflake(random_space(rng, int(rng.integers(2, 7))), 0.5)
        try:
            rep = is_concave(space, tol=cfg.tol)
            res.check(rep.concave, f"snowflaked space {i} fails at {rep.failing_pairs[:3]}")
        except _ERRORS as exc:
            res.checked += 1
            res.fail(f"snowflaked space {i}: {exc}")
    for i in range(cfg.count(50)):
        space, pair = collinear_space(rng, int(rng.integers(3, 7)))
        try:
            rep = is_concave(space, tol=cfg.tol)
            res.check(pair in rep.failing_pairs, f"collinear space {i}: {pair} not among {rep.failing_pairs}")
        except _ERRORS as exc:
            res.checked += 1
            res.fail(f"collinear space {i}: {exc}")
    oracle = 0
    for i in range(cfg.count(30)):
        n = int(rng.integers(2, 5))
        space = random_space(rng, n) if i % 3 else snowflake(random_space(rng, n), 0.5)
        for m in _unit_molecules(space, rng, 2):
            try:
                truth = vertex_enumeration_extreme(m, space, cfg.tol)
                got = [is_extreme(m, space, cfg.tol, meth).is_extreme for meth in ("coordinates", "representation")]
                oracle += 1
                res.check(got == [truth, truth], f"oracle space {i}: {m} oracle {truth} got {got}")
            except _ERRORS as exc:
                res.checked += 1
                res.fail(f"oracle space {i}: {exc}")
    res.details = {"oracle_molecules": oracle}
    return res


def _pair(rng, n):
    X = rational_space(rng, n)
    if rng.random() < 0.5:
        perm = rng.permutation(n)
        return X, X.permuted(perm), True
    D = integer_code(rng, n)
    E = D.copy()
    if n > 1:
        i, j = sorted(int(v) for v in rng.choice(n, size=2, replace=False))
        E[i, j] = E[j, i] = E[i, j] + int(rng.choice([-2, -1, 1, 2]))
    return FiniteMetricSpace(D), FiniteMetricSpace(E), False


def transforms(cfg: SuiteConfig) -> CriterionResult:
    res = CriterionResult(7, "isometry verdicts and witnesses survive bound_transform and snowflake")
    rng = _rng(cfg, 7)
    same_mapping = 0
    for i in range(cfg.count(200)):
        X, Y, _ = _pair(rng, int(rng.integers(2, 8)))
        w = find_isometry(X, Y, cfg.tol)
        for name, T in (("bound", bound_transform), ("snowflake", lambda s: snowflake(s, 0.5))):
            TX, TY = T(X), T(Y)
            wt = find_isometry(TX, TY, cfg.tol)
            res.check((w is None) == (wt is None), f"pair {i}: verdict changes under {name}")
            if w is not None:
                res.check(w.check(TX, TY, cfg.tol), f"pair {i}: witness breaks under {name}")
                same_mapping += int(wt is not None and wt.mapping == w.mapping)
    res.details = {"identical_witness_mappings": same_mapping}
    return res


def theorem1(cfg: SuiteConfig) -> CriterionResult:
    res = CriterionResult(8, "three verdicts of theorem1_check agree")
    rng = _rng(cfg, 8)
    agree_true = agree_false = 0
    for i in range(cfg.count(200)):
        n = int(rng.integers(1, 7))
        D = integer_code(rng, n)
        if i % 2 == 0:
            if rng.random() < 0.3:
                D = duplicate_points(rng, D, 1)
            perm = rng.permutation(D.shape[0])
            E = D[np.ix_(perm, perm)]
            expected = True
        else:
            n = max(n, 2)
            D = integer_code(rng, n)
            E = D.copy()
            a, b = sorted(int(v) for v in rng.choice(n, size=2, replace=False))
            E[a, b] = E[b, a] = E[a, b] + int(rng.choice([-2, -1, 1, 2]))
            expected = False
        try:
            rep = theorem1_check(D, E, cfg.tol)
        except _ERRORS as exc:
            res.checked += 1
            res.fail(f"pair {i}: {exc}")
            continue
        ok = rep.agree and rep.base_isometry == expected
        res.check(ok, f"pair {i}: verdicts {rep.base_isometry}, {rep.free_space_isometry}, {rep.pointed_isometry}")
        if ok:
            agree_true += int(expected)
            agree_false += int(not expected)
    res.details = {"agreeing_isometric": agree_true, "agreeing_non_isometric": agree_false}
    return res


def dilatations(cfg: SuiteConfig) -> CriterionResult:
    res = CriterionResult(9, "dilatation scale recovered; equal diameters force lambda = 1")
    rng = _rng(cfg, 9)
    for i in range(cfg.count(50)):
        X = random_space(rng, int(rng.integers(2, 8)))
        for lam in (0.5, 2.0, 3.0):
            Y = X.scaled(lam).permuted(rng.permutation(X.n))
            w = find_dilatation(X, Y, cfg.tol)
            res.check(w is not None and abs(w.lam - lam) <= cfg.tol, f"space {i}: lambda {lam} not recovered")
        Z = random_space(rng, X.n)
        Z = Z.scaled(X.diameter() / Z.diameter())
        for other in (X.permuted(rng.permutation(X.n)), Z):
            rep = same_diameter_dilatation_is_isometry_check(X, other, cfg.tol)
            res.check(rep.lam_is_one, f"space {i}: equal-diameter dilatation with lambda {rep.lam}")
    return res


def urysohn(cfg: SuiteConfig) -> CriterionResult:
    res = CriterionResult(10, "one-point extensions are metrics; growth converges; embeddings are isometric")
    rng = _rng(cfg, 10)
    for i in range(cfg.count(100)):
        space = random_space(rng, int(rng.integers(1, 7)))
        k = int(rng.integers(1, space.n + 1))
        S = sorted(int(x) for x in rng.choice(space.n, size=k, replace=False))
        anchor = S[0]
        partial = {s: float(space.d[anchor, s]) + 0.5 for s in S}
        f = katetov_extension(partial, space.d)
        code = one_point_extension(space, f, cfg.tol)
        res.check(not validate_code(code, cfg.tol), f"extension {i} is not a metric")
    try:
        approx = grow_urysohn(FiniteMetricSpace([[0.0]]), [0.5, 1.0, 1.5, 2.0], 2, rounds=50, budget=cfg.budget, tol=cfg.tol)
        res.check(approx.unrealized == 0, f"growth left {approx.unrealized} unrealized functions")
        res.details["urysohn_points"] = approx.n
        res.details["urysohn_rounds"] = approx.rounds_run
    except _ERRORS as exc:
        res.checked += 1
        res.fail(f"growth: {exc}")
    for i in range(cfg.count(50)):
        n = int(rng.integers(1, 7))
        D = integer_code(rng, n, 2, 4) / 2.0
        if rng.random() < 0.5:
            D = duplicate_points(rng, D, int(rng.integers(1, 3)))
        target = UrysohnApprox(random_space(rng, int(rng.integers(1, 4))), [1.0], 1, cfg.tol)
        images = embed_code(D, target, cfg.tol)
        distinct = list(dict.fromkeys(images))
        image_space = FiniteMetricSpace(target.d[np.ix_(distinct, distinct)])
        res.check(find_isometry(image_space, quotient_zero(D), cfg.tol) is not None, f"embedding {i} is not isometric")
    return res


def corpus_checks(cfg: SuiteConfig) -> CriterionResult:
    res = CriterionResult(0, "corpus files: elementary norms and self-agreement of theorem1_check")
    files = sorted(Path(cfg.corpus).glob("*.json")) if cfg.corpus and Path(cfg.corpus).is_dir() else []
    if not files:
        raise InputError(f"corpus directory {cfg.corpus} holds no .json space files")
    rng = _rng(cfg, 0)
    for path in files:
        space, base = load_space(path)
        pointed = PointedSpace(space, base)
        for p, q in itertools.combinations(range(space.n), 2):
            try:
                cert = norm_certificate(Molecule({p: 1, q: -1}), pointed, cfg.tol)
                res.check(abs(float(cert.value) - space.d[p, q]) <= cfg.tol, f"{path.name}: pair {(p, q)}")
            except CertificationError as exc:
                res.checked += 1
                res.fail(f"{path.name}: {exc}")
        perm = rng.permutation(space.n)
        rep = theorem1_check(space.d, space.d[np.ix_(perm, perm)], cfg.tol)
        res.check(rep.agree and rep.base_isometry, f"{path.name}: theorem1 self-check")
    res.details = {"files": [p.name for p in files]}
    return res


CRITERIA: dict[int, Callable[[SuiteConfig], CriterionResult]] = {
    1: duality,
    2: elementary_norms,
    3: norm_axioms,
    4: support_restriction,
    5: holmes,
    6: concavity,
    7: transforms,
    8: theorem1,
    9: dilatations,
    10: urysohn,
}


def run_criterion(number: int, cfg: SuiteConfig | None = None) -> CriterionResult:
    cfg = cfg or SuiteConfig()
    try:
        return CRITERIA[number](cfg)
    except _ERRORS as exc:
        res = CriterionResult(number, CRITERIA[number].__name__)
        res.checked += 1
        res.fail(f"aborted: {exc}")
        return res


def run_suite(cfg: SuiteConfig | None = None, only: list[int] | None = None) -> dict:
    """Run the criteria and return a JSON-ready report."""
    cfg = cfg or SuiteConfig()
    if cfg.tol < 0:
        raise ValueError("tolerance must be nonnegative")
    results = [run_criterion(k, cfg) for k in (only or sorted(CRITERIA))]
    if cfg.corpus is not None:
        results.append(corpus_checks(cfg))
    return {
        "seed": cfg.seed,
        "tol": cfg.tol,
        "quick": cfg.quick,
        "passed": all(r.passed for r in results),
        "criteria": [r.to_json() for r in results],
    }
