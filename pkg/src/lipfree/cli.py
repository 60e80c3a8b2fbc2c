"""Command-line entry point ``lipfree``.

Exit codes: 0 success or witness found, 1 negative verdict, 2 usage or input
error, 3 certification failure or disagreement between verdicts.
Every numeric output is printed with 12 significant digits.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import config
from .concavity import NotConcaveError, is_concave, is_extreme, normalized_generator
from .free_space import (
    CertificationError,
    canonical_embed,
    combine,
    dual_norm,
    holmes_norm,
    lipschitz_constant,
    mcshane_extend,
    norm,
    norm_certificate,
    primal_norm,
)
from .io import InputError, dumps, load_code, load_molecule, load_space, read_json, space_to_json, write_atomic
from .isometry import find_dilatation, find_isometry
from .katetov import BudgetExceededError, grow_urysohn
from .metric import FiniteMetricSpace, InvalidCodeError, PointedSpace, bound_transform, normalize_diameter_one, psi_unbounded, snowflake, validate_code
from .pipeline import phi, theorem1_check
from .suite import SuiteConfig, run_suite

__all__ = ["main", "run", "RunConfig"]

OK, NEGATIVE, INPUT_ERROR, CERT_FAILURE = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    tol: float
    seed: int
    budget: int
    out: Path | None

    def __post_init__(self):
        if self.tol < 0:
            raise InputError("tolerance must be nonnegative")
        if self.budget <= 0:
            raise InputError("point budget must be positive")


def _env(name: str, cast, default):
    raw = os.environ.get(f"LIPFREE_{name.upper()}")
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise InputError(f"bad value for LIPFREE_{name.upper()}: {raw!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tol", type=float, default=None, help=f"numerical tolerance (default {config.TOL}, env LIPFREE_TOL)")
    p.add_argument("--seed", type=int, default=None, help="random seed (env LIPFREE_SEED)")
    p.add_argument("--budget", type=int, default=None, help="point budget for growth (env LIPFREE_BUDGET)")
    p.add_argument("--out", type=Path, default=None, help="also write the JSON report here (env LIPFREE_OUT)")
    return p


def _config(args) -> RunConfig:
    tol = args.tol if args.tol is not None else _env("tol", float, config.TOL)
    seed = args.seed if args.seed is not None else _env("seed", int, 0)
    budget = args.budget if args.budget is not None else _env("budget", int, config.POINT_BUDGET)
    out = args.out if args.out is not None else _env("out", Path, None)
    return RunConfig(tol, seed, budget, out)


def _emit(report, cfg: RunConfig) -> None:
    text = dumps(report)
    if cfg.out is not None:
        write_atomic(cfg.out, text)
    sys.stdout.write(text)


def cmd_validate(args, cfg):
    code, _, _ = load_code(args.file)
    violations = validate_code(code, cfg.tol)
    report = {"valid": not violations, "n": code.n, "violations": [v.to_json() for v in violations]}
    _emit(report, cfg)
    return OK if not violations else INPUT_ERROR


def cmd_transform(args, cfg):
    space, base = load_space(args.file, cfg.tol)
    if args.bound:
        out = bound_transform(space)
    elif args.snowflake is not None:
        out = snowflake(space, args.snowflake)
    elif args.diam1:
        out = normalize_diameter_one(space)
    else:
        out = psi_unbounded(space, args.psi)
    _emit(space_to_json(out), cfg)
    return OK


def cmd_norm(args, cfg):
    m, pointed = load_molecule(args.file, cfg.tol)
    exact = args.exact
    if exact and not (pointed.space.is_exact and m.is_exact):
        raise InputError("--exact needs rational distances and coefficients (integers or strings like '1/2')")
    mode = "primal" if args.primal else "dual" if args.dual else "both"
    report = {"molecule": m.to_json(), "mode": mode, "exact": exact}
    if mode == "primal":
        value, decomposition = primal_norm(m, pointed.space, exact)
        report.update(value=value, primal=[[p, q, a] for p, q, a in decomposition])
        if exact:
            report["value_exact"] = str(value)
    elif mode == "dual":
        value, witness = dual_norm(m, pointed, exact)
        report.update(value=value, dual_witness=list(witness.values))
        if exact:
            report["value_exact"] = str(value)
    else:
        try:
            cert = norm_certificate(m, pointed, cfg.tol, exact)
        except CertificationError as exc:
            report.update(certificate=exc.certificate.to_json(), error=str(exc))
            _emit(report, cfg)
            return CERT_FAILURE
        report.update(value=cert.value, gap=cert.gap, certificate=cert.to_json())
        if exact:
            report["value_exact"] = str(cert.value)
    _emit(report, cfg)
    return OK


def _space_and_extra(path, key):
    obj = read_json(path)
    if not isinstance(obj, dict) or "space" not in obj or key not in obj:
        raise InputError(f'input needs "space" and "{key}"')
    src = obj["space"]
    if isinstance(src, str):
        src = read_json(Path(path).parent / src)
    space, base = load_space(src)
    return space, base, obj[key]


def cmd_holmes(args, cfg):
    space, base, terms = _space_and_extra(args.file, "terms")
    pointed = PointedSpace(space, base)
    try:
        pairs = [(float(lam), int(x)) for lam, x in terms]
    except (TypeError, ValueError):
        raise InputError('"terms" must be a list of [lambda, point] pairs') from None
    h = holmes_norm(pairs, pointed)
    m = combine((lam, canonical_embed(x, pointed)) for lam, x in pairs)
    v = float(norm(m, space))
    report = {"holmes": h, "free_norm": v, "difference": abs(h - v)}
    _emit(report, cfg)
    return OK if abs(h - v) <= cfg.tol else CERT_FAILURE


def cmd_extend(args, cfg):
    space, base, values = _space_and_extra(args.file, "values")
    try:
        partial = {int(k): float(v) for k, v in values.items()}
    except (AttributeError, ValueError):
        raise InputError('"values" must map point indices to numbers') from None
    if any(not 0 <= k < space.n for k in partial):
        raise InputError("values refer to points outside the space")
    f = mcshane_extend(partial, space, cfg.tol)
    report = {"values": list(f.values), "lipschitz_constant": lipschitz_constant(f, space)}
    _emit(report, cfg)
    return OK


def _two_spaces(args, cfg):
    X, _ = load_space(args.first, cfg.tol)
    Y, _ = load_space(args.second, cfg.tol)
    return X, Y


def cmd_isometry(args, cfg):
    X, Y = _two_spaces(args, cfg)
    w = find_isometry(X, Y, cfg.tol)
    _emit({"isometric": w is not None, "mapping": None if w is None else list(w.mapping)}, cfg)
    return OK if w is not None else NEGATIVE


def cmd_dilatation(args, cfg):
    X, Y = _two_spaces(args, cfg)
    w = find_dilatation(X, Y, cfg.tol)
    report = {"dilatation": w is not None}
    if w is not None:
        report.update(mapping=list(w.mapping), lam=w.lam)
    _emit(report, cfg)
    return OK if w is not None else NEGATIVE


def cmd_concave(args, cfg):
    space, base = load_space(args.file, cfg.tol)
    basepoint = args.basepoint if args.basepoint is not None else base
    if not 0 <= basepoint < space.n:
        raise InputError("basepoint out of range")
    summary = is_concave(space, basepoint, cfg.tol, args.method)
    pairs = []
    for p, q in sorted(summary.margins):
        entry = {"pair": [p, q], "extreme": (p, q) not in summary.failing_pairs, "margin": summary.margins[(p, q)]}
        if not entry["extreme"]:
            rep = is_extreme(normalized_generator(p, q, space), space, cfg.tol, args.method)
            entry["witness"] = rep.witness.to_json()
            entry["witness_norms"] = list(rep.witness_norms)
        pairs.append(entry)
    report = {"concave": summary.concave, "basepoint": basepoint, "method": args.method, "pairs": pairs}
    _emit(report, cfg)
    return OK if summary.concave else NEGATIVE


def cmd_urysohn(args, cfg):
    if args.seed_space is not None:
        seed, _ = load_space(args.seed_space, cfg.tol)
    else:
        seed = FiniteMetricSpace([[0.0]])
    grid = None
    if args.grid is not None:
        try:
            grid = [float(g) for g in args.grid.split(",") if g.strip()]
        except ValueError:
            raise InputError(f"bad grid {args.grid!r}") from None
    rng_seed = args.seed if args.seed is not None else None
    try:
        approx = grow_urysohn(seed, grid, args.max_subset, args.rounds, rng_seed, cfg.budget, cfg.tol)
    except BudgetExceededError as exc:
        _emit({"error": str(exc), "points": exc.approx.n}, RunConfig(cfg.tol, cfg.seed, cfg.budget, None))
        return INPUT_ERROR
    if args.log is not None:
        write_atomic(args.log, "".join(json.dumps(e) + "\n" for e in approx.log))
    summary = approx.summary()
    summary.pop("log")
    report = {"space": space_to_json(approx.space), "summary": summary}
    _emit(report, cfg)
    return OK if approx.unrealized == 0 else NEGATIVE


def cmd_reduce(args, cfg):
    code, _, _ = load_code(args.file)
    inst = phi(code, tol=cfg.tol)
    report = inst.to_json()
    if args.emit is not None:
        write_atomic(args.emit, dumps(report))
    _emit(report, cfg)
    return OK


def cmd_theorem1(args, cfg):
    c1, _, _ = load_code(args.first)
    c2, _, _ = load_code(args.second)
    rep = theorem1_check(c1, c2, cfg.tol)
    _emit(rep.to_json(), cfg)
    if not rep.agree:
        return CERT_FAILURE
    return OK if rep.base_isometry else NEGATIVE


def cmd_suite(args, cfg):
    if args.corpus is not None and not (args.corpus.is_dir() and any(args.corpus.glob("*.json"))):
        raise InputError(f"corpus directory {args.corpus} is missing or holds no .json files")
    only = [int(k) for k in args.only.split(",")] if args.only else None
    scfg = SuiteConfig(seed=cfg.seed, tol=cfg.tol, budget=cfg.budget, quick=args.quick, corpus=args.corpus)
    report = run_suite(scfg, only)
    _emit(report, cfg)
    return OK if report["passed"] else NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="lipfree", description="Finite metric spaces, free-space norms and the isometry reduction.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check the metric axioms of a code")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("transform", parents=[common], help="apply a metric transform")
    p.add_argument("file")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--bound", action="store_true", help="t -> t / (1 + t)")
    g.add_argument("--snowflake", type=float, metavar="ALPHA", help="t -> t ** ALPHA")
    g.add_argument("--diam1", action="store_true", help="adjoin the diameter-one gadget")
    g.add_argument("--psi", type=int, metavar="K", help="adjoin a ray of K points")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("norm", parents=[common], help="free-space norm of a molecule")
    p.add_argument("file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--primal", action="store_true")
    g.add_argument("--dual", action="store_true")
    g.add_argument("--both", action="store_true")
    p.add_argument("--exact", action="store_true", help="rational arithmetic")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("holmes", parents=[common], help="Holmes formula for sum lambda_i m_(x_i e)")
    p.add_argument("file")
    p.set_defaults(func=cmd_holmes)

    p = sub.add_parser("extend", parents=[common], help="McShane extension of a partial 1-Lipschitz function")
    p.add_argument("file")
    p.set_defaults(func=cmd_extend)

    for name, func in (("isometry", cmd_isometry), ("dilatation", cmd_dilatation)):
        p = sub.add_parser(name, parents=[common], help=f"search for an {name}" if name[0] == "i" else f"search for a {name}")
        p.add_argument("first")
        p.add_argument("second")
        p.set_defaults(func=func)

    p = sub.add_parser("concave", parents=[common], help="test every normalized molecule for extremality")
    p.add_argument("file")
    p.add_argument("--basepoint", type=int, default=None)
    p.add_argument("--method", choices=["coordinates", "representation"], default="coordinates")
    p.set_defaults(func=cmd_concave)

    p = sub.add_parser("urysohn", help="finite Urysohn approximations")
    usub = p.add_subparsers(dest="action", required=True)
    q = usub.add_parser("grow", parents=[common], help="grow by realizing grid-valued Katetov functions")
    q.add_argument("--seed-space", type=Path, default=None, help="seed space file (default: one point)")
    q.add_argument("--grid", default=None, help="comma-separated distances (default: multiples of 1/4 up to diameter + 1)")
    q.add_argument("--max-subset", type=int, default=2)
    q.add_argument("--rounds", type=int, default=1)
    q.add_argument("--log", type=Path, default=None, help="write the construction log here as JSON lines")
    q.set_defaults(func=cmd_urysohn)

    p = sub.add_parser("reduce", parents=[common], help="run the reduction on a code")
    p.add_argument("file")
    p.add_argument("--emit", type=Path, default=None, help="write the instance JSON here")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("theorem1", parents=[common], help="compare the three equivalent verdicts on two codes")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=cmd_theorem1)

    p = sub.add_parser("suite", parents=[common], help="run the property suite")
    p.add_argument("--corpus", type=Path, default=None, help="directory of extra space files")
    p.add_argument("--quick", action="store_true", help="about a tenth of the instances")
    p.add_argument("--only", default=None, help="comma-separated criterion numbers")
    p.set_defaults(func=cmd_suite)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return OK if exc.code == 0 else INPUT_ERROR
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except InvalidCodeError as exc:
        sys.stdout.write(dumps({"valid": False, "error": str(exc), "violations": [v.to_json() for v in exc.violations]}))
        return INPUT_ERROR
    except (InputError, NotConcaveError, ValueError) as exc:
        sys.stderr.write(f"lipfree: error: {exc}\n")
        return INPUT_ERROR
    except CertificationError as exc:
        sys.stderr.write(f"lipfree: certification failed: {exc}\n")
        return CERT_FAILURE


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
