"""JSON formats for spaces, molecules and reports.

Space file: ``{"n": int, "d": [[...]], "labels": [...]?, "basepoint": int?}``.
Distances may be numbers or strings such as ``"1/2"`` or ``"0.25"``; when
every entry is an integer or a string the matrix is kept exactly.

Molecule file: ``{"space": <space object or path>, "entries": {"<index>": coeff}}``.
"""

from __future__ import annotations

import json
import math
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import config
from .free_space import Molecule
from .metric import FiniteMetricSpace, MetricCode, PointedSpace

__all__ = [
    "InputError",
    "read_json",
    "parse_number",
    "code_from_json",
    "load_code",
    "load_space",
    "space_to_json",
    "molecule_from_json",
    "load_molecule",
    "jsonable",
    "dumps",
    "write_atomic",
]


class InputError(ValueError):
    """Malformed input file."""


def read_json(path) -> object:
    try:
        if str(path) == "-":
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def parse_number(x):
    """Integers and strings become fractions; floats stay floats."""
    if isinstance(x, bool):
        raise InputError("booleans are not numbers")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a number: {x!r}") from exc
    raise InputError(f"not a number: {x!r}")


def code_from_json(obj) -> tuple[MetricCode, tuple[str, ...] | None, int | None]:
    if not isinstance(obj, dict) or "d" not in obj:
        raise InputError('space object needs a "d" matrix')
    rows = obj["d"]
    if not isinstance(rows, list) or any(not isinstance(r, list) for r in rows):
        raise InputError('"d" must be a list of rows')
    n = obj.get("n", len(rows))
    if n != len(rows) or any(len(r) != n for r in rows):
        raise InputError(f"expected a {n}x{n} matrix")
    vals = [[parse_number(v) for v in r] for r in rows]
    exact = all(isinstance(v, Fraction) for r in vals for v in r)
    code = MetricCode(vals if exact else [[float(v) for v in r] for r in vals])
    labels = obj.get("labels")
    if labels is not None and len(labels) != n:
        raise InputError("one label per point required")
    base = obj.get("basepoint")
    if base is not None and not (isinstance(base, int) and 0 <= base < max(n, 1)):
        raise InputError(f"basepoint {base!r} out of range")
    return code, (tuple(str(x) for x in labels) if labels is not None else None), base


def load_code(path):
    return code_from_json(read_json(path))


def load_space(source, tol=None) -> tuple[FiniteMetricSpace, int]:
    """A validated space and its basepoint (default 0) from a path or parsed object.

    Raises :class:`InvalidCodeError` when the matrix is not a metric.
    """
    obj = read_json(source) if isinstance(source, (str, Path)) else source
    code, labels, base = code_from_json(obj)
    exact = code.exact_matrix() if code.is_exact else None
    space = FiniteMetricSpace(code.d, labels, exact=exact, tol=tol)
    return space, base or 0


def space_to_json(space, basepoint: int | None = None) -> dict:
    out = {"n": space.n, "d": space.d.tolist()}
    labels = getattr(space, "labels", None)
    if labels is not None:
        out["labels"] = list(labels)
    if basepoint is not None:
        out["basepoint"] = basepoint
    return out


def molecule_from_json(obj, relative_to: Path | None = None, tol=None) -> tuple[Molecule, PointedSpace]:
    if not isinstance(obj, dict) or "space" not in obj or "entries" not in obj:
        raise InputError('molecule object needs "space" and "entries"')
    src = obj["space"]
    if isinstance(src, str):
        p = Path(src)
        if relative_to is not None and not p.is_absolute():
            p = relative_to / p
        src = read_json(p)
    space, base = load_space(src, tol)
    entries = obj["entries"]
    if not isinstance(entries, dict):
        raise InputError('"entries" must map point indices to coefficients')
    try:
        coeffs = {int(k): parse_number(v) for k, v in entries.items()}
    except ValueError as exc:
        raise InputError(f"bad molecule entry: {exc}") from exc
    if not all(isinstance(v, Fraction) for v in coeffs.values()):
        coeffs = {k: float(v) for k, v in coeffs.items()}
    if any(k < 0 or k >= space.n for k in coeffs):
        raise InputError("molecule refers to a point outside the space")
    try:
        m = Molecule(coeffs)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return m, PointedSpace(space, base)


def load_molecule(path, tol=None):
    return molecule_from_json(read_json(path), Path(path).parent, tol)


def _round(x: float, digits: int):
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.{digits}g}")


def jsonable(obj, digits: int = config.SIGNIFICANT_DIGITS):
    """Convert numpy types, fractions and tuples; round floats to ``digits`` significant digits."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist(), digits)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return _round(float(obj), digits)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj), digits)
    return obj


def dumps(obj, digits: int = config.SIGNIFICANT_DIGITS) -> str:
    return json.dumps(jsonable(obj, digits), indent=2) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the same directory, so failures leave no partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
