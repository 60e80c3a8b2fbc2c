"""Katetov functions, one-point extensions and finite Urysohn-type approximations.

A Katetov function ``f`` on a finite metric space satisfies
``|f(x) - f(y)| <= d(x, y) <= f(x) + f(y)``; these are exactly the distance
profiles of a new point that can be adjoined consistently.

:func:`grow_urysohn` repeatedly adjoins points realizing every grid-valued
Katetov function on small subsets. When the grid is an arithmetic progression
``h, 2h, ..., Mh`` and the seed embeds into the Hamming space ``H(M, q)``
scaled by ``h`` (``q = max_subset + 1``), realizing points are drawn from that
Hamming space, which is finite and realizes every such function on pairs, so
growth stops after finitely many points. Otherwise each new point uses the
Katetov extension of the requested values, capped at the grid maximum, and
growth is bounded only by the point budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Mapping, Sequence

import numpy as np

from . import config
from .isometry import find_embedding
from .metric import FiniteMetricSpace, InvalidCodeError, MetricCode, Violation, diameter, validate_code

__all__ = [
    "KatetovFunction",
    "BudgetExceededError",
    "UrysohnApprox",
    "validate_katetov",
    "is_katetov",
    "katetov_extension",
    "one_point_extension",
    "grow_urysohn",
    "count_unrealized",
    "unrealized_functions",
    "embed_code",
    "extend_partial_isometry",
    "hamming_space",
    "PartialIsometryExtension",
    "default_grid",
]

AMBIENT_LIMIT = 20_000


class BudgetExceededError(RuntimeError):
    """Growth would exceed the point budget; ``approx`` holds the state reached."""

    def __init__(self, message: str, approx: "UrysohnApprox"):
        super().__init__(message)
        self.approx = approx


@dataclass(frozen=True, eq=False)
class KatetovFunction:
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.values)

    def __len__(self):
        return len(self.values)


def _values(f) -> np.ndarray:
    if isinstance(f, KatetovFunction):
        return f.array
    return np.asarray(f, dtype=float)


def validate_katetov(f, space, tol=None) -> list[Violation]:
    """Violations of ``f >= 0``, ``|f(x) - f(y)| <= d(x, y)`` and ``d(x, y) <= f(x) + f(y)``."""
    tol = config.resolve(tol)
    v = _values(f)
    D = space.d
    if v.shape != (D.shape[0],):
        raise ValueError("function must have one value per point")
    out = [Violation("negative", (int(x),), float(-v[x])) for x in np.nonzero(v < -tol)[0]]
    iu, ju = np.triu_indices(len(v), 1)
    lip = np.abs(v[iu] - v[ju]) - D[iu, ju]
    tri = D[iu, ju] - v[iu] - v[ju]
    for kind, excess in (("lipschitz", lip), ("katetov", tri)):
        for t in np.nonzero(excess > tol)[0]:
            out.append(Violation(kind, (int(iu[t]), int(ju[t])), float(excess[t])))
    out.sort(key=lambda w: -w.excess)
    return out


def is_katetov(f, space, tol=None) -> bool:
    return not validate_katetov(f, space, tol)


def katetov_extension(partial: Mapping[int, float], D: np.ndarray, cap: float | None = None) -> np.ndarray:
    """``min(cap, min_s f(s) + d(x, s))``, which is Katetov whenever ``f`` is.

    The cap keeps it Katetov as long as it is at least the diameter and at
    least every given value.
    """
    S = np.array(sorted(partial), dtype=int)
    fS = np.array([float(partial[s]) for s in S])
    g = np.min(fS[None, :] + D[:, S], axis=1)
    if cap is not None:
        g = np.minimum(g, cap)
    g[S] = fS
    return g


def one_point_extension(space, f, tol=None) -> MetricCode:
    """The code of ``space`` with one new point at distances ``f``.

    A zero value makes the new point a copy of an old one, so the result is a
    code rather than a space.
    """
    violations = validate_katetov(f, space, tol)
    if violations:
        raise ValueError("not a Katetov function: " + "; ".join(str(v) for v in violations[:3]))
    v = _values(f)
    n = len(v)
    D = np.zeros((n + 1, n + 1))
    D[:n, :n] = space.d
    D[n, :n] = D[:n, n] = np.maximum(v, 0.0)
    return MetricCode(D)


def hamming_space(length: int, alphabet: int, step: float = 1.0) -> tuple[np.ndarray, FiniteMetricSpace]:
    """Words of ``length`` letters from ``range(alphabet)``, at Hamming distance times ``step``."""
    words = np.array(list(product(range(alphabet), repeat=length)), dtype=np.int8)
    D = (words[:, None, :] != words[None, :, :]).sum(axis=2) * float(step)
    return words, FiniteMetricSpace(D)


def _progression_step(grid: Sequence[float], tol: float) -> float | None:
    h = grid[0]
    if h <= 0:
        return None
    ok = all(abs(g - (i + 1) * h) <= tol for i, g in enumerate(grid))
    return h if ok else None


class UrysohnApprox:
    """A growing finite metric space together with the log that built it.

    Points ``0 .. seed.n - 1`` are the seed. Every later point is recorded in
    :attr:`log` with its full distance profile, so :meth:`replay` rebuilds the
    space from the seed alone.
    """

    def __init__(self, seed: FiniteMetricSpace, grid: Sequence[float], max_subset: int, tol=None):
        if max_subset < 1:
            raise ValueError("max_subset must be at least 1")
        grid = sorted(float(g) for g in grid)
        if not grid or grid[0] <= 0:
            raise ValueError("grid values must be positive")
        self.seed = seed
        self.grid = tuple(grid)
        self.max_subset = int(max_subset)
        self.tol = config.resolve(tol)
        cap = max(16, 2 * seed.n)
        self._D = np.zeros((cap, cap))
        self._D[: seed.n, : seed.n] = seed.d
        self._n = seed.n
        self.log: list[dict] = []
        self.rounds_run = 0
        self.unrealized: int | None = None
        self._words = None
        self._coords = None
        self._used = None
        self._step = None

    @property
    def n(self) -> int:
        return self._n

    @property
    def d(self) -> np.ndarray:
        return self._D[: self._n, : self._n]

    @property
    def space(self) -> FiniteMetricSpace:
        return FiniteMetricSpace(self.d.copy())

    @property
    def ambient(self) -> bool:
        """Whether new points are still drawn from the Hamming ambient space."""
        return self._coords is not None

    def _attach_ambient(self, words, coords, step):
        self._words = words
        self._coords = list(coords)
        self._used = np.zeros(len(words), dtype=bool)
        for c in coords:
            self._used[c] = True
        self._step = step

    def _drop_ambient(self):
        self._words = self._coords = self._used = None

    def add_point(self, profile: Sequence[float], record: dict, word: int | None = None) -> int:
        profile = np.asarray(profile, dtype=float)
        if profile.shape != (self._n,):
            raise ValueError("profile must give a distance to every current point")
        if self._n and np.min(profile) <= 0:
            raise ValueError("new point must be at positive distance from every point")
        n = self._n
        if n + 1 > self._D.shape[0]:
            big = np.zeros((2 * (n + 1), 2 * (n + 1)))
            big[:n, :n] = self._D[:n, :n]
            self._D = big
        self._D[n, :n] = self._D[:n, n] = profile
        self._D[n, n] = 0.0
        self._n = n + 1
        if word is None:
            self._drop_ambient()
        elif self._coords is not None:
            self._coords.append(word)
            self._used[word] = True
        self.log.append({**record, "point": n, "profile": [float(x) for x in profile]})
        return n

    def replay(self) -> FiniteMetricSpace:
        """Rebuild the space from the seed and the log."""
        D = self.seed.d.copy()
        for entry in self.log:
            prof = np.asarray(entry["profile"])
            k = D.shape[0]
            E = np.zeros((k + 1, k + 1))
            E[:k, :k] = D
            E[k, :k] = E[:k, k] = prof
            D = E
        return FiniteMetricSpace(D)

    def fidelity(self) -> dict:
        """Metric violations of the current matrix and the seed's distortion inside it."""
        s = self.seed.n
        distortion = float(np.max(np.abs(self.d[:s, :s] - self.seed.d))) if s else 0.0
        return {"metric_violations": len(validate_code(self.d, self.tol)), "seed_distortion": distortion}

    def summary(self) -> dict:
        return {
            "points": self.n,
            "seed_points": self.seed.n,
            "grid": list(self.grid),
            "max_subset": self.max_subset,
            "tol": self.tol,
            "fidelity": self.fidelity(),
            "rounds_run": self.rounds_run,
            "unrealized": self.unrealized,
            "ambient": self.ambient,
            "log": self.log,
        }


def _grid_index(values: np.ndarray, grid: np.ndarray, tol: float) -> np.ndarray:
    """Index of the grid value within ``tol`` of each entry, or -1."""
    pos = np.searchsorted(grid, values)
    best = np.full(values.shape, -1, dtype=np.int64)
    for cand in (pos - 1, pos):
        c = np.clip(cand, 0, len(grid) - 1)
        hit = np.abs(grid[c] - values) <= tol
        best = np.where((best < 0) & hit, c, best)
    return best


def _admissible_combos(k: int, G: int):
    return np.array(list(product(range(G), repeat=k)), dtype=np.int64).reshape(-1, k)


def _unrealized_on(approx: UrysohnApprox, S: tuple[int, ...], combos: np.ndarray) -> np.ndarray:
    """Admissible grid-index combinations on ``S`` not realized by any current point."""
    grid = np.array(approx.grid)
    tol = approx.tol
    D = approx.d
    k = len(S)
    vals = grid[combos]
    ok = np.ones(len(combos), dtype=bool)
    for a, b in combinations(range(k), 2):
        dab = D[S[a], S[b]]
        ok &= np.abs(vals[:, a] - vals[:, b]) <= dab + tol
        ok &= dab <= vals[:, a] + vals[:, b] + tol
    if not ok.any():
        return combos[:0]
    G = len(grid)
    weights = G ** np.arange(k - 1, -1, -1)
    gi = _grid_index(D[:, list(S)], grid, tol)
    have = gi[np.all(gi >= 0, axis=1)] @ weights
    want = combos[ok]
    return want[~np.isin(want @ weights, have)]


def unrealized_functions(approx: UrysohnApprox, points: Sequence[int] | None = None):
    """Yield ``(subset, values)`` for every unrealized grid-valued Katetov function.

    Subsets of ``points`` (default: all) of size 1 to ``max_subset`` are
    visited in lexicographic order, and values in grid order.
    """
    pts = list(range(approx.n)) if points is None else list(points)
    grid = approx.grid
    for k in range(1, approx.max_subset + 1):
        combos = _admissible_combos(k, len(grid))
        for S in combinations(pts, k):
            for row in _unrealized_on(approx, S, combos):
                yield S, tuple(grid[i] for i in row)


def count_unrealized(approx: UrysohnApprox) -> int:
    """Number of grid-valued Katetov functions on subsets of size at most ``max_subset`` with no realizing point."""
    total = 0
    G = len(approx.grid)
    for k in range(1, approx.max_subset + 1):
        combos = _admissible_combos(k, G)
        for S in combinations(range(approx.n), k):
            total += len(_unrealized_on(approx, S, combos))
    return total


def _realized_by(approx: UrysohnApprox, z: int, S, vals) -> bool:
    return bool(np.all(np.abs(approx.d[z, list(S)] - np.asarray(vals)) <= approx.tol))


def _ambient_word(approx: UrysohnApprox, S, vals) -> int | None:
    words = approx._words
    C = words[[approx._coords[s] for s in S]]
    dist = (words[:, None, :] != C[None, :, :]).sum(axis=2) * approx._step
    ok = np.all(np.abs(dist - np.asarray(vals)[None, :]) <= approx.tol, axis=1) & ~approx._used
    hits = np.nonzero(ok)[0]
    return int(hits[0]) if len(hits) else None


def _realize(approx: UrysohnApprox, S, vals, round_no: int, budget: int) -> int:
    if approx.n + 1 > budget:
        raise BudgetExceededError(f"point budget {budget} exhausted", approx)
    record = {"round": round_no, "subset": list(S), "values": list(vals)}
    if approx.ambient:
        w = _ambient_word(approx, S, vals)
        if w is not None:
            words = approx._words
            mine = words[approx._coords]
            profile = (mine != words[w][None, :]).sum(axis=1) * approx._step
            return approx.add_point(profile, {**record, "kind": "ambient"}, word=w)
    cap = max(approx.grid[-1], float(approx.d.max()))
    profile = katetov_extension(dict(zip(S, vals)), approx.d, cap)
    return approx.add_point(profile, {**record, "kind": "katetov"})


def _sweep(approx: UrysohnApprox, round_no: int, budget: int, rng) -> int:
    start = approx.n
    grid = approx.grid
    subsets = [S for k in range(1, approx.max_subset + 1) for S in combinations(range(start), k)]
    if rng is not None:
        order = rng.permutation(len(subsets))
        subsets = [subsets[i] for i in order]
    combos_by_k = {k: _admissible_combos(k, len(grid)) for k in range(1, approx.max_subset + 1)}
    added = 0
    for S in subsets:
        todo = _unrealized_on(approx, S, combos_by_k[len(S)])
        before = approx.n
        for row in todo:
            vals = tuple(grid[i] for i in row)
            if any(_realized_by(approx, z, S, vals) for z in range(before, approx.n)):
                continue
            _realize(approx, S, vals, round_no, budget)
            added += 1
    return added


def _start(seed: FiniteMetricSpace, grid, max_subset, tol) -> UrysohnApprox:
    approx = UrysohnApprox(seed, grid, max_subset, tol)
    step = _progression_step(approx.grid, approx.tol)
    q = max_subset + 1
    if step is not None and q ** len(approx.grid) <= AMBIENT_LIMIT:
        words, H = hamming_space(len(approx.grid), q, step)
        coords = find_embedding(seed, H, approx.tol) if seed.n else ()
        if coords is not None:
            approx._attach_ambient(words, coords, step)
    return approx


def default_grid(seed: FiniteMetricSpace) -> tuple[float, ...]:
    """Multiples of 1/4 up to the seed diameter plus one."""
    top = diameter(seed) + 1.0
    return tuple(0.25 * i for i in range(1, int(np.floor(top / 0.25 + 1e-9)) + 1))


def grow_urysohn(
    seed: FiniteMetricSpace,
    grid: Sequence[float] | None = None,
    max_subset: int = 2,
    rounds: int = 1,
    rng_seed: int | None = None,
    budget: int = config.POINT_BUDGET,
    tol=None,
) -> UrysohnApprox:
    """Run up to ``rounds`` realization sweeps starting from ``seed``.

    Each sweep visits the subsets of the points present when it starts and
    adjoins a realizing point for every unrealized grid-valued Katetov
    function, unless a point added earlier in the sweep already realizes it.
    Sweeps stop early once one adds nothing. ``rng_seed`` only shuffles the
    order in which subsets are visited.

    Raises
    ------
    BudgetExceededError
        If the space would grow beyond ``budget`` points.
    """
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    if grid is None:
        grid = default_grid(seed)
    approx = _start(seed, grid, max_subset, tol)
    if approx.n > budget:
        raise BudgetExceededError(f"seed already exceeds the point budget {budget}", approx)
    rng = np.random.default_rng(rng_seed) if rng_seed is not None else None
    for r in range(rounds):
        added = _sweep(approx, r, budget, rng)
        approx.rounds_run = r + 1
        if added == 0:
            break
    approx.unrealized = count_unrealized(approx)
    return approx


def _matching(approx: UrysohnApprox, targets: np.ndarray, anchors: list[int], exclude) -> int | None:
    if approx.n == 0:
        return None
    if anchors:
        ok = np.all(np.abs(approx.d[:, anchors] - targets[None, :]) <= approx.tol, axis=1)
    else:
        ok = np.ones(approx.n, dtype=bool)
    for z in np.nonzero(ok)[0]:
        if int(z) not in exclude:
            return int(z)
    return None


def _new_point(approx: UrysohnApprox, anchors: list[int], targets: np.ndarray, kind: str) -> int:
    if approx.n == 0:
        return approx.add_point([], {"kind": kind, "subset": [], "values": []})
    partial = {}
    for a, t in zip(anchors, targets):
        partial[a] = float(t)
    if not partial:
        partial = {0: max(approx.grid[-1], float(approx.d.max()))}
    profile = katetov_extension(partial, approx.d)
    return approx.add_point(profile, {"kind": kind, "subset": list(partial), "values": list(partial.values())})


def embed_code(code, approx: UrysohnApprox, tol=None) -> list[int]:
    """Map every point of ``code`` into ``approx``, adjoining points where needed.

    Existing points are reused when their distances already match. Points of
    the code at distance zero share an image. ``approx`` is modified in place.
    """
    code = code if isinstance(code, MetricCode) else MetricCode(code)
    violations = validate_code(code, tol)
    if violations:
        raise InvalidCodeError(violations)
    images: list[int] = []
    for i in range(code.n):
        targets = code.d[i, :i]
        z = _matching(approx, targets, images, exclude=())
        if z is None:
            z = _new_point(approx, images, targets, "embed")
        images.append(z)
    return images


@dataclass
class PartialIsometryExtension:
    mapping: dict[int, int]
    added: int = 0
    originals: int = 0


def extend_partial_isometry(
    approx: UrysohnApprox, partial: Mapping[int, int], tol=None
) -> tuple[UrysohnApprox, PartialIsometryExtension]:
    """Back-and-forth: enlarge ``partial`` until every original point is in its domain and range.

    Points missing a partner are realized by adjoining Katetov extensions, so
    ``approx`` may grow (it is modified in place and also returned). The
    returned mapping is distance preserving.
    """
    tol = approx.tol if tol is None else tol
    n0 = approx.n
    f = {int(a): int(b) for a, b in partial.items()}
    if any(not (0 <= a < n0 and 0 <= b < n0) for a, b in f.items()):
        raise ValueError("partial map refers to points outside the approximation")
    if len(set(f.values())) != len(f):
        raise ValueError("partial map is not injective")
    keys = list(f)
    for i, a in enumerate(keys):
        for b in keys[i + 1:]:
            if abs(approx.d[a, b] - approx.d[f[a], f[b]]) > tol:
                raise ValueError(f"partial map does not preserve the distance between {a} and {b}")
    start = approx.n
    while True:
        x = next((x for x in range(n0) if x not in f), None)
        if x is not None:
            dom = list(f)
            targets = approx.d[x, dom]
            y = _matching(approx, targets, [f[a] for a in dom], exclude=set(f.values()))
            if y is None:
                y = _new_point(approx, [f[a] for a in dom], targets, "extend")
            f[x] = y
            continue
        rng = set(f.values())
        y = next((y for y in range(n0) if y not in rng), None)
        if y is None:
            break
        dom = list(f)
        targets = approx.d[y, [f[a] for a in dom]]
        x = _matching(approx, targets, dom, exclude=set(f))
        if x is None:
            x = _new_point(approx, dom, targets, "extend")
        f[x] = y
    dom = list(f)
    img = [f[a] for a in dom]
    err = float(np.max(np.abs(approx.d[np.ix_(dom, dom)] - approx.d[np.ix_(img, img)]))) if dom else 0.0
    if err > tol:
        raise AssertionError(f"extension distorts distances by {err}")
    return approx, PartialIsometryExtension(dict(sorted(f.items())), approx.n - start, n0)
