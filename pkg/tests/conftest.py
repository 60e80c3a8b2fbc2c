import itertools

import numpy as np
import pytest
from hypothesis import strategies as st
from scipy.sparse.csgraph import shortest_path

from lipfree.free_space import Molecule
from lipfree.metric import FiniteMetricSpace


@st.composite
def metric_spaces(draw, min_n=1, max_n=6):
    """Integer metrics: either entries in [k, 2k] or shortest paths of a weighted graph."""
    n = draw(st.integers(min_n, max_n))
    if n == 1:
        return FiniteMetricSpace([[0.0]])
    m = n * (n - 1) // 2
    if draw(st.booleans()):
        k = draw(st.integers(1, 5))
        vals = draw(st.lists(st.integers(k, 2 * k), min_size=m, max_size=m))
        D = np.zeros((n, n))
        D[np.triu_indices(n, 1)] = vals
        D = D + D.T
    else:
        vals = draw(st.lists(st.integers(1, 4), min_size=m, max_size=m))
        W = np.zeros((n, n))
        W[np.triu_indices(n, 1)] = vals
        D = shortest_path(W + W.T, directed=False)
    return FiniteMetricSpace(D)


@st.composite
def spaces_with_molecule(draw, min_n=2, max_n=6):
    space = draw(metric_spaces(min_n, max_n))
    n = space.n
    coeffs = draw(st.lists(st.integers(-5, 5), min_size=n - 1, max_size=n - 1))
    entries = dict(enumerate(coeffs))
    entries[n - 1] = -sum(coeffs)
    return space, Molecule(entries)


def brute_force_isometries(X, Y, tol=1e-9):
    """Every bijection preserving distances, by enumerating all n! permutations."""
    if X.n != Y.n:
        return []
    out = []
    for perm in itertools.permutations(range(Y.n)):
        idx = np.array(perm, dtype=int)
        if X.n == 0 or np.max(np.abs(Y.d[np.ix_(idx, idx)] - X.d)) <= tol:
            out.append(perm)
    return out


@pytest.fixture
def collinear():
    return FiniteMetricSpace([[0, 1, 2], [1, 0, 1], [2, 1, 0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance_log(request):
    """Record ``(number, passed, detail)`` for the summary printed at the end of the run."""
    log = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number, passed, detail=""):
        log[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")

    return record


def pytest_terminal_summary(terminalreporter, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        passed, detail = log[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {number:2d}  {detail}")
