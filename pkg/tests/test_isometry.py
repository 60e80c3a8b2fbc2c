import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipfree.isometry import (
    DilatationWitness,
    IsometryWitness,
    distortion,
    find_dilatation,
    find_embedding,
    find_isometry,
    same_diameter_dilatation_is_isometry_check,
)
from lipfree.metric import FiniteMetricSpace

from conftest import brute_force_isometries, metric_spaces


@settings(max_examples=150, deadline=None)
@given(metric_spaces(1, 7), st.randoms(use_true_random=False), st.booleans())
def test_search_agrees_with_brute_force(X, rnd, perturb):
    perm = list(range(X.n))
    rnd.shuffle(perm)
    Y = X.permuted(perm)
    if perturb and X.n >= 2:
        D = Y.d.copy()
        D[0, 1] = D[1, 0] = D[0, 1] + 0.5
        try:
            Y = FiniteMetricSpace(D)
        except ValueError:
            pass
    w = find_isometry(X, Y)
    expected = brute_force_isometries(X, Y)
    assert (w is not None) == bool(expected)
    if w is not None:
        assert w.check(X, Y)
        assert w.mapping in expected


def test_permuted_space_has_the_permutation_as_witness(rng):
    A = rng.integers(4, 8, size=(6, 6)).astype(float)
    A = np.triu(A, 1)
    X = FiniteMetricSpace(A + A.T)
    perm = [3, 0, 5, 1, 4, 2]
    Y = X.permuted(perm)
    w = find_isometry(X, Y)
    assert w is not None
    assert distortion(X, Y, w.mapping) <= 1e-12


def test_distance_multiset_mismatch_rejected():
    X = FiniteMetricSpace([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    Y = FiniteMetricSpace([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert find_isometry(X, Y) is None
    assert find_isometry(X, FiniteMetricSpace([[0, 1], [1, 0]])) is None


def test_cycle_and_star_not_isometric():
    X = FiniteMetricSpace([[0, 1, 1, 2], [1, 0, 2, 1], [1, 2, 0, 1], [2, 1, 1, 0]])
    Y = FiniteMetricSpace([[0, 1, 1, 1], [1, 0, 2, 2], [1, 2, 0, 2], [1, 2, 2, 0]])
    assert find_isometry(X, Y) is None


def test_fixed_points_respected():
    X = FiniteMetricSpace([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    w = find_isometry(X, X, fixed={0: 2})
    assert w.mapping[0] == 2
    Z = FiniteMetricSpace([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert find_isometry(Z, Z, fixed={1: 0}) is None


def test_empty_and_singleton():
    assert find_isometry(FiniteMetricSpace(np.zeros((0, 0))), FiniteMetricSpace(np.zeros((0, 0)))).mapping == ()
    assert find_isometry(FiniteMetricSpace([[0]]), FiniteMetricSpace([[0]])).mapping == (0,)


def test_witness_check_rejects_bad_maps():
    X = FiniteMetricSpace([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert IsometryWitness((2, 1, 0)).check(X, X)
    assert not IsometryWitness((1, 0, 2)).check(X, X)
    assert not IsometryWitness((0, 0, 2)).check(X, X)
    assert not DilatationWitness((0, 1, 2), 2.0).check(X, X)


def test_embedding():
    tri = FiniteMetricSpace([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    square = FiniteMetricSpace([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]])
    pair = FiniteMetricSpace([[0, 2], [2, 0]])
    assert find_embedding(tri, square) is None
    m = find_embedding(pair, square)
    assert m is not None and square.d[m[0], m[1]] == 2
    assert find_embedding(square, pair) is None


def test_dilatation_examples():
    X = FiniteMetricSpace([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    w = find_dilatation(X, X.scaled(3))
    assert w is not None and w.lam == pytest.approx(3)
    assert w.check(X, X.scaled(3))
    equilateral = FiniteMetricSpace([[0, 2, 2], [2, 0, 2], [2, 2, 0]])
    assert find_dilatation(equilateral, X) is None
    with pytest.raises(ValueError):
        find_dilatation(FiniteMetricSpace([[0]]), X)
    single = find_dilatation(FiniteMetricSpace([[0]]), FiniteMetricSpace([[0]]))
    assert single.lam == 1.0


@settings(max_examples=60, deadline=None)
@given(metric_spaces(2, 6), st.floats(0.1, 10), st.randoms(use_true_random=False))
def test_dilatation_recovers_scale(X, lam, rnd):
    perm = list(range(X.n))
    rnd.shuffle(perm)
    Y = X.scaled(lam).permuted(perm)
    w = find_dilatation(X, Y)
    assert w is not None
    assert w.lam == pytest.approx(lam, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(metric_spaces(2, 6), st.randoms(use_true_random=False))
def test_same_diameter_dilatation_is_isometry(X, rnd):
    perm = list(range(X.n))
    rnd.shuffle(perm)
    report = same_diameter_dilatation_is_isometry_check(X, X.permuted(perm))
    assert report.found and report.lam_is_one


def test_same_diameter_requires_equal_positive_diameters():
    X = FiniteMetricSpace([[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        same_diameter_dilatation_is_isometry_check(X, X.scaled(2))
    with pytest.raises(ValueError):
        same_diameter_dilatation_is_isometry_check(FiniteMetricSpace([[0]]), FiniteMetricSpace([[0]]))
    Y = FiniteMetricSpace([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    Z = FiniteMetricSpace([[0, 1, 1], [1, 0, 0.5], [1, 0.5, 0]])
    report = same_diameter_dilatation_is_isometry_check(Y, Z)
    assert not report.found and report.witness is None
