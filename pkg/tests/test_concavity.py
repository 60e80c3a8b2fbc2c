import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipfree.concavity import (
    METHODS,
    NotConcaveError,
    free_space_isometry_test,
    is_concave,
    is_extreme,
    normalized_generator,
    vertex_enumeration_extreme,
)
from lipfree.free_space import Molecule, norm
from lipfree.metric import FiniteMetricSpace, PointedSpace, snowflake

from conftest import metric_spaces


@pytest.mark.parametrize("method", METHODS)
def test_two_point_space_generator_is_extreme(method):
    space = FiniteMetricSpace([[0, 3], [3, 0]])
    rep = is_extreme(normalized_generator(0, 1, space), PointedSpace(space), method=method)
    assert rep.is_extreme and rep.witness is None


@pytest.mark.parametrize("method", METHODS)
def test_collinear_middle_gives_witness(method, collinear):
    m = normalized_generator(0, 2, collinear)
    rep = is_extreme(m, collinear, method=method)
    assert not rep.is_extreme
    assert rep.witness
    assert max(rep.witness_norms) <= 1 + 1e-9
    assert is_extreme(normalized_generator(0, 1, collinear), collinear, method=method).is_extreme


def test_zero_molecule_and_bad_method_rejected(collinear):
    with pytest.raises(ValueError):
        is_extreme(Molecule(), collinear)
    with pytest.raises(ValueError):
        is_extreme(normalized_generator(0, 1, collinear), collinear, method="simplex")
    with pytest.raises(ValueError):
        is_extreme(Molecule({0: 1, 1: -1}) * 3, collinear)


def test_non_generator_is_not_extreme(collinear):
    # midpoint of two unit-norm generators
    m = Molecule({0: 0.5, 1: -0.5}) + Molecule({1: 0.5, 2: -0.5})
    m = m * (1 / float(norm(m, collinear)))
    for method in METHODS:
        assert not is_extreme(m, collinear, method=method).is_extreme


@settings(max_examples=40, deadline=None)
@given(metric_spaces(2, 6), st.data())
def test_extremality_symmetric_under_negation(space, data):
    p = data.draw(st.integers(0, space.n - 1))
    q = data.draw(st.integers(0, space.n - 1).filter(lambda x: x != p))
    m = normalized_generator(p, q, space)
    for method in METHODS:
        assert is_extreme(m, space, method=method).is_extreme == is_extreme(-m, space, method=method).is_extreme


@settings(max_examples=40, deadline=None)
@given(metric_spaces(2, 4), st.data())
def test_methods_agree_with_vertex_enumeration(space, data):
    p = data.draw(st.integers(0, space.n - 1))
    q = data.draw(st.integers(0, space.n - 1).filter(lambda x: x != p))
    m = normalized_generator(p, q, space)
    expected = vertex_enumeration_extreme(m, space)
    for method in METHODS:
        assert is_extreme(m, space, method=method).is_extreme == expected


@settings(max_examples=40, deadline=None)
@given(metric_spaces(2, 7))
def test_extreme_iff_no_intermediate_point(space):
    # a generator is extreme exactly when no third point lies metrically between its ends
    D = space.d
    rep = is_concave(space, method="representation")
    for p in range(space.n):
        for q in range(p + 1, space.n):
            between = any(
                abs(D[p, r] + D[r, q] - D[p, q]) <= 1e-9 for r in range(space.n) if r not in (p, q)
            )
            assert ((p, q) in rep.failing_pairs) == between


@settings(max_examples=25, deadline=None)
@given(metric_spaces(2, 6))
def test_snowflake_is_concave(space):
    sf = snowflake(space, 0.5)
    for method in METHODS:
        assert is_concave(sf, method=method).concave


def test_collinear_fails_exactly_at_outer_pair(collinear):
    for method in METHODS:
        rep = is_concave(collinear, method=method)
        assert not rep.concave
        assert rep.failing_pairs == ((0, 2),)
    with pytest.raises(ValueError):
        is_concave(collinear, basepoint=5)


def test_free_space_isometry_test_examples(rng):
    A = rng.integers(5, 10, size=(5, 5)).astype(float)
    A = np.triu(A, 1)
    X = FiniteMetricSpace(A + A.T)
    assert is_concave(X).concave
    w = free_space_isometry_test(X, X)
    assert w is not None and w.lam == pytest.approx(1)
    perm = [4, 2, 0, 3, 1]
    w = free_space_isometry_test(X, X.scaled(2).permuted(perm))
    assert w is not None and w.lam == pytest.approx(2)
    B = A.copy()
    B[0, 1] += 0.5
    assert free_space_isometry_test(X, FiniteMetricSpace(B + B.T)) is None


def test_free_space_isometry_test_requires_concavity(collinear):
    X = FiniteMetricSpace([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    with pytest.raises(NotConcaveError) as info:
        free_space_isometry_test(X, collinear)
    assert info.value.failing == [(0, 2)]
