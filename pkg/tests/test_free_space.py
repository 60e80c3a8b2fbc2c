from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipfree.free_space import (
    CertificationError,
    DegenerateMoleculeWarning,
    LipschitzFunction,
    Molecule,
    canonical_embed,
    combine,
    dual_norm,
    elementary_molecule,
    holmes_norm,
    lipschitz_constant,
    mcshane_extend,
    norm,
    norm_certificate,
    pairing,
    primal_norm,
    separation_lower_bound,
    support_restricted_norm,
    transport_oracle_norm,
)
from lipfree.metric import FiniteMetricSpace, PointedSpace

from conftest import metric_spaces, spaces_with_molecule


def test_molecule_invariants():
    assert dict(Molecule({0: 1, 1: -1, 2: 0})) == {0: 1, 1: -1}
    with pytest.raises(ValueError):
        Molecule({0: 1, 1: -0.5})
    assert dict(elementary_molecule(0, 1)) == {0: 1, 1: -1}
    assert not (elementary_molecule(0, 1) + elementary_molecule(1, 0))
    tele = combine([(1, elementary_molecule(0, 1)), (1, elementary_molecule(1, 2)), (1, elementary_molecule(2, 0))])
    assert not tele


def test_degenerate_elementary_molecule_warns():
    with pytest.warns(DegenerateMoleculeWarning):
        assert not elementary_molecule(3, 3)


def test_combine_examples():
    m = elementary_molecule(0, 1)
    assert dict(combine([(2, m)])) == {0: 2, 1: -2}
    assert not (m - m)
    assert dict(elementary_molecule(0, 1) + elementary_molecule(1, 2)) == dict(elementary_molecule(0, 2))


def test_exact_conversion_absorbs_float_residue():
    m = Molecule({0: 0.1, 1: 0.2, 2: -0.30000000000000004})
    assert sum(m.exact().values()) == 0


def test_lipschitz_constant_examples(collinear):
    two = FiniteMetricSpace([[0, 2], [2, 0]])
    assert lipschitz_constant([0, 0], two) == 0
    assert lipschitz_constant([0, 1], two) == 0.5
    assert lipschitz_constant([0, 1, 1], collinear) == 1


def test_mcshane_examples():
    two = FiniteMetricSpace([[0, 3], [3, 0]])
    assert mcshane_extend({0: 0.0}, two).values == (0.0, 3.0)
    assert mcshane_extend({0: 0.0, 1: 1.0}, two).values == (0.0, 1.0)
    with pytest.raises(ValueError):
        mcshane_extend({0: 0.0, 1: 4.0}, two)


@settings(max_examples=80, deadline=None)
@given(metric_spaces(2, 7), st.data())
def test_mcshane_property(space, data):
    S = data.draw(st.lists(st.integers(0, space.n - 1), min_size=1, unique=True))
    # values of a 1-Lipschitz function: distances to a point scaled by t in [0, 1]
    z = data.draw(st.integers(0, space.n - 1))
    t = data.draw(st.floats(0, 1))
    partial = {s: t * space.d[z, s] for s in S}
    g = mcshane_extend(partial, space)
    assert lipschitz_constant(g, space) <= 1 + 1e-12
    for s in S:
        assert g[s] == partial[s]


def test_pairing_examples():
    m = elementary_molecule(0, 1)
    assert pairing([5, 7], Molecule()) == 0
    assert pairing([2, 2], m) == 0
    assert pairing([0, 3], m) == -3


def test_elementary_norm_and_witness():
    space = FiniteMetricSpace([[0, 2, 3], [2, 0, 4], [3, 4, 0]])
    pointed = PointedSpace(space, 2)
    v, f = dual_norm(elementary_molecule(0, 1), pointed)
    assert v == pytest.approx(2)
    assert f[0] - f[1] == pytest.approx(2)
    assert primal_norm(elementary_molecule(0, 1), space)[0] == pytest.approx(2)


def test_zero_molecule():
    space = FiniteMetricSpace([[0, 1], [1, 0]])
    value, decomposition = primal_norm(Molecule(), space)
    assert value == 0 and decomposition == []
    cert = norm_certificate(Molecule(), PointedSpace(space))
    assert cert.value == 0 and all(v == 0 for v in cert.dual_witness.values)


def test_collinear_sum_against_exhaustive_oracle(collinear):
    m = elementary_molecule(0, 1) + elementary_molecule(2, 1)
    assert primal_norm(m, collinear)[0] == pytest.approx(2)
    assert primal_norm(m, collinear, exact=True)[0] == 2
    assert transport_oracle_norm(m, collinear) == 2


@settings(max_examples=120, deadline=None)
@given(spaces_with_molecule(2, 8), st.integers(0, 7))
def test_duality_certificate(sm, b):
    space, m = sm
    pointed = PointedSpace(space, b % space.n)
    cert = norm_certificate(m, pointed)
    assert cert.gap <= 1e-9
    assert cert.witness_lipschitz <= 1 + 1e-9
    cost = sum(abs(a) * space.d[p, q] for p, q, a in cert.primal)
    assert cost >= pairing(cert.dual_witness, m) - 1e-9
    assert cert.dual_witness[pointed.basepoint] == 0


@settings(max_examples=60, deadline=None)
@given(spaces_with_molecule(2, 4), st.integers(0, 3))
def test_exact_mode_agrees_with_oracle(sm, b):
    space, m = sm
    pointed = PointedSpace(space, b % space.n)
    exact_space = FiniteMetricSpace(space.d, exact=[[Fraction(int(v)) for v in r] for r in space.d])
    ep = PointedSpace(exact_space, pointed.basepoint)
    me = m.exact()
    cert = norm_certificate(me, ep, exact=True)
    assert cert.gap == 0
    assert cert.value == transport_oracle_norm(me, exact_space)
    assert isinstance(cert.value, Fraction) or cert.value == 0


def test_certificate_failure_is_raised_with_tolerance_zero_on_floats():
    space = FiniteMetricSpace([[0, 0.1], [0.1, 0]])
    pointed = PointedSpace(space)
    m = Molecule({0: 1 / 3, 1: -1 / 3})
    try:
        cert = norm_certificate(m, pointed, tol=0.0)
    except CertificationError as exc:
        assert exc.certificate.notes
    else:
        assert cert.gap == 0


@settings(max_examples=80, deadline=None)
@given(spaces_with_molecule(2, 7), st.floats(-4, 4, allow_nan=False), st.data())
def test_norm_axioms(sm, c, data):
    space, m = sm
    coeffs = data.draw(st.lists(st.integers(-3, 3), min_size=space.n - 1, max_size=space.n - 1))
    entries = dict(enumerate(coeffs))
    entries[space.n - 1] = -sum(coeffs)
    m2 = Molecule(entries)
    a, b = norm(m, space), norm(m2, space)
    assert norm(m * c, space) == pytest.approx(abs(c) * a, abs=1e-9)
    assert norm(m + m2, space) <= a + b + 1e-9
    if m:
        assert a > 0


@settings(max_examples=80, deadline=None)
@given(spaces_with_molecule(2, 7), st.integers(0, 6))
def test_separation_bound_is_a_lower_bound(sm, b):
    space, m = sm
    pointed = PointedSpace(space, b % space.n)
    bound, f = separation_lower_bound(m, pointed)
    assert lipschitz_constant(f, space) <= 1 + 1e-12
    assert pairing(f, m) == pytest.approx(bound)
    assert dual_norm(m, pointed)[0] >= bound - 1e-9
    if any(k != pointed.basepoint for k in m):
        assert bound > 0


def test_support_restriction_on_large_space(rng):
    n = 10
    A = rng.integers(5, 10, size=(n, n)).astype(float)
    A = np.triu(A, 1)
    space = FiniteMetricSpace(A + A.T)
    pointed = PointedSpace(space, 9)
    m = elementary_molecule(2, 5)
    assert support_restricted_norm(m, pointed) == pytest.approx(space.d[2, 5])
    assert support_restricted_norm(Molecule(), pointed) == 0


@settings(max_examples=80, deadline=None)
@given(spaces_with_molecule(2, 8), st.integers(0, 7))
def test_support_restriction_equals_full_norm(sm, b):
    space, m = sm
    pointed = PointedSpace(space, b % space.n)
    assert support_restricted_norm(m, pointed) == pytest.approx(float(norm(m, space)), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(metric_spaces(1, 8), st.integers(0, 7))
def test_canonical_embedding_is_isometric(space, b):
    pointed = PointedSpace(space, b % space.n)
    assert not canonical_embed(pointed.basepoint, pointed)
    for x in range(space.n):
        for y in range(x + 1, space.n):
            diff = canonical_embed(x, pointed) - canonical_embed(y, pointed)
            assert norm_certificate(diff, pointed).value == pytest.approx(space.d[x, y])


def test_holmes_examples():
    space = FiniteMetricSpace([[0, 2, 1], [2, 0, 2], [1, 2, 0]])
    pointed = PointedSpace(space, 0)
    assert holmes_norm([(1, 1)], pointed) == pytest.approx(2)
    assert holmes_norm([(0, 1), (0, 2)], pointed) == 0
    # the absolute value is taken literally: -1 times a point has the same norm
    assert holmes_norm([(-1, 1)], pointed) == pytest.approx(2)


@settings(max_examples=80, deadline=None)
@given(metric_spaces(2, 6), st.data())
def test_holmes_equals_free_norm(space, data):
    e = data.draw(st.integers(0, space.n - 1))
    pointed = PointedSpace(space, e)
    xs = data.draw(st.lists(st.integers(0, space.n - 1), min_size=1, max_size=space.n))
    lams = data.draw(st.lists(st.floats(-3, 3, allow_nan=False), min_size=len(xs), max_size=len(xs)))
    terms = list(zip(lams, xs))
    m = combine((lam, canonical_embed(x, pointed)) for lam, x in terms)
    assert holmes_norm(terms, pointed) == pytest.approx(float(norm(m, space)), abs=1e-9)


def test_pointed_lipschitz_function_vanishes_at_basepoint():
    with pytest.raises(ValueError):
        LipschitzFunction((1.0, 0.0), basepoint=0)
