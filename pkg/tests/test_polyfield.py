import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyinf import MultiPoly, PolyError, PolyVectorField, field_from_dicts, homogeneous_components
from polyinf import rotate_chart, to_infinity_chart
from polyinf.polyfield import is_radial_multiple, radial_field

from conftest import planar_complete, quad_diag, quad_shared


def poly(n, terms):
    return MultiPoly(n, terms)


def test_homogeneous_components_planar():
    comps = dict(homogeneous_components(planar_complete()))
    assert sorted(comps) == [1, 3]
    assert comps[1] == field_from_dicts(2, [{}, {(0, 1): 1}])
    assert comps[3] == field_from_dicts(2, [{(2, 1): 1}, {(1, 2): -1}])


def test_homogeneous_components_zero_and_single():
    assert homogeneous_components(field_from_dicts(2, [{}, {}])) == []
    comps = homogeneous_components(quad_diag())
    assert [k for k, _ in comps] == [2]


def test_radial_multiple():
    E = radial_field(3)
    f = poly(3, {(2, 0, 0): 1, (1, 1, 0): 1})
    fE = PolyVectorField(3, tuple(f * c for c in E.components))
    assert is_radial_multiple(fE) == f
    assert is_radial_multiple(quad_diag()) is None
    assert is_radial_multiple(E) == poly(3, {(0, 0, 0): 1})


def test_chart_quad_diag():
    ch = to_infinity_chart(quad_diag())
    assert ch.F == poly(2, {(2, 0): 1, (1, 0): -1})
    assert ch.G == poly(2, {(0, 2): 1, (0, 1): -1})
    assert ch.H == poly(2, {(0, 0): -1})
    assert ch.P.is_constant()
    assert ch.d == 2
    assert ch.generic is False


def test_chart_quad_shared():
    ch = to_infinity_chart(quad_shared())
    xy = poly(2, {(1, 1): 1})
    assert ch.F == -xy and ch.G == -xy
    assert ch.H == poly(2, {(1, 0): -1, (0, 1): -1})
    # P is only defined up to a unit; compare after normalizing
    assert (ch.P * ch.a) == ch.F and (ch.P * ch.b) == ch.G
    assert ch.a.is_constant() and ch.b.is_constant()
    assert ch.Pbar.is_constant()
    assert ch.Pstar.allclose(ch.P * (1 / ch.Pbar.coeff((0, 0))))


def test_radial_top_part_rejected():
    with pytest.raises(PolyError):
        to_infinity_chart(radial_field(3))


def test_rotate_chart_is_generic():
    ch = rotate_chart(quad_diag(), seed=1)
    assert ch.generic
    assert ch.F.degree == 3
    f = ch.f
    x, y = MultiPoly.var(2, 0), MultiPoly.var(2, 1)
    assert ch.F.homogeneous_part(3).allclose(f * x)
    assert ch.G.homogeneous_part(3).allclose(f * y)


def test_planar_chart():
    ch = to_infinity_chart(planar_complete())
    assert ch.dim == 1
    assert ch.d == 3
    assert ch.F == poly(1, {(2,): 2})
    assert ch.H == poly(1, {(1,): 1})


# property tests

coef = st.integers(-3, 3)


@st.composite
def cubic_fields(draw):
    comps = []
    for _ in range(3):
        terms = {}
        for e in [(3, 0, 0), (0, 3, 0), (0, 0, 3), (1, 1, 1), (2, 1, 0), (0, 1, 2), (1, 0, 0), (0, 0, 1)]:
            c = draw(coef)
            if c:
                terms[e] = c
        comps.append(terms)
    return field_from_dicts(3, comps)


@settings(max_examples=30, deadline=None)
@given(cubic_fields())
def test_factorization_identity(X):
    try:
        ch = to_infinity_chart(X)
    except PolyError:
        return
    assert (ch.P * ch.a).allclose(ch.F, 1e-9)
    assert (ch.P * ch.b).allclose(ch.G, 1e-9)
    assert (ch.Pbar * ch.Hstar).allclose(ch.H, 1e-9)


@settings(max_examples=30, deadline=None)
@given(cubic_fields())
def test_json_round_trip(X):
    data = json.loads(json.dumps(X.to_json()))
    assert PolyVectorField.from_json(data) == X


@settings(max_examples=20, deadline=None)
@given(cubic_fields(), st.sampled_from([[[1, 1, 0], [0, 1, 0], [0, 0, 1]], [[1, 0, 0], [-1, 1, 0], [0, 1, 1]]]))
def test_pushforward_functorial(X, L):
    L = np.array(L)
    M = np.array([[1, 0, 1], [0, 1, 0], [0, 0, 1]])
    lhs = X.pushforward(L).pushforward(M)
    rhs = X.pushforward(M @ L)
    for a, b in zip(lhs.components, rhs.components):
        assert a.allclose(b, 1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), coef), max_size=6),
       st.complex_numbers(max_magnitude=2, allow_nan=False), st.complex_numbers(max_magnitude=2, allow_nan=False))
def test_polynomial_arithmetic(terms, x, y):
    p = poly(2, {(i, j): c for i, j, c in terms})
    q = poly(2, {(1, 0): 1, (0, 1): -2, (0, 0): 3})
    assert abs((p * q)(x, y) - p(x, y) * q(x, y)) < 1e-8 * (1 + abs(p(x, y)))
    assert abs((p - q)(x, y) - (p(x, y) - q(x, y))) < 1e-9 * (1 + abs(p(x, y)))
