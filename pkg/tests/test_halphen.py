import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyinf import (build_triangle_group, egyptian_enumerate, geodesic_ray, halphen_spectrum_check, leaf_type,
                     poincare_series, verify_relations)
from polyinf.halphen import (HalphenError, MobiusMap, enumerate_group, identity_group, is_reduced, perturb_generator,
                             prebuilt_group)


def brute_egyptian(n, bound):
    k = 2 ** n - 1
    vals = [v for v in range(-bound, bound + 1) if v]
    target = Fraction((-1) ** (n + 1))
    return sorted({c for c in itertools.combinations_with_replacement(vals, k)
                   if sum(Fraction(1, v) for v in c) == target})


def test_regimes():
    assert build_triangle_group(2, 3, 7).regime == "hyperbolic"
    assert build_triangle_group(3, 3, 3).regime == "euclidean"
    assert build_triangle_group(2, 3, 5).regime == "spherical"
    with pytest.raises(HalphenError):
        build_triangle_group(1, 3, 7)


def test_icosahedral_closure():
    assert len(enumerate_group(build_triangle_group(2, 3, 5))) == 60


def test_relations_hyperbolic():
    rep = verify_relations(build_triangle_group(2, 3, 7))
    assert rep.max_deviation < 1e-9 and rep.ok()
    assert max(rep.fiber_modulus_deviations) < 1e-12


def test_relations_identity_and_perturbed():
    assert verify_relations(identity_group()).max_deviation == 0
    G = perturb_generator(build_triangle_group(2, 3, 7), 0, "b", 1e-3)
    assert verify_relations(G).max_deviation >= 1e-4


def test_prebuilt_affine_groups():
    for name in ("2,2,inf", "2,2,2,2"):
        G = prebuilt_group(name)
        assert G.regime == "euclidean"
        assert verify_relations(G).ok()


def test_fixed_points():
    G = build_triangle_group(2, 3, 7)
    for g, pair in zip(G.bases, G.fixed_points):
        for p in pair:
            if p != complex("inf"):
                assert abs(g(p) - p) < 1e-9


def test_ray_basics():
    G = build_triangle_group(2, 3, 7)
    r0 = geodesic_ray(G, "auto", J=0)
    assert r0.points == [0j] and r0.derivative_norms == [1.0]
    ray = geodesic_ray(G, "auto", J=60)
    assert is_reduced(ray.word, G.orders)
    radii = np.abs(ray.points)
    # one step may keep |a_j| fixed up to rounding; the orbit never moves inward
    assert np.all(np.diff(radii) > -1e-12) and radii[-1] < 1
    assert np.sum(np.diff(radii) > 1e-9) >= 55
    flat = geodesic_ray(build_triangle_group(3, 3, 3), "auto", J=40)
    assert np.allclose(flat.derivative_norms, 1)
    with pytest.raises(HalphenError):
        geodesic_ray(build_triangle_group(2, 3, 5))


def test_series_dichotomy():
    G = build_triangle_group(2, 3, 7)
    rays = [geodesic_ray(G, sel, J=200, w0=0.3 + 0.2j) for sel in ("auto", "auto:2")]
    reps = [poincare_series(G, r) for r in rays]
    assert all(r.verdict == "convergent" and r.upper_bound_ok for r in reps)
    assert leaf_type(G, 0.3 + 0.2j, rays) == "hyperbolic"
    assert leaf_type(G, 0j, rays[:1]) == "undetermined"
    for m in [(3, 3, 3), (2, 4, 4), (2, 3, 6)]:
        E = build_triangle_group(*m)
        rep = poincare_series(E, geodesic_ray(E, "auto", J=200))
        assert rep.verdict == "divergent" and np.allclose(rep.terms, 1)
        assert leaf_type(E) == "parabolic"


def test_boundary_kernel():
    G = build_triangle_group(2, 3, 7)
    rep = poincare_series(G, geodesic_ray(G, "auto", J=40, w0=1j))
    assert rep.kernel is not None and len(rep.kernel) == 41


def test_egyptian_examples():
    assert egyptian_enumerate(2, 3) == sorted([(-1, -1, 1), (-2, -1, 2), (-3, -1, 3), (-3, -3, -3)])
    assert egyptian_enumerate(2, 1) == [(-1, -1, 1)]
    six = egyptian_enumerate(2, 6)
    assert (-6, -3, -2) in six and (-4, -4, -2) in six


@pytest.mark.parametrize("bound", range(1, 11))
def test_egyptian_matches_brute_force(bound):
    assert egyptian_enumerate(2, bound) == brute_egyptian(2, bound)


def test_egyptian_three_small():
    assert egyptian_enumerate(3, 3) == brute_egyptian(3, 3)


def test_spectrum_records():
    rep = halphen_spectrum_check(2, 3, 7)
    assert len(rep.records) == 7
    assert rep.records[0]["residues"] == [1.0, 1.0]
    assert halphen_spectrum_check(1, 1, 1).records[1]["eigenvalues"] == [-1, -1, 1]


def test_spectrum_mismatch(e1_chart):
    from polyinf import singularity_table
    assert halphen_spectrum_check(2, 3, 7, table=singularity_table(e1_chart)).consistent is False


# property tests

cplx = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@st.composite
def mobius(draw):
    a, b, c = draw(cplx), draw(cplx), draw(cplx)
    d = draw(cplx)
    if abs(a * d - b * c) < 1e-2:
        d = d + 1
    if abs(a * d - b * c) < 1e-2:
        return MobiusMap.identity()
    return MobiusMap.from_matrix(np.array([[a, b], [c, d]]))


@settings(max_examples=60, deadline=None)
@given(mobius(), mobius(), st.complex_numbers(max_magnitude=0.9, allow_nan=False))
def test_chain_rule(g, h, w):
    hw = h(w)
    if abs(h.c * w + h.d) < 1e-3 or abs(g.c * hw + g.d) < 1e-3:
        return
    lhs = abs((g @ h).derivative(w))
    rhs = abs(g.derivative(hw)) * abs(h.derivative(w))
    assert abs(lhs - rhs) <= 1e-10 * max(1, rhs)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(2, 12), st.integers(2, 12))
def test_relations_all_regimes(m1, m2, m3):
    rep = verify_relations(build_triangle_group(m1, m2, m3))
    assert rep.max_deviation < 1e-9
    assert max(rep.fiber_modulus_deviations) < 1e-12


@settings(max_examples=8, deadline=None)
@given(st.floats(0, 0.6), st.floats(0, 6.28))
def test_interior_basepoint_independence(r, phi):
    G = build_triangle_group(2, 3, 7)
    w0 = r * np.exp(1j * phi)
    rep = poincare_series(G, geodesic_ray(G, "auto", J=200, w0=w0))
    assert rep.verdict == "convergent"
    assert 0 < rep.c <= rep.C
