import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyinf import (classify_singularity, field_from_dicts, find_singularities, numeric_residue, rotate_chart,
                     semicomplete_report, siegel_passage_audit, singularity_table, trace, to_infinity_chart)
from polyinf.singularities import extension_sign_report, rational_approx, table_to_csv

from conftest import quad_diag, quad_shared


def rounded(points):
    return sorted((round(p[0].real, 9), round(p[1].real, 9)) for p in points)


def test_find_singularities(e1_chart, e3_chart):
    assert rounded(find_singularities(e1_chart)) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert find_singularities(e3_chart) == []


@pytest.mark.parametrize("p, eig, res, cls, role", [
    ((1, 1), (1, 1), (1, 1), "dicritical", "source"),
    ((0, 0), (-1, -1), (-1, -1), "nondegenerate", "sink"),
    ((1, 0), (1, -1), (1, -1), "nondegenerate", "saddle"),
])
def test_classify_quad_diag(e1_chart, p, eig, res, cls, role):
    s = classify_singularity(e1_chart, p)
    assert np.allclose(s.eigenvalues, eig)
    assert np.allclose(s.residues, res)
    assert s.classification == cls
    assert s.flow_role == role
    assert s.H_value == -1


def test_siegel_ratio_is_flagged(e1_chart):
    assert classify_singularity(e1_chart, (1, 0)).detail["ratio_type"] == "siegel"


def test_dicritical_has_positive_eigenvalues(e1_chart):
    for s in singularity_table(e1_chart):
        if s.classification == "dicritical":
            assert all(abs(v.imag) < 1e-12 and v.real > 0 for v in s.eigenvalues)


def test_residue_identity(e1_chart):
    # eigenvalue i belongs to the coordinate axis direction i for this field
    for s in singularity_table(e1_chart):
        x0, y0 = s.location
        rx = numeric_residue(e1_chart, (x0 + 0.3, y0), x0, 0.3, coord="x")
        ry = numeric_residue(e1_chart, (x0, y0 + 0.3), y0, 0.3, coord="y")
        assert abs(rx - s.residues[0]) < 1e-6 and abs(ry - s.residues[1]) < 1e-6


def test_residues_under_rotation():
    X = quad_diag()
    spectra = []
    for seed in (1, 2):
        ch = rotate_chart(X, seed=seed)
        spectra.append(sorted((round(v.real, 8), round(v.imag, 8))
                              for s in singularity_table(ch) for v in s.residues))
    # eigenvalues rescale with the chart; their residues -H/lambda do not
    assert spectra[0] == spectra[1]


def test_semicomplete_quadratics():
    rep = semicomplete_report(quad_diag(), chart=to_infinity_chart(quad_diag()))
    for name in ("degree", "rational-ratio", "asymptotic-order"):
        assert rep.status(name) == "pass"
    names = [v[0] for v in rep.verdicts]
    assert len(names) == len(set(names)) == 6
    rep3 = semicomplete_report(quad_shared(), chart=to_infinity_chart(quad_shared()))
    assert rep3.status("pstar") == "pass"


def test_semicomplete_cubic_fails_degree():
    X = field_from_dicts(3, [{(3, 0, 0): 1}, {(0, 3, 0): 1}, {(0, 0, 3): 1}])
    rep = semicomplete_report(X, chart=to_infinity_chart(X))
    assert rep.status("degree") == "fail"


def test_table_exports(e1_chart):
    rows = singularity_table(e1_chart)
    text = table_to_csv(rows)
    assert len(text.strip().splitlines()) == 5
    json.dumps([r.to_json() for r in rows])


def test_siegel_single_component(e1_chart):
    tr = trace(e1_chart, (1.02, 0.2), theta=0, t_max=10, sample_dt=0.01)
    audit = siegel_passage_audit(e1_chart, (1, 0), 0.25, [tr])
    assert len(audit.components) == 1
    assert audit.k is None
    c = audit.components[0]
    assert c["dT_abs"] <= audit.K * c["z_entry_abs"] + 1e-12
    assert audit.per_component_ok and audit.sum_ok


def test_siegel_rejects_nodes(e1_chart):
    with pytest.raises(ValueError):
        siegel_passage_audit(e1_chart, (0, 0), 0.25, [])


def test_siegel_empty(e1_chart):
    audit = siegel_passage_audit(e1_chart, (1, 0), 0.25, [trace(e1_chart, (-1, -1), t_max=3)])
    assert audit.components == [] and "no trace entered U_eps" in audit.flags


def test_extension_signs():
    assert extension_sign_report(-1, 0)["bound_valid"]
    assert not extension_sign_report(1, -2)["bound_valid"]


@settings(max_examples=40, deadline=None)
@given(st.integers(-64, 64), st.integers(1, 64))
def test_rational_reconstruction(p, q):
    r = rational_approx(complex(p / q), bound=64)
    assert r is not None and r.numerator * q == p * r.denominator


@settings(max_examples=10, deadline=None)
@given(st.floats(1e-6, 1e-3), st.integers(0, 100))
def test_singularities_independent_of_polishing(eps, seed):
    ch = to_infinity_chart(quad_diag())
    base = rounded(find_singularities(ch))
    assert rounded(find_singularities(ch, perturb=eps, seed=seed)) == base
