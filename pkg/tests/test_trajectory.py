import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyinf import Neighborhood, confinement_measure, contraction_check, time_integral, trace, to_infinity_chart
from polyinf import field_from_dicts, rotate_chart
from polyinf.trajectory import TraceError, omega_velocity_deviation, trajectory_svg, trajectory_to_csv

START = (-1, -1)


def test_time_integral_closed_form(e1_chart):
    tr = trace(e1_chart, START, z0=1, theta=0, t_max=20)
    T = tr.column("T")
    assert np.max(np.abs(T - (1 - np.exp(-tr.t)))) < 1e-8
    assert abs(tr.end.T - 1) < 1e-8
    assert tr.end.x == pytest.approx(0, abs=1e-6) and tr.end.y == pytest.approx(0, abs=1e-6)


def test_height_closed_form(e1_chart):
    tr = trace(e1_chart, START, theta=math.pi / 3, t_max=10)
    assert np.allclose(np.abs(tr.column("z")), np.exp(-tr.t / 2), rtol=1e-12)


def test_scaling_with_height(e1_chart):
    tr = trace(e1_chart, START, z0=2, theta=0, t_max=30)
    assert abs(tr.end.T - 2) < 1e-8


def test_tail_bound_values(e1_chart):
    tr = trace(e1_chart, START, theta=0, t_max=10)
    _, tail = time_integral(tr)
    assert tail == pytest.approx(math.exp(-10), rel=1e-9)
    th = math.pi / 4
    tr = trace(e1_chart, START, theta=th, t_max=6)
    _, tail = time_integral(tr)
    assert tail == pytest.approx(math.exp(-6 * math.cos(th)) / math.cos(th), rel=1e-9)


def test_contraction_check(e1_chart):
    tr = trace(e1_chart, START, theta=0, t_max=10, sample_dt=0.02)
    rep = contraction_check(tr, e1_chart)
    assert rep.max_relative_deviation < 1e-8
    assert rep.halving_ok
    z = tr.column("z")
    i = np.argmin(np.abs(tr.t - math.log(2)))
    assert abs(tr.t[i] - math.log(2)) < 0.02 or abs(abs(z[i]) - np.exp(-tr.t[i])) < 1e-14


def test_omega_on_velocity(e1_rotated):
    tr = trace(e1_rotated, (0.3 + 0.2j, -0.4 + 0.1j), theta=0.4, t_max=5)
    assert omega_velocity_deviation(e1_rotated, tr) < 1e-9


def test_states_increase(e1_rotated):
    tr = trace(e1_rotated, (0.3 + 0.2j, -0.4 + 0.1j), theta=-0.2, t_max=50)
    assert np.all(np.diff(tr.t) > 0)
    assert np.all(np.diff(tr.column("s")) >= -1e-12)
    assert max(max(abs(s.x), abs(s.y)) for s in tr.states) < 1e6


def test_preconditions(e1_chart):
    with pytest.raises(TraceError):
        trace(e1_chart, (0, 0))
    with pytest.raises(TraceError):
        trace(e1_chart, START, theta=math.pi / 2)


def test_zero_of_h_detour(e3_chart):
    # on x = -1/2 + i s the leaf y = x + 1 runs straight into the zero of H at x = -1/2
    start = (-0.5 + 0.3j, 0.5 + 0.3j)
    hit = trace(e3_chart, start, theta=0, t_max=2)
    assert [e[1] for e in hit.events] == ["saddle-detour"]
    near = trace(e3_chart, start, theta=-1e-7, t_max=2)
    assert near.events == []
    assert abs(hit.end.x - near.end.x) < 1e-6
    assert abs(hit.end.T - near.end.T) < 1e-6


def test_confinement_trivial_cases(planar):
    p = (0.7 + 0.2j, 1.1 - 0.3j)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        total, _ = confinement_measure(planar, p, 0.0, None, 0.0, assume_complete=True)
        assert total == 0
        total, _ = confinement_measure(planar, p, 0.0, Neighborhood([], 0.1, everything=True), 10.0,
                                       assume_complete=True)
        assert total == 0


def test_confinement_warns_without_flag(planar):
    with pytest.warns(UserWarning):
        confinement_measure(planar, (0.7 + 0.2j, 1.1 - 0.3j), 0.0, None, 1.0)


def test_exports(e1_chart):
    tr = trace(e1_chart, START, t_max=1, sample_dt=0.25)
    csv_text = trajectory_to_csv(tr)
    assert csv_text.splitlines()[0].startswith("t,Re x,Im x")
    assert len(csv_text.splitlines()) == len(tr.states) + 1
    svg = trajectory_svg(tr, stamp="fixed")
    assert svg == trajectory_svg(tr, stamp="fixed")
    assert svg.startswith("<svg")


# property tests

@settings(max_examples=15, deadline=None)
@given(st.floats(-1.3, 1.3), st.floats(0.3, 3), st.floats(-2, 2))
def test_height_law_property(theta, r, phi):
    ch = to_infinity_chart(field_from_dicts(3, [{(2, 0, 0): 1}, {(0, 2, 0): 1}, {(0, 0, 2): 1}]))
    z0 = r * np.exp(1j * phi)
    tr = trace(ch, START, z0=z0, theta=theta, t_max=4, sample_dt=0.5)
    assert np.allclose(np.abs(tr.column("z")), r * np.exp(-tr.t * math.cos(theta)), rtol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000), st.floats(0.2, 5))
def test_scaling_property(seed, lam):
    rng = np.random.default_rng(seed)
    comps = [{(2, 0, 0): 1, (1, 1, 0): int(rng.integers(-2, 3))}, {(0, 2, 0): 1, (1, 1, 0): int(rng.integers(-2, 3))},
             {(0, 0, 2): 1, (1, 0, 1): int(rng.integers(-1, 2))}]
    try:
        ch = rotate_chart(field_from_dicts(3, comps), seed=seed)
    except Exception:
        return
    start = (0.37 + 0.21j, -0.52 + 0.13j)
    try:
        a = trace(ch, start, z0=1, theta=0.1, t_max=3, lookahead=0)
        b = trace(ch, start, z0=lam, theta=0.1, t_max=3, lookahead=0)
    except TraceError:
        return
    assert abs(b.end.T - lam * a.end.T) <= 1e-10 * max(1, abs(b.end.T))
