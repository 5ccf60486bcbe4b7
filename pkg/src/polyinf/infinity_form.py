"""The holonomy form omega_1 on leaves at infinity.

On the x-branch omega_1 = -H/F dx.  After cancelling the common factor P it
reads -Hstar / (Pstar a) dx, and along the y-branch -Hstar / (Pstar b) dy.
Exponentiating its integral gives the height transverse to infinity:
z = z0 exp(-int omega_1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .polyfield import InfinityChartField, MultiPoly, PolyError, _projective_roots

REAL_TOL = 1e-9


class ResidueError(RuntimeError):
    """Leaf continuation or quadrature failed while computing a residue."""


# ---------------------------------------------------------------------------
# truncated power series
# ---------------------------------------------------------------------------


def s_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = len(a)
    return np.convolve(a, b)[:n]


def s_inv(a: np.ndarray) -> np.ndarray:
    if a[0] == 0:
        raise ZeroDivisionError("series with zero constant term is not invertible")
    n = len(a)
    out = np.zeros(n, dtype=complex)
    out[0] = 1 / a[0]
    for k in range(1, n):
        out[k] = -np.dot(a[1:k + 1], out[k - 1::-1][:k]) / a[0]
    return out


def s_integrate(a: np.ndarray, c0: complex = 0) -> np.ndarray:
    out = np.zeros(len(a), dtype=complex)
    out[0] = c0
    out[1:] = a[:-1] / np.arange(1, len(a))
    return out


def s_diff(a: np.ndarray) -> np.ndarray:
    out = np.zeros(len(a), dtype=complex)
    out[:-1] = a[1:] * np.arange(1, len(a))
    return out


def poly_on_series(p: MultiPoly, series: Sequence[np.ndarray]) -> np.ndarray:
    """Truncated composition p(s_1(t), ..., s_n(t))."""
    n = len(series[0])
    cache: list[dict[int, np.ndarray]] = [{0: _unit(n)} for _ in series]

    def pw(i, k):
        if k not in cache[i]:
            cache[i][k] = s_mul(pw(i, k - 1), series[i])
        return cache[i][k]

    out = np.zeros(n, dtype=complex)
    for e, c in p.items():
        term = np.full(n, 0j)
        term[:] = _unit(n) * c
        for i, k in enumerate(e):
            if k:
                term = s_mul(term, pw(i, k))
        out += term
    return out


def _unit(n):
    u = np.zeros(n, dtype=complex)
    u[0] = 1
    return u


def series_order(a: np.ndarray, tol: float = 1e-10) -> int | None:
    """Index of the first coefficient above tol times the series scale."""
    scale = max(1.0, float(np.max(np.abs(a))) if len(a) else 1.0)
    nz = np.flatnonzero(np.abs(a) > tol * scale)
    return int(nz[0]) if len(nz) else None


# ---------------------------------------------------------------------------
# evaluation of omega_1
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OmegaEvaluation:
    point: tuple[complex, ...]
    branch: str
    value: complex


def omega_coefficient(chart: InfinityChartField, p, branch_ratio: float = 1e-6,
                      tol: float = 1e-12) -> OmegaEvaluation:
    """Coefficient of omega_1 at a regular point of the foliation at infinity.

    The x-branch is used unless |a(p)| is tiny compared with |b(p)|.  This
    follows the worked values (for the quadratic diagonal field, (2, 5) gives
    0.5 on the x-branch) rather than a largest-denominator rule.
    """
    p = tuple(complex(v) for v in np.atleast_1d(p))
    ps, hs = chart.Pstar(*p), chart.Hstar(*p)
    av = chart.a(*p)
    bv = chart.b(*p) if chart.b is not None else 0j
    scale = max(1.0, abs(av), abs(bv))
    if abs(av) <= tol * scale and abs(bv) <= tol * scale:
        raise PolyError(f"{p} is a singular point of the foliation at infinity")
    use_x = chart.b is None or abs(av) >= branch_ratio * abs(bv)
    den = ps * (av if use_x else bv)
    if abs(den) <= tol * scale:
        raise PolyError(f"omega_1 has a pole at {p} (Pstar vanishes)")
    return OmegaEvaluation(point=p, branch="x" if use_x else "y", value=-hs / den)


def omega_on_tangent(chart: InfinityChartField, p, v) -> complex:
    """omega_1 applied to a tangent vector v lying along the leaf through p."""
    ev = omega_coefficient(chart, p)
    return ev.value * (v[0] if ev.branch == "x" else v[1])


# ---------------------------------------------------------------------------
# the chart's own line at infinity: u = 1/x, v = y/x
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InfinityLineChart:
    """Polynomials Ft, Gt, Ht in (u, v) with omega_1 = Ht / (u Ft) du.

    ``K`` equals (v Ft - Gt) / u when that division is exact, which makes
    the leaf equation dv/du = K / Ft regular across u = 0.
    """

    Ft: MultiPoly
    Gt: MultiPoly | None
    Ht: MultiPoly
    K: MultiPoly | None


def _homog_flip(p: MultiPoly, deg: int) -> MultiPoly:
    """u^deg p(1/u, v/u) for p in (x, y), or u^deg p(1/u) for p in x."""
    out = {}
    for e, c in p.items():
        if p.n_vars == 1:
            out[(deg - e[0],)] = c
        else:
            out[(deg - e[0] - e[1], e[1])] = c
    return MultiPoly(p.n_vars, out)


def infinity_line_chart(chart: InfinityChartField) -> InfinityLineChart:
    d = chart.d
    deg = max(d + 1, chart.F.degree, chart.G.degree if chart.G is not None else 0)
    hdeg = deg - 1
    Ft = _homog_flip(chart.F, deg)
    Ht = _homog_flip(chart.H, hdeg)
    if chart.dim == 1:
        return InfinityLineChart(Ft, None, Ht, None)
    Gt = _homog_flip(chart.G, deg)
    v = MultiPoly.var(2, 1)
    K = (v * Ft - Gt).shift_down(0)
    return InfinityLineChart(Ft, Gt, Ht, K)


# ---------------------------------------------------------------------------
# leaf continuation and residues
# ---------------------------------------------------------------------------


def _leaf_system(chart: InfinityChartField, coord: str):
    """(slope, omega) in the parametrizing coordinate s and the other one o."""
    if coord == "u":
        lc = infinity_line_chart(chart)
        if chart.dim == 1:
            return None, lambda s, o: lc.Ht(s) / (s * lc.Ft(s))
        if lc.K is not None:
            slope = lambda s, o: lc.K(s, o) / lc.Ft(s, o)
        else:
            slope = lambda s, o: (o * lc.Ft(s, o) - lc.Gt(s, o)) / (s * lc.Ft(s, o))
        return slope, lambda s, o: lc.Ht(s, o) / (s * lc.Ft(s, o))
    if chart.dim == 1:
        if coord != "x":
            raise ValueError("one-variable charts only have the x coordinate")
        return None, lambda s, o: -chart.Hstar(s) / (chart.Pstar(s) * chart.a(s))
    if coord == "x":
        slope = lambda s, o: chart.b(s, o) / chart.a(s, o)
        omega = lambda s, o: -chart.Hstar(s, o) / (chart.Pstar(s, o) * chart.a(s, o))
    elif coord == "y":
        slope = lambda s, o: chart.a(o, s) / chart.b(o, s)
        omega = lambda s, o: -chart.Hstar(o, s) / (chart.Pstar(o, s) * chart.b(o, s))
    else:
        raise ValueError(f"unknown coordinate {coord!r}")
    return slope, omega


def _continue_leaf(slope, path, dpath, o0, t_end, rtol=1e-12, dense=False):
    """Integrate do/dtau = slope(s(tau), o) ds/dtau along a real-parametrized path."""

    def rhs(tau, o):
        s = path(tau)
        try:
            return [slope(s, o[0]) * dpath(tau)]
        except ZeroDivisionError:
            raise ResidueError(f"leaf continuation hit a foliation singularity near {s}") from None

    sol = solve_ivp(rhs, (0.0, t_end), [complex(o0)], method="DOP853", rtol=rtol,
                    atol=1e-14, dense_output=dense)
    if sol.status != 0 or not np.all(np.isfinite(sol.y)):
        raise ResidueError(f"leaf continuation failed: {sol.message}")
    return sol


def numeric_residue(chart: InfinityChartField, leaf_anchor, loop_center: complex, radius: float,
                    coord: str = "x", tol: float = 1e-8, max_nodes: int = 2**14) -> complex:
    """(1 / 2 pi i) times the loop integral of omega_1 along a leaf.

    The leaf through ``leaf_anchor`` is continued to the loop start and then
    around the circle |s - loop_center| = radius in the parametrizing
    coordinate ``coord`` (``x``, ``y`` or ``u`` for the line x = infinity).
    Quadrature is the trapezoid rule on the circle with node doubling,
    stopped once successive estimates differ by less than ``tol``.
    """
    slope, omega = _leaf_system(chart, coord)
    anchor = tuple(complex(v) for v in np.atleast_1d(leaf_anchor))
    c = complex(loop_center)
    start = c + radius
    if slope is None:
        o_of = lambda phi: np.zeros_like(phi, dtype=complex)
    else:
        if coord == "y":
            s0, o0 = anchor[1], anchor[0]
        else:
            s0, o0 = anchor[0], anchor[1]
        seg = _continue_leaf(slope, lambda tau: s0 + tau * (start - s0), lambda tau: start - s0, o0, 1.0)
        o_start = seg.y[0, -1]
        circ = _continue_leaf(slope, lambda phi: c + radius * np.exp(1j * phi),
                              lambda phi: 1j * radius * np.exp(1j * phi), o_start, 2 * math.pi,
                              dense=True)
        o_end = circ.y[0, -1]
        if abs(o_end - o_start) > 1e-6 * max(1.0, abs(o_start)):
            raise ResidueError(f"leaf does not close around the loop (holonomy moved {o_start} to {o_end})")
        o_of = lambda phi: circ.sol(phi)[0]

    def trap(n):
        phi = 2 * math.pi * np.arange(n) / n
        s = c + radius * np.exp(1j * phi)
        o = np.atleast_1d(o_of(phi))
        vals = np.array([omega(si, oi) for si, oi in zip(s, o)]) * 1j * radius * np.exp(1j * phi)
        return vals.mean() * 2 * math.pi

    # the integrand is periodic and analytic, so the trapezoid error decays
    # geometrically in n; doubling until two estimates agree is enough
    n = 32
    prev = trap(n)
    while n < max_nodes:
        n *= 2
        cur = trap(n)
        if abs(cur - prev) < tol * max(1.0, abs(cur)):
            return complex(cur / (2j * math.pi))
        prev = cur
    raise ResidueError(f"quadrature did not settle; last increment {abs(cur - prev):.3e}")


# ---------------------------------------------------------------------------
# critical loci of the real foliation H
# ---------------------------------------------------------------------------


@dataclass
class LocusReport:
    singular_points: list
    H_curve: MultiPoly | None
    P_curve: MultiPoly | None
    tangency_points: list

    def to_json(self) -> dict:
        def pt(p):
            return [[complex(v).real, complex(v).imag] for v in p]

        return {
            "singular_points": [pt(p) for p in self.singular_points],
            "H_curve": self.H_curve.to_json() if self.H_curve is not None else None,
            "H_curve_text": repr(self.H_curve) if self.H_curve is not None else None,
            "P_curve": self.P_curve.to_json() if self.P_curve is not None else None,
            "P_curve_text": repr(self.P_curve) if self.P_curve is not None else None,
            "tangency_points": [pt(p) for p in self.tangency_points],
        }


def h_singular_loci(chart: InfinityChartField) -> LocusReport:
    """Singular points, the curves H = 0 and P = 0, and tangencies with x = infinity."""
    from .singularities import find_singularities

    sing = find_singularities(chart)
    H_curve = None if chart.H.is_constant() else chart.H
    P_curve = None if chart.P.is_constant() else chart.P
    tangency = []
    if chart.generic and chart.dim == 2:
        e = max(chart.a.degree, chart.b.degree)
        g = chart.a.homogeneous_part(e).shift_down(0)
        if g is not None and not g.is_constant():
            tangency = _projective_roots(g)
    return LocusReport(sing, H_curve, P_curve, tangency)


# ---------------------------------------------------------------------------
# classification of points of the real foliation
# ---------------------------------------------------------------------------


@dataclass
class HSingularity:
    location: object
    kind: str
    residue: complex | None = None
    saddle_order: int | None = None
    flow_role: str = "none"
    omega_order: int | None = None
    ray_count: int | None = None
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        loc = self.location if isinstance(self.location, str) else [[complex(v).real, complex(v).imag] for v in self.location]
        res = None if self.residue is None else [self.residue.real, self.residue.imag]
        return {"location": loc, "kind": self.kind, "residue": res, "saddle_order": self.saddle_order,
                "flow_role": self.flow_role, "omega_order": self.omega_order, "ray_count": self.ray_count}


def flow_role_of(residue: complex) -> str:
    """Sink for negative real residues, source for positive ones, else spiral."""
    if abs(residue.imag) <= REAL_TOL * max(1.0, abs(residue)):
        if residue.real < 0:
            return "sink"
        if residue.real > 0:
            return "source"
        return "none"
    return "spiral"


def leaf_series(chart: InfinityChartField, p, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Taylor series of the leaf through a regular point p, by Picard iteration."""
    n = order + 1
    p = tuple(complex(v) for v in p)
    t = np.zeros(n, dtype=complex)
    t[1] = 1
    av, bv = chart.a(*p), chart.b(*p)
    if abs(av) >= abs(bv):
        xs = t.copy()
        xs[0] = p[0]
        ys = np.zeros(n, dtype=complex)
        ys[0] = p[1]
        for _ in range(n):
            rate = s_mul(poly_on_series(chart.b, [xs, ys]), s_inv(poly_on_series(chart.a, [xs, ys])))
            ys = s_integrate(rate, p[1])
    else:
        ys = t.copy()
        ys[0] = p[1]
        xs = np.zeros(n, dtype=complex)
        xs[0] = p[0]
        for _ in range(n):
            rate = s_mul(poly_on_series(chart.a, [xs, ys]), s_inv(poly_on_series(chart.b, [xs, ys])))
            xs = s_integrate(rate, p[0])
    return xs, ys


def _laurent_of_omega(chart, gamma, tol):
    xs, ys = gamma
    hs = poly_on_series(chart.Hstar, [xs, ys])
    ps = poly_on_series(chart.Pstar, [xs, ys])
    dx, dy = s_diff(xs), s_diff(ys)
    a_s = poly_on_series(chart.a, [xs, ys])
    b_s = poly_on_series(chart.b, [xs, ys])
    # the x-branch is usable when x moves along gamma and a does not vanish on it
    if series_order(dx, tol) is not None and series_order(a_s, tol) is not None:
        num, den = -s_mul(hs, dx), s_mul(ps, a_s)
    else:
        num, den = -s_mul(hs, dy), s_mul(ps, b_s)
    return num, den


def classify_h_point(chart: InfinityChartField, p, separatrix: tuple | None = None,
                     order: int = 8, tol: float = 1e-10) -> HSingularity:
    """Type of p for the real foliation defined by omega_1.

    At a singular point of the foliation a separatrix must be supplied as a
    pair of truncated series (x(t), y(t)) with (x(0), y(0)) = p.  Elsewhere the
    leaf through p is expanded here.  The order of omega_1 pulled back to the
    leaf decides the type: positive order is a zero-saddle with 2(m+1) rays,
    order -1 a simple pole, lower orders a higher-order pole.
    """
    if chart.dim != 2:
        raise ValueError("classify_h_point works on two-variable charts")
    p = tuple(complex(v) for v in p)
    av, bv = chart.a(*p), chart.b(*p)
    singular = max(abs(av), abs(bv)) <= tol * max(1.0, chart.a.max_abs_coeff(), chart.b.max_abs_coeff())
    if separatrix is None:
        if singular:
            raise ValueError("p is a singular point of the foliation; supply a separatrix series")
        if abs(chart.Hstar(*p)) <= tol and abs(chart.Pstar(*p)) <= tol:
            return HSingularity(p, "unclassified-degenerate", detail={"reason": "H = 0 meets P = 0"})
        gamma = leaf_series(chart, p, order)
    else:
        gamma = tuple(np.asarray(g, dtype=complex) for g in separatrix)
        if len(gamma[0]) != len(gamma[1]):
            raise ValueError("separatrix series must have equal length")
        if abs(gamma[0][0] - p[0]) > 1e-9 or abs(gamma[1][0] - p[1]) > 1e-9:
            raise ValueError("separatrix does not pass through p")
    num, den = _laurent_of_omega(chart, gamma, tol)
    l, k = series_order(num, tol), series_order(den, tol)
    if l is None:
        return HSingularity(p, "unclassified-degenerate", detail={"reason": "omega_1 vanishes on the leaf"})
    if k is None:
        raise ValueError("leaf lies inside the polar set; no classification possible")
    m = l - k
    info = {"pullback_orders": [k, l]}
    if m >= 1:
        return HSingularity(p, "zero-saddle", saddle_order=m, flow_role="saddle", omega_order=m,
                            ray_count=2 * (m + 1), detail=info)
    if m == 0:
        return HSingularity(p, "regular", omega_order=0, detail=info)
    q = s_mul(np.concatenate([num[l:], np.zeros(l, complex)]),
              s_inv(np.concatenate([den[k:], np.zeros(k, complex)])))
    idx = -1 - m  # coefficient of t^-1 in t^m q(t)
    res = complex(q[idx]) if idx < len(q) else complex("nan")
    if m == -1:
        return HSingularity(p, "simple-pole", residue=res, flow_role=flow_role_of(res), omega_order=-1,
                            detail=info)
    return HSingularity(p, "higher-pole-saddle", residue=res, flow_role="saddle", omega_order=m,
                        ray_count=2 * (-m - 1), detail=info)


def classify_line_at_infinity(chart: InfinityChartField) -> HSingularity:
    """The chart's line at infinity: omega_1 has principal part du / u there."""
    return HSingularity("line-at-infinity", "infinity-source", residue=1 + 0j, flow_role="source",
                        omega_order=-1)
