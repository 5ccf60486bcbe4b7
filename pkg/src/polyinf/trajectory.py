"""Oriented trajectories of omega_1 on leaves at infinity.

A trajectory of angle theta is parametrized so that omega_1 evaluated on its
velocity is exactly e^(i theta):

    dx/dt = -e^(i theta) F / H,    dy/dt = -e^(i theta) G / H.

With this clock the height and the time form have closed forms along the
path, z(t) = z0 exp(-e^(i theta) t) and dT/dt = -e^(i theta) z(t)^(d-1) / H.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .infinity_form import _laurent_of_omega, leaf_series, poly_on_series, s_integrate, s_inv, s_mul
from .polyfield import InfinityChartField, PolyError, PolyVectorField, line_at_infinity_singular, to_infinity_chart

TERMINATIONS = ("t_max-reached", "sink-reached", "foliation-singularity", "saddle-detour-budget",
                "chart-boundary", "step-failure")


class TraceError(ValueError):
    """Trace preconditions are violated."""


@dataclass(frozen=True)
class TrajectoryState:
    t: float
    x: complex
    y: complex | None
    z: complex
    T: complex
    s: float

    def point(self) -> tuple:
        return (self.x,) if self.y is None else (self.x, self.y)


@dataclass
class Trajectory:
    theta: float
    states: list
    termination: str
    events: list = field(default_factory=list)
    d: int = 2
    z0: complex = 1
    sup_inv_h: float = 0.0
    homogeneous: bool = True

    @property
    def t(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def end(self) -> TrajectoryState:
        return self.states[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.states])


# ---------------------------------------------------------------------------
# the direction field
# ---------------------------------------------------------------------------


class _Field:
    """Vectorised access to the reduced direction field of a chart."""

    def __init__(self, chart: InfinityChartField, theta: float):
        self.chart = chart
        self.rot = cmath.exp(1j * theta)
        self.d = chart.d
        self.dim = chart.dim
        self.homogeneous = chart.homogeneous

    def velocity(self, t, pt, z=None):
        """Velocity per unit omega_1 (multiply by -e^(i theta) dW)."""
        c = self.chart
        if self.homogeneous:
            hs = c.Hstar(*pt)
            ps = c.Pstar(*pt)
            if self.dim == 1:
                return (ps * c.a(*pt) / hs,), c.H(*pt)
            return (ps * c.a(*pt) / hs, ps * c.b(*pt) / hs), c.H(*pt)
        z = self.z_unit(t) if z is None else z
        full = (*pt, z)
        h = c.H_full(*full)
        if self.dim == 1:
            return (c.F_full(*full) / h,), h
        return (c.F_full(*full) / h, c.G_full(*full) / h), h

    def z_unit(self, t):
        return cmath.exp(-self.rot * t) * self.z0

    z0 = 1.0


def _check_start(chart, start, theta):
    if not abs(theta) < math.pi / 2:
        raise TraceError("theta must lie in (-pi/2, pi/2)")
    start = tuple(complex(v) for v in np.atleast_1d(start))
    if len(start) != chart.dim:
        raise TraceError(f"start needs {chart.dim} coordinates")
    if chart.dim == 2:
        sc = max(1.0, chart.a.max_abs_coeff(), chart.b.max_abs_coeff())
        if abs(chart.a(*start)) + abs(chart.b(*start)) < 1e-12 * sc:
            raise TraceError(f"start {start} is a singular point of the foliation at infinity")
    elif chart.homogeneous and abs(chart.F(*start)) < 1e-12 * max(1.0, chart.F.max_abs_coeff()):
        raise TraceError(f"start {start} is a singular point at infinity")
    if chart.homogeneous and abs(chart.Hstar(*start)) < 1e-14:
        raise TraceError("H vanishes at the start point")
    if chart.homogeneous and abs(chart.Pstar(*start)) < 1e-14:
        raise TraceError("omega_1 has a pole at the start point")
    return start


def trace(chart: InfinityChartField, start, z0: complex = 1.0, theta: float = 0.0, t_max: float = 10.0,
          tol: float = 1e-10, sample_dt: float = 0.05, detour_radius: float = 1e-3,
          detour_budget: int = 100, saddle_guard: float = 1e-6, boundary: float = 1e6,
          stop_radius: float = 1e-12, singular_points: Sequence | None = None,
          lookahead: float = 1e-6) -> Trajectory:
    """Trace the theta-trajectory of omega_1 through ``start``.

    Integration is adaptive DOP853 at relative tolerance ``tol``.  States are
    sampled every ``sample_dt`` in t.  When |Hstar| drops below
    ``saddle_guard`` the trajectory is about to hit a zero of omega_1; it is
    then continued around that zero along an arc in the omega_1-coordinate W,
    which keeps W = e^(i theta) t and so preserves the closed forms.

    For charts of non-homogeneous fields the full z-dependent fields drive
    the direction; z still equals z0 exp(-e^(i theta) t) exactly because
    dz/z = -omega along the chosen parametrization.

    When the trace stops at ``t_max`` on a homogeneous chart, the flow is
    continued at unit height until the remaining tail weight
    exp(-(d-1) t cos theta) drops below ``lookahead``, and sup|1/H| is taken
    over that continuation too, so the tail bound covers the path ahead.
    """
    start = _check_start(chart, start, theta)
    fld = _Field(chart, theta)
    z0 = complex(z0)
    d = chart.d
    rot = fld.rot
    dim = chart.dim
    if chart.homogeneous:
        # integrate the time form at unit height and rescale at the end
        fld.z0 = 1.0
        tscale = z0 ** (d - 1)
    else:
        fld.z0 = z0
        tscale = 1.0
    if singular_points is None:
        from .singularities import find_singularities
        try:
            singular_points = find_singularities(chart)
        except PolyError:
            singular_points = []
    sing = [tuple(complex(v) for v in p) for p in singular_points]
    scale = max(1.0, max(abs(v) for v in start))
    h_scale = max(1.0, (chart.Hstar if chart.homogeneous else chart.H_full).max_abs_coeff())
    p_scale = max(1.0, chart.Pstar.max_abs_coeff())

    def rhs(t, u):
        pt = tuple(u[:dim])
        vel, h = fld.velocity(t, pt)
        zt = fld.z_unit(t)
        out = np.empty(dim + 2, dtype=complex)
        for i in range(dim):
            out[i] = -rot * vel[i]
        out[dim] = -rot * zt ** (d - 1) / h
        out[dim + 1] = math.sqrt(sum(abs(v) ** 2 for v in vel))
        return out

    def ev_boundary(t, u):
        return boundary - max(abs(v) for v in u[:dim])

    def ev_sing(t, u):
        if not sing:
            return 1.0
        zt = fld.z_unit(t) if not chart.homogeneous else 0.0
        dist = min(math.sqrt(sum(abs(u[i] - p[i]) ** 2 for i in range(dim)) + abs(zt) ** 2) for p in sing)
        return dist - stop_radius * scale

    def ev_pole(t, u):
        if not chart.homogeneous or chart.Pstar.is_constant():
            return 1.0
        return abs(chart.Pstar(*u[:dim])) - stop_radius * p_scale

    def ev_saddle(t, u):
        if chart.homogeneous:
            if chart.Hstar.is_constant():
                return 1.0
            return abs(chart.Hstar(*u[:dim])) - saddle_guard * h_scale
        return abs(chart.H_full(*u[:dim], fld.z_unit(t))) - saddle_guard * h_scale

    events = [ev_boundary, ev_sing, ev_pole, ev_saddle]
    for ev in events:
        ev.terminal = True
        ev.direction = -1
    tags = ["chart-boundary", "sing", "sink-reached", "saddle"]

    u = np.array(list(start) + [0j, 0j], dtype=complex)
    t = 0.0
    states = [_state(0.0, u, dim, z0, rot, tscale)]
    ev_log: list = []
    detours = 0
    termination = "t_max-reached"
    atol = np.array([tol * 1e-4 * scale] * dim + [tol * 1e-4] * 2)
    while t < t_max:
        try:
            sol = solve_ivp(rhs, (t, t_max), u, method="DOP853", rtol=tol, atol=atol,
                            dense_output=True, events=events)
        except (ZeroDivisionError, FloatingPointError, OverflowError):
            termination = "step-failure"
            break
        t_end = float(sol.t[-1])
        grid = np.arange(math.floor(t / sample_dt) + 1, math.ceil(t_end / sample_dt)) * sample_dt
        for tg in grid:
            if t < tg < t_end:
                states.append(_state(tg, sol.sol(tg), dim, z0, rot, tscale))
        u = sol.y[:, -1].copy()
        if t_end > states[-1].t:
            states.append(_state(t_end, u, dim, z0, rot, tscale))
        t = t_end
        if sol.status == -1 or not np.all(np.isfinite(u)):
            termination = "step-failure"
            break
        if sol.status != 1:
            break
        fired = next(i for i, te in enumerate(sol.t_events) if len(te))
        tag = tags[fired]
        if tag == "saddle":
            if detours >= detour_budget:
                termination = "saddle-detour-budget"
                break
            try:
                u, t, where = _detour(chart, fld, u, t, detour_radius, d)
            except (ZeroDivisionError, ValueError, RuntimeError) as exc:
                ev_log.append((t, "detour-failed", str(exc)))
                termination = "step-failure"
                break
            detours += 1
            ev_log.append((t, "saddle-detour", where))
            states.append(_state(t, u, dim, z0, rot, tscale))
            continue
        loc = tuple(u[:dim])
        if tag == "sing":
            near = min(sing, key=lambda p: sum(abs(u[i] - p[i]) for i in range(dim)))
            termination = _sing_tag(chart, near)
            loc = near
        else:
            termination = tag
        ev_log.append((t, termination, loc))
        break
    inv_h = _sup_inv_h(chart, states, fld)
    cos_t = math.cos(theta)
    if (lookahead > 0 and chart.homogeneous and termination == "t_max-reached" and d >= 2
            and cos_t > 0 and math.isfinite(inv_h)):
        horizon = min(400.0, math.log(1 / lookahead) / ((d - 1) * cos_t))
        try:
            ahead = trace(chart, states[-1].point(), z0=1.0, theta=theta, t_max=horizon, tol=tol,
                          sample_dt=max(sample_dt, horizon / 2000), detour_radius=detour_radius,
                          detour_budget=detour_budget, saddle_guard=saddle_guard, boundary=boundary,
                          stop_radius=stop_radius, singular_points=sing, lookahead=0.0)
            inv_h = max(inv_h, ahead.sup_inv_h)
            if ahead.termination in ("step-failure", "chart-boundary", "saddle-detour-budget"):
                inv_h = math.inf
        except TraceError:
            inv_h = math.inf
    return Trajectory(theta=theta, states=states, termination=termination, events=ev_log, d=d, z0=z0,
                      sup_inv_h=inv_h, homogeneous=chart.homogeneous)


def _state(t, u, dim, z0, rot, tscale):
    return TrajectoryState(t=float(t), x=complex(u[0]), y=complex(u[1]) if dim == 2 else None,
                           z=z0 * cmath.exp(-rot * t), T=complex(u[dim]) * tscale, s=float(u[dim + 1].real))


def _sing_tag(chart, p) -> str:
    if chart.dim == 1:
        return "sink-reached"
    from .singularities import classify_singularity
    try:
        role = classify_singularity(chart, p).flow_role
    except Exception:
        return "foliation-singularity"
    return "sink-reached" if role == "sink" else "foliation-singularity"


def _sup_inv_h(chart, states, fld) -> float:
    vals = []
    for s in states:
        if chart.homogeneous:
            h = chart.H(*s.point())
        else:
            h = chart.H_full(*s.point(), s.z)
        vals.append(math.inf if h == 0 else 1 / abs(h))
    return max(vals) if vals else 0.0


def _detour(chart, fld, u, t, radius, d):
    """Go around a zero of omega_1 along an arc in W = integral of omega_1."""
    dim = chart.dim
    pt = tuple(complex(v) for v in u[:dim])
    if chart.homogeneous:
        dW, where = _saddle_by_series(chart, pt, dim)
    else:
        dW, where = _saddle_by_flow(chart, pt, fld.z_unit(t), dim)
    rot = fld.rot
    W_c = rot * t
    W_s = W_c + dW
    tau_star = (dW / rot).real
    delta = max(radius, 2 * abs(dW))
    tau_total = tau_star + delta
    W_end = W_c + rot * tau_total
    a0 = cmath.phase(W_c - W_s)
    a1 = cmath.phase(W_end - W_s)
    r0, r1 = abs(W_c - W_s), abs(W_end - W_s)
    # pass on the side a near miss would take; exact hits (within rounding)
    # keep the zero on the left, which is the limit from slightly smaller theta
    ccw = (dW / rot).imag >= -1e-10 * max(1.0, abs(W_c))
    if ccw:
        while a1 <= a0:
            a1 += 2 * math.pi
    else:
        while a1 >= a0:
            a1 -= 2 * math.pi

    def W_of(phi):
        return W_s + (r0 + (r1 - r0) * phi) * cmath.exp(1j * (a0 + (a1 - a0) * phi))

    def dW_of(phi):
        r = r0 + (r1 - r0) * phi
        ang = a0 + (a1 - a0) * phi
        return cmath.exp(1j * ang) * ((r1 - r0) + 1j * r * (a1 - a0))

    def rhs(phi, v):
        p = tuple(v[:dim])
        w = W_of(phi)
        dw = dW_of(phi)
        zw = fld.z0 * cmath.exp(-w)
        vel, h = fld.velocity(0.0, p, zw)
        out = np.empty(dim + 2, dtype=complex)
        for i in range(dim):
            out[i] = -dw * vel[i]
        out[dim] = -dw * zw ** (d - 1) / h
        out[dim + 1] = abs(dw) * math.sqrt(sum(abs(q) ** 2 for q in vel))
        return out

    sol = solve_ivp(rhs, (0.0, 1.0), u, method="DOP853", rtol=1e-12, atol=1e-15)
    if sol.status != 0:
        raise RuntimeError(f"detour integration failed: {sol.message}")
    return sol.y[:, -1].copy(), t + tau_total, where


def _saddle_by_series(chart, pt, dim, order=14):
    """Offset in W to the nearest zero of Hstar along the leaf, from its power series."""
    if dim == 2:
        gamma = leaf_series(chart, pt, order)
        num, den = _laurent_of_omega(chart, gamma, 1e-14)
        hs = poly_on_series(chart.Hstar, list(gamma))
    else:
        xs = np.zeros(order + 1, dtype=complex)
        xs[0], xs[1] = pt[0], 1
        num = -poly_on_series(chart.Hstar, [xs])
        den = poly_on_series(chart.Pstar, [xs]) * chart.a.coeff((0,))
        hs = -num
        gamma = (xs,)
    omega = s_mul(num, s_inv(den))
    roots = np.roots(hs[::-1][np.argmax(np.abs(hs[::-1]) > 0):])
    if not len(roots):
        raise ValueError("no zero of H found near the guard crossing")
    s_zero = roots[np.argmin(np.abs(roots))]
    dW = np.polyval(s_integrate(omega)[::-1], s_zero)
    where = tuple(complex(np.polyval(g[::-1], s_zero)) for g in gamma)
    return complex(dW), where


def _saddle_by_flow(chart, pt, z, dim, iters=8):
    """Offset in W to the nearest zero of H_full along the leaf through (pt, z).

    The leaf is followed by the regular flow dx = F ds, dz = z H ds, on which
    dW = -H ds, and the zero of H(s) is found by Newton's method.
    """
    fulls = [chart.F_full] + ([chart.G_full] if dim == 2 else [])
    H = chart.H_full
    grads = [H.diff(i) for i in range(dim + 1)]

    def rhs(tau, v, sig):
        x = tuple(v[:dim + 1])
        h = H(*x)
        out = [f(*x) for f in fulls] + [x[-1] * h, -h]
        return np.array(out, dtype=complex) * sig

    def flow(sig):
        v0 = np.array(list(pt) + [z, 0j], dtype=complex)
        if sig == 0:
            return v0
        sol = solve_ivp(rhs, (0, 1), v0, args=(sig,), method="DOP853", rtol=1e-13, atol=1e-16)
        return sol.y[:, -1]

    sig = 0j
    for _ in range(iters):
        v = flow(sig)
        x = tuple(v[:dim + 1])
        h = H(*x)
        vel = [f(*x) for f in fulls] + [x[-1] * h]
        dh = sum(g(*x) * w for g, w in zip(grads, vel))
        if dh == 0:
            raise ValueError("degenerate zero of H along the leaf")
        step = h / dh
        sig -= step
        if abs(step) < 1e-15 * max(1.0, abs(sig)):
            break
    v = flow(sig)
    return complex(v[-1]), tuple(complex(q) for q in v[:dim])


# ---------------------------------------------------------------------------
# time integral, contraction, diagnostics
# ---------------------------------------------------------------------------


def time_integral(traj: Trajectory, d: int | None = None) -> tuple[complex, float]:
    """Accumulated T and the tail bound sup|1/H| |z_end|^(d-1) / ((d-1) cos theta)."""
    d = traj.d if d is None else d
    T = traj.end.T
    if not traj.homogeneous or not math.isfinite(traj.sup_inv_h) or d < 2:
        return T, math.inf
    bound = traj.sup_inv_h * abs(traj.end.z) ** (d - 1) / ((d - 1) * math.cos(traj.theta))
    return T, bound


def omega_velocity_deviation(chart: InfinityChartField, traj: Trajectory) -> float:
    """max |omega_1(velocity) - e^(i theta)| over the samples."""
    fld = _Field(chart, traj.theta)
    worst = 0.0
    for s in traj.states:
        vel, _ = fld.velocity(s.t, s.point())
        v = [-fld.rot * q for q in vel]
        p = s.point()
        if chart.dim == 1:
            om = -chart.Hstar(*p) / (chart.Pstar(*p) * chart.a(*p)) * v[0]
        elif abs(chart.a(*p)) >= abs(chart.b(*p)):
            om = -chart.Hstar(*p) / (chart.Pstar(*p) * chart.a(*p)) * v[0]
        else:
            om = -chart.Hstar(*p) / (chart.Pstar(*p) * chart.b(*p)) * v[1]
        worst = max(worst, abs(om - fld.rot))
    return worst


@dataclass
class ContractionReport:
    max_relative_deviation: float
    max_leaf_mismatch: float
    halvings: list
    alpha: float | None
    halving_ok: bool | None

    def to_json(self) -> dict:
        return {"max_relative_deviation": self.max_relative_deviation,
                "max_leaf_mismatch": self.max_leaf_mismatch, "halvings": self.halvings,
                "alpha": self.alpha, "halving_ok": self.halving_ok}


def contraction_check(traj: Trajectory, chart: InfinityChartField) -> ContractionReport:
    """Re-integrate d(log z) = (H/F) dx along the traced path and compare.

    Between consecutive samples the leaf is continued along the straight
    segment joining them (in x, or in y when y moves more), carrying log z.
    For theta = 0 the euclidean length of each halving of |z| is compared
    with 3 ln 2 / (2 alpha), alpha being the least |omega_1| on that stretch.
    """
    if not chart.homogeneous:
        raise ValueError("contraction_check needs a homogeneous chart")
    st = traj.states
    logz = cmath.log(traj.z0)
    worst = 0.0
    leaf_worst = 0.0
    for s0, s1 in zip(st[:-1], st[1:]):
        if s1.t - s0.t <= 0:
            continue
        logz, mismatch = _segment_logz(chart, s0, s1, logz)
        leaf_worst = max(leaf_worst, mismatch)
        zc = s1.z
        worst = max(worst, abs(cmath.exp(logz) / zc - 1) if zc != 0 else 0.0)
        # reset the leaf coordinate to the sample so errors do not accumulate
    halvings, alpha, ok = [], None, None
    if traj.theta == 0 and len(st) > 2:
        halvings, alpha, ok = _halvings(chart, traj)
    return ContractionReport(worst, leaf_worst, halvings, alpha, ok)


def _segment_logz(chart, s0, s1, logz):
    if chart.dim == 1:
        dx = s1.x - s0.x

        def rhs(tau, v):
            x = s0.x + tau * dx
            return [chart.Hstar(x) / (chart.Pstar(x) * chart.a(x)) * dx]

        sol = solve_ivp(rhs, (0, 1), [logz], method="DOP853", rtol=1e-13, atol=1e-15)
        return complex(sol.y[0, -1]), 0.0
    dx, dy = s1.x - s0.x, s1.y - s0.y
    by_x = abs(dx) >= abs(dy)

    def rhs(tau, v):
        if by_x:
            x, y = s0.x + tau * dx, v[0]
            den = chart.Pstar(x, y) * chart.a(x, y)
            return [chart.b(x, y) / chart.a(x, y) * dx, chart.Hstar(x, y) / den * dx]
        x, y = v[0], s0.y + tau * dy
        den = chart.Pstar(x, y) * chart.b(x, y)
        return [chart.a(x, y) / chart.b(x, y) * dy, chart.Hstar(x, y) / den * dy]

    other = s0.y if by_x else s0.x
    sol = solve_ivp(rhs, (0, 1), [other, logz], method="DOP853", rtol=1e-13, atol=1e-15)
    end_other = sol.y[0, -1]
    target = s1.y if by_x else s1.x
    return complex(sol.y[1, -1]), abs(end_other - target) / max(1.0, abs(target))


def _halvings(chart, traj):
    st = traj.states
    t = traj.t
    s = traj.column("s")
    fld = _Field(chart, traj.theta)
    inv_speed = []
    for q in st:
        vel, _ = fld.velocity(q.t, q.point())
        inv_speed.append(1 / math.sqrt(sum(abs(v) ** 2 for v in vel)))
    inv_speed = np.array(inv_speed)
    out = []
    ok = True
    k = 1
    step = math.log(2) / math.cos(traj.theta)
    alpha_all = None
    while k * step <= t[-1]:
        t0, t1 = (k - 1) * step, k * step
        mask = (t >= t0) & (t <= t1)
        alpha = float(inv_speed[mask].min())
        length = float(np.interp(t1, t, s) - np.interp(t0, t, s))
        bound = 3 * math.log(2) / (2 * alpha)
        out.append({"k": k, "length": length, "alpha": alpha, "bound": bound})
        ok = ok and length <= bound
        alpha_all = alpha if alpha_all is None else min(alpha_all, alpha)
        k += 1
    return out, alpha_all, ok


# ---------------------------------------------------------------------------
# confinement and area harnesses
# ---------------------------------------------------------------------------


@dataclass
class Neighborhood:
    """Union of polydiscs of radius ``radius`` in chart coordinates (x, [y], z).

    ``centers`` are affine chart points on z = 0; ``at_infinity`` are
    projective points [x : y] (or [1 : 0] for one-variable charts) of the
    chart's own line at infinity, tested in u = 1/x coordinates.
    """

    centers: list
    radius: float
    at_infinity: list = field(default_factory=list)
    everything: bool = False

    def contains(self, pt, z) -> bool:
        if self.everything:
            return True
        r = self.radius
        for c in self.centers:
            if abs(z) < r and all(abs(pt[i] - c[i]) < r for i in range(len(c))):
                return True
        x = pt[0]
        for q in self.at_infinity:
            if abs(q[0]) > abs(q[1]):
                if x == 0:
                    continue
                u = 1 / x
                ok = abs(u) < r and abs(z * u) < r
                if len(pt) == 2:
                    ok = ok and abs(pt[1] * u - q[1] / q[0]) < r
            else:
                y = pt[1]
                if y == 0:
                    continue
                u = 1 / y
                ok = abs(u) < r and abs(z * u) < r and abs(x * u - q[0] / q[1]) < r
            if ok:
                return True
        return False

    def to_json(self) -> dict:
        c = lambda p: [[complex(v).real, complex(v).imag] for v in p]
        return {"centers": [c(p) for p in self.centers], "radius": self.radius,
                "at_infinity": [c(p) for p in self.at_infinity], "everything": self.everything}


def default_neighborhood(chart: InfinityChartField, radius: float) -> Neighborhood:
    """Balls around the singular points at infinity of the chart, auto-detected."""
    from .singularities import find_singularities
    return Neighborhood(centers=find_singularities(chart), radius=radius,
                        at_infinity=line_at_infinity_singular(chart))


def affine_to_chart(chart: InfinityChartField, p) -> tuple[tuple, complex]:
    """Chart coordinates and height of an affine point of C^n."""
    p = np.asarray([complex(v) for v in p])
    q = chart.chart @ p
    if q[-1] == 0:
        raise TraceError("the point lies on the hyperplane removed by the chart")
    return tuple(complex(v) for v in q[:-1] / q[-1]), complex(1 / q[-1])


def _ensure_chart(X, chart):
    return to_infinity_chart(X) if chart is None else chart


def confinement_measure(X: PolyVectorField, p, theta: float, V: Neighborhood | None, L: float,
                        chart: InfinityChartField | None = None, radius: float = 0.1,
                        assume_complete: bool | None = None, tol: float = 1e-10,
                        sample_dt: float = 0.01) -> tuple[float, np.ndarray]:
    """Time-plane length of the trajectory from p spent outside V.

    The length is the sum of |Delta T| over consecutive samples lying outside
    V, up to the omega_1-arclength budget L.  Returns the total and the
    profile as an array of (t, cumulative outside length) rows.
    """
    if assume_complete is None:
        warnings.warn("completeness of X is not asserted; confinement bounds presume it", stacklevel=2)
    chart = _ensure_chart(X, chart)
    if V is None:
        V = default_neighborhood(chart, radius)
    if L <= 0:
        return 0.0, np.array([[0.0, 0.0]])
    start, z0 = affine_to_chart(chart, p)
    traj = trace(chart, start, z0, theta, L, tol=tol, sample_dt=sample_dt)
    return _outside_profile(chart, traj, V)


def _outside_profile(chart, traj, V):
    st = traj.states
    out = np.array([not V.contains(s.point(), s.z) for s in st])
    t = traj.t
    acc = [0.0]
    for i in range(1, len(st)):
        # chord of the accurately integrated T; robust near zeros of H
        seg = abs(st[i].T - st[i - 1].T)
        acc.append(acc[-1] + (seg if out[i] and out[i - 1] else 0.0))
    prof = np.column_stack([t, acc])
    return float(acc[-1]), prof


def _area_one_ray(args):
    chart, start, z0, theta, r, V, t_max, tol, sample_dt = args
    traj = trace(chart, start, z0, theta, t_max, tol=tol, sample_dt=sample_dt, stop_radius=0.0)
    inside, total = 0.0, 0.0
    st = traj.states
    for a, b in zip(st[:-1], st[1:]):
        if abs(b.T) >= r:
            break
        dt = b.t - a.t
        if dt <= 0:
            continue
        w = abs(b.T - a.T) ** 2 / dt * 0.5 * (a.t + b.t)
        total += w
        if V.contains(a.point(), a.z) and V.contains(b.point(), b.z):
            inside += w
    return inside, total


def area_ratio(X: PolyVectorField, p, theta_grid: Sequence[float], r: float, V: Neighborhood | None,
               chart: InfinityChartField | None = None, radius: float = 0.1, t_max: float = 60.0,
               tol: float = 1e-9, sample_dt: float = 0.02, workers: int = 1) -> float:
    """Share of the time-plane area of the theta-spray inside |T| < r lying over V.

    Rays start at p for each theta of the grid.  In polar coordinates
    (t, theta) of W the area element of the T-plane is |dT/dt|^2 t dt dtheta;
    the ratio integrates it over the portions inside V and over everything.
    A single-angle grid gives the same ratio along one ray.
    """
    chart = _ensure_chart(X, chart)
    if V is None:
        V = default_neighborhood(chart, radius)
    start, z0 = affine_to_chart(chart, p)
    jobs = [(chart, start, z0, float(th), r, V, t_max, tol, sample_dt) for th in theta_grid]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_area_one_ray, jobs))
    else:
        parts = [_area_one_ray(j) for j in jobs]
    inside = sum(p_[0] for p_ in parts)
    total = sum(p_[1] for p_ in parts)
    return 1.0 if V.everything else (inside / total if total > 0 else 0.0)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def trajectory_to_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "Re x", "Im x", "Re y", "Im y", "Re z", "Im z", "Re T", "Im T", "s"])
    for s in traj.states:
        y = s.y if s.y is not None else complex("nan")
        w.writerow([f"{v:.15g}" for v in (s.t, s.x.real, s.x.imag, y.real, y.imag, s.z.real, s.z.imag,
                                           s.T.real, s.T.imag, s.s)])
    return buf.getvalue()


def trajectory_svg(traj: Trajectory, width: int = 720, height: int = 320, stamp: str | None = None) -> str:
    """Two panels: the path (Re x, Im x) and log|z| against t."""
    xs = np.array([s.x for s in traj.states])
    t = traj.t
    lz = np.log(np.abs(traj.column("z")))
    half = width // 2
    pad = 30

    def poly(px, py, x0):
        def norm(v, lo, hi, a, b):
            return a + (v - lo) / (hi - lo if hi > lo else 1.0) * (b - a)
        pts = [f"{norm(a, px.min(), px.max(), x0 + pad, x0 + half - pad):.2f},"
               f"{norm(b, py.min(), py.max(), height - pad, pad):.2f}" for a, b in zip(px, py)]
        return " ".join(pts)

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
    if stamp:
        lines.append(f"<!-- {stamp} -->")
    lines.append(f'<text x="{pad}" y="18" font-size="12">path (Re x, Im x)</text>')
    lines.append(f'<polyline fill="none" stroke="black" points="{poly(xs.real, xs.imag, 0)}"/>')
    lines.append(f'<text x="{half + pad}" y="18" font-size="12">log|z| vs t</text>')
    lines.append(f'<polyline fill="none" stroke="black" points="{poly(t, lz, half)}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
