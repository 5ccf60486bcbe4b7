"""Singular points of the foliation at infinity and semi-completeness checks.

Singular points are the common zeros of the reduced pair (a, b).  Each one
gets the eigenvalues of the Jacobian of (a, b), the residues
-Hstar / (Pstar lambda) of omega_1 along the eigen-directions, and a class.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .polyfield import (InfinityChartField, MultiPoly, PolyError, PolyVectorField, poly_gcd,
                        resultant, rotate_chart, to_infinity_chart)

CERT_TOL = 1e-9
ZERO_EIG_TOL = 1e-9
RATIO_TOL = 1e-8


# ---------------------------------------------------------------------------
# locating singular points
# ---------------------------------------------------------------------------


def _scale(*polys: MultiPoly) -> float:
    return max([1.0] + [p.max_abs_coeff() for p in polys if p is not None])


def _newton_polish(a: MultiPoly, b: MultiPoly, p, iters: int = 60):
    ax, ay, bx, by = a.diff(0), a.diff(1), b.diff(0), b.diff(1)
    x, y = complex(p[0]), complex(p[1])
    for _ in range(iters):
        f = np.array([a(x, y), b(x, y)])
        J = np.array([[ax(x, y), ay(x, y)], [bx(x, y), by(x, y)]])
        try:
            step = np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        x, y = x - step[0], y - step[1]
        if np.max(np.abs(step)) < 1e-15 * max(1.0, abs(x), abs(y)):
            break
    return x, y


def find_singularities(chart: InfinityChartField, perturb: float = 0.0, seed: int = 0) -> list[tuple]:
    """All affine common zeros of (a, b), each certified by |a| + |b| < 1e-9.

    Candidates come from the roots of the resultant in y, refined by Newton's
    method.  ``perturb`` jitters the Newton starting points (used to check
    that downstream quantities do not depend on the polishing path).
    """
    if chart.dim == 1:
        if chart.P.is_constant():
            return []
        roots = np.roots(chart.P.univariate_coeffs())
        return [(complex(r),) for r in _dedupe_1d(roots)]
    a, b = chart.a, chart.b
    if a.is_constant() and not a.is_zero() or b.is_constant() and not b.is_zero():
        return []
    R = resultant(a, b, 1)
    if R.is_zero():
        common = poly_gcd(a, b)
        raise PolyError(f"a and b share the factor {common}; the singular set is a curve")
    rng = np.random.default_rng(seed)
    scale = _scale(a, b)
    xroots = np.roots(R.set_var(1, 0).univariate_coeffs()) if R.degree > 0 else []
    found: list[tuple[complex, complex]] = []
    for x0 in xroots:
        cands = []
        for poly in (a, b):
            uy = poly.set_var(0, x0)
            if uy.degree >= 1:
                cands.extend(np.roots(uy.univariate_coeffs()))
        for y0 in cands:
            if abs(a(x0, y0)) + abs(b(x0, y0)) > 1e-3 * scale * max(1.0, abs(x0), abs(y0)) ** max(a.degree, b.degree):
                continue
            start = (x0, y0)
            if perturb:
                start = (x0 + perturb * complex(*rng.normal(size=2)), y0 + perturb * complex(*rng.normal(size=2)))
            x, y = _newton_polish(a, b, start)
            if abs(a(x, y)) + abs(b(x, y)) >= CERT_TOL * scale:
                continue
            if all(abs(x - u) + abs(y - v) > 1e-7 * max(1.0, abs(x)) for u, v in found):
                found.append((x, y))
    found.sort(key=lambda q: (round(q[0].real, 9), round(q[0].imag, 9), round(q[1].real, 9), round(q[1].imag, 9)))
    return [(_clean(x), _clean(y)) for x, y in found]


def _clean(v: complex, tol: float = 1e-13) -> complex:
    re = 0.0 if abs(v.real) < tol else v.real
    im = 0.0 if abs(v.imag) < tol else v.imag
    return complex(re, im)


def _dedupe_1d(roots):
    out = []
    for r in roots:
        if all(abs(r - s) > 1e-7 * max(1.0, abs(r)) for s in out):
            out.append(_clean(complex(r)))
    return sorted(out, key=lambda v: (v.real, v.imag))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


@dataclass
class FoliationSingularity:
    location: tuple
    eigenvalues: tuple
    H_value: complex
    classification: str
    residues: tuple
    pd_obstruction: complex | None = None
    flow_role: str = "none"
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        c = lambda v: None if v is None else [complex(v).real, complex(v).imag]
        return {
            "location": [c(v) for v in self.location],
            "eigenvalues": [c(v) for v in self.eigenvalues],
            "H_value": c(self.H_value),
            "classification": self.classification,
            "residues": [c(v) for v in self.residues],
            "pd_obstruction": c(self.pd_obstruction),
            "flow_role": self.flow_role,
            "detail": {k: v for k, v in self.detail.items() if isinstance(v, (str, int, float, bool, type(None)))},
        }


def jacobian(chart: InfinityChartField, p) -> np.ndarray:
    a, b = chart.a, chart.b
    return np.array([[a.diff(0)(*p), a.diff(1)(*p)], [b.diff(0)(*p), b.diff(1)(*p)]], dtype=complex)


def _is_real(v: complex, tol: float = RATIO_TOL) -> bool:
    return abs(v.imag) <= tol * max(1.0, abs(v))


def _unit_eigvecs(J: np.ndarray, lams: np.ndarray) -> np.ndarray:
    cols = []
    for lam in lams:
        M = J - lam * np.eye(2)
        # null vector of a rank-one 2x2 matrix from its largest row
        row = M[np.argmax(np.abs(M).sum(axis=1))]
        v = np.array([-row[1], row[0]]) if np.abs(row).max() > 0 else np.array([1, 0], dtype=complex)
        v = v / np.linalg.norm(v)
        k = int(np.argmax(np.abs(v)))
        v = v * (abs(v[k]) / v[k])
        cols.append(v)
    return np.array(cols).T


def poincare_dulac_obstruction(chart: InfinityChartField, p, N: int, jet_order: int) -> complex:
    """Resonant coefficient of u^N d/dw after removing non-resonant terms.

    The pair (a, b) is written in unit eigen-coordinates (u, w) with
    eigenvalues (lambda, N lambda).  Non-resonant monomials are removed degree
    by degree up to ``jet_order`` by near-identity changes; what remains in
    front of u^N in the w-equation decides formal linearizability.
    """
    J = jacobian(chart, p)
    lams = np.linalg.eigvals(J)
    lams = lams[np.argsort(np.abs(lams))]
    E = _unit_eigvecs(J, lams)
    Einv = np.linalg.inv(E)
    u, w = MultiPoly.var(2, 0), MultiPoly.var(2, 1)
    shift = [u * E[0, 0] + w * E[0, 1] + p[0], u * E[1, 0] + w * E[1, 1] + p[1]]
    raw = [chart.a.substitute(shift), chart.b.substitute(shift)]
    V = [(raw[0] * Einv[i, 0] + raw[1] * Einv[i, 1]).truncate(jet_order) for i in range(2)]
    # linear part is diag(lams) up to rounding; force it
    for i in range(2):
        for e in ((1, 0), (0, 1)):
            V[i] = V[i] - MultiPoly(2, {e: V[i].coeff(e)})
        V[i] = V[i] + MultiPoly(2, {(1, 0) if i == 0 else (0, 1): lams[i]})
    tol = 1e-9 * abs(lams[0])
    for k in range(2, jet_order + 1):
        h = [MultiPoly.zero(2), MultiPoly.zero(2)]
        for i in range(2):
            for e, c in V[i].homogeneous_part(k).items():
                delta = e[0] * lams[0] + e[1] * lams[1] - lams[i]
                if abs(delta) > tol:
                    h[i] = h[i] + MultiPoly(2, {e: c / delta})
        if all(hi.is_zero() for hi in h):
            continue
        V = _apply_near_identity(V, h, jet_order)
    return V[1].coeff((N, 0))


def _apply_near_identity(V, h, order):
    """Field in eta for the change xi = eta + h(eta), truncated at ``order``."""
    u, w = MultiPoly.var(2, 0), MultiPoly.var(2, 1)
    sub = [u + h[0], w + h[1]]
    Vs = [v.substitute(sub).truncate(order) for v in V]
    Dh = [[h[0].diff(0), h[0].diff(1)], [h[1].diff(0), h[1].diff(1)]]
    # (I + Dh)^-1 = sum_j (-Dh)^j, truncated
    inv = [[MultiPoly.constant(2, 1), MultiPoly.zero(2)], [MultiPoly.zero(2), MultiPoly.constant(2, 1)]]
    power = [row[:] for row in inv]
    for _ in range(order):
        power = [[sum(((-Dh[i][k]) * power[k][j] for k in range(2)), MultiPoly.zero(2)).truncate(order)
                  for j in range(2)] for i in range(2)]
        if all(power[i][j].is_zero() for i in range(2) for j in range(2)):
            break
        inv = [[inv[i][j] + power[i][j] for j in range(2)] for i in range(2)]
    return [(inv[i][0] * Vs[0] + inv[i][1] * Vs[1]).truncate(order) for i in range(2)]


def _integer_ratio(lams) -> int | None:
    small, big = sorted(lams, key=abs)
    if abs(small) == 0:
        return None
    r = big / small
    N = round(r.real)
    if N >= 1 and abs(r - N) < RATIO_TOL * max(1.0, N):
        return int(N)
    return None


def classify_singularity(chart: InfinityChartField, p, jet_order: int | None = None) -> FoliationSingularity:
    """Eigenvalues, class and residues of a singular point of (a, b)."""
    p = tuple(complex(v) for v in p)
    J = jacobian(chart, p)
    lams = np.linalg.eigvals(J)
    if np.allclose(J, np.diag(np.diag(J)), atol=1e-14 * max(1.0, np.abs(J).max())):
        lams = np.diag(J).copy()
    lams = tuple(_clean(complex(v)) for v in lams)
    H_val = chart.H(*p)
    hs, ps = chart.Hstar(*p), chart.Pstar(*p)
    jnorm = max(np.abs(J).max(), 1e-300)
    zero = [abs(v) < ZERO_EIG_TOL * jnorm for v in lams]
    detail: dict = {}
    if abs(ps) > 1e-12:
        residues = tuple(_clean(-hs / (ps * v)) if not z else None for v, z in zip(lams, zero))
    else:
        residues = tuple(None for _ in lams)
        detail["note"] = "Pstar vanishes here; residues are not simple-pole residues"
    pd = None
    if all(zero):
        cls = "degenerate"
    elif any(zero):
        cls = "degenerate"
        detail["note"] = "one eigenvalue inside the line at infinity vanishes"
    elif abs(hs) < 1e-12 * max(1.0, chart.Hstar.max_abs_coeff()):
        cls = "codim1-saddle-node"
    else:
        N = _integer_ratio(lams)
        sign_ref = -hs / ps if abs(ps) > 1e-12 else 1.0
        normalized = [v / sign_ref for v in lams]
        positive = all(_is_real(v) and v.real > 0 for v in normalized)
        ratio = lams[1] / lams[0]
        if _is_real(ratio):
            detail["ratio_type"] = "siegel" if ratio.real < 0 else "node"
        else:
            detail["ratio_type"] = "complex"
        cls = "dicritical" if positive else "nondegenerate"
        if N is not None:
            order = N + 2 if jet_order is None else jet_order
            detail["resonance"] = N
            if N == 1:
                nil = J - lams[0] * np.eye(2)
                pd = complex(np.abs(nil).max()) if np.abs(nil).max() > 1e-10 * jnorm else 0j
                detail["pd_verdict"] = "formal, order-limited"
            elif order < N:
                detail["pd_verdict"] = "inapplicable: jet_order below the resonance degree"
            else:
                pd = poincare_dulac_obstruction(chart, p, N, order)
                detail["pd_verdict"] = "formal, order-limited"
            if pd is not None and abs(pd) > 1e-9 * max(1.0, jnorm):
                cls = "poincare-dulac-resonant"
    role = _flow_role(residues)
    return FoliationSingularity(location=tuple(_clean(v) for v in p), eigenvalues=lams, H_value=H_val,
                                classification=cls, residues=residues, pd_obstruction=pd,
                                flow_role=role, detail=detail)


def _flow_role(residues) -> str:
    if not residues or any(r is None for r in residues):
        return "none"
    if not all(_is_real(r, 1e-9) for r in residues):
        return "spiral"
    signs = {r.real > 0 for r in residues}
    if signs == {False}:
        return "sink"
    if signs == {True}:
        return "source"
    return "saddle"


def singularity_table(chart: InfinityChartField, jet_order: int | None = None) -> list[FoliationSingularity]:
    return [classify_singularity(chart, p, jet_order) for p in find_singularities(chart)]


def table_to_csv(rows: Sequence[FoliationSingularity]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "lambda1", "lambda2", "class", "residue1", "residue2", "flow_role"])
    for r in rows:
        loc = list(r.location) + [None] * (2 - len(r.location))
        lam = list(r.eigenvalues) + [None] * (2 - len(r.eigenvalues))
        res = list(r.residues) + [None] * (2 - len(r.residues))
        w.writerow([_fmt(v) for v in loc] + [_fmt(v) for v in lam] + [r.classification]
                   + [_fmt(v) for v in res] + [r.flow_role])
    return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    v = complex(v)
    return f"{v.real:.12g}{v.imag:+.12g}j"


# ---------------------------------------------------------------------------
# necessary conditions for semi-completeness
# ---------------------------------------------------------------------------


def rational_approx(v: complex, bound: int = 64, tol: float = 1e-8) -> Fraction | None:
    """Continued-fraction reconstruction of v with denominator at most ``bound``."""
    if abs(v.imag) > tol:
        return None
    f = Fraction(v.real).limit_denominator(bound)
    return f if abs(float(f) - v.real) <= tol else None


@dataclass
class SemicompleteReport:
    verdicts: list = field(default_factory=list)

    def add(self, name: str, status: str, detail: str) -> None:
        self.verdicts.append((name, status, detail))

    @property
    def failed(self) -> list:
        return [v for v in self.verdicts if v[1] == "fail"]

    def status(self, name: str) -> str:
        return next(s for n, s, _ in self.verdicts if n == name)

    def to_json(self) -> list:
        return [{"check": n, "status": s, "detail": d} for n, s, d in self.verdicts]


def semicomplete_report(X: PolyVectorField | None = None, chart: InfinityChartField | None = None,
                        seed: int = 0, bound: int = 64) -> SemicompleteReport:
    """Evaluate the necessary conditions for semi-completeness on one chart.

    Without an explicit chart a generic one is drawn with ``rotate_chart`` so
    that every singular point at infinity is affine; if that fails, the
    identity chart is used and the report says so.
    """
    if chart is None:
        try:
            chart = rotate_chart(X, seed)
        except PolyError:
            chart = to_infinity_chart(X)
    rep = SemicompleteReport()
    d = chart.d
    table = singularity_table(chart) if chart.dim == 2 else []
    with_h = [s for s in table if abs(s.H_value) > 1e-12]
    # (i) degree two wherever H does not vanish at a singular point
    if not with_h:
        rep.add("degree", "inapplicable", "no singular point with H != 0")
    else:
        rep.add("degree", "pass" if d == 2 else "fail", f"d = {d} with {len(with_h)} singular points where H != 0")
    # (ii) rational residues and (iii) asymptotic order in [0, 2]
    bad_q, bad_o, notes = [], [], []
    for s in with_h:
        for r in s.residues:
            if r is None:
                continue
            q = rational_approx(-r, bound)
            notes.append(f"{_fmt(-r)}")
            if q is None:
                bad_q.append(s.location)
            elif not (0 <= 1 - q <= 2):
                bad_o.append(s.location)
    if not with_h:
        rep.add("rational-ratio", "inapplicable", "no singular point with H != 0")
        rep.add("asymptotic-order", "inapplicable", "no singular point with H != 0")
    else:
        rep.add("rational-ratio", "fail" if bad_q else "pass",
                f"H/lambda values {', '.join(notes)}; denominator bound {bound}")
        rep.add("asymptotic-order", "fail" if bad_o or bad_q else "pass",
                "1 - H/lambda must lie in [0, 2]" + (f"; violated at {bad_o}" if bad_o else ""))
    # (iv) the factor Pstar
    if chart.Pstar.is_constant():
        rep.add("pstar", "pass", "Pstar is constant")
    elif d >= 3:
        rep.add("pstar", "fail", f"Pstar = {chart.Pstar} is not constant for d = {d}")
    else:
        fdeg = max(chart.a.degree, chart.b.degree) if chart.b is not None else chart.a.degree
        rep.add("pstar", "pass" if fdeg <= 1 else "fail",
                f"d = 2 with Pstar = {chart.Pstar}; foliation at infinity has degree {fdeg}")
    # (v) integer eigenvalue ratios at dicritical points
    dicrit = [s for s in table if s.classification == "dicritical"]
    if not dicrit:
        rep.add("dicritical-ratios", "inapplicable", "no dicritical singular point")
    else:
        bad = []
        for s in dicrit:
            lo = min(s.eigenvalues, key=abs)
            for v in s.eigenvalues:
                r = v / lo
                if not (_is_real(r) and abs(r.real - round(r.real)) < RATIO_TOL and round(r.real) >= 1):
                    bad.append(s.location)
        rep.add("dicritical-ratios", "fail" if bad else "pass",
                f"{len(dicrit)} dicritical points" + (f"; non-integer at {bad}" if bad else ""))
    # (vi) H(p) = 0 forces omega_1 holomorphic along separatrices
    zero_h = [s for s in table if abs(s.H_value) <= 1e-12]
    if not zero_h:
        rep.add("holomorphic-omega", "inapplicable", "H does not vanish at any singular point")
    else:
        ok = all(r is None or abs(r) < 1e-9 for s in zero_h for r in s.residues)
        rep.add("holomorphic-omega", "pass" if ok else "fail",
                f"{len(zero_h)} singular points with H = 0; residues there vanish" if ok else "nonzero residue where H = 0")
    return rep


def extension_sign_report(m: int, n: int) -> dict:
    """Sign report on the exponents of the monomial extension x^m y^n.

    The passage bound is stated for non-positive exponents; nothing beyond
    the sign check is attempted (no blow-up reduction).
    """
    ok = m <= 0 and n <= 0
    return {"m": m, "n": n, "bound_valid": ok,
            "detail": "both exponents non-positive" if ok else "positive exponent: bound not established"}


# ---------------------------------------------------------------------------
# passages near Siegel-type points
# ---------------------------------------------------------------------------


@dataclass
class SiegelAudit:
    components: list
    K: float
    k: float | None
    K_apriori: float
    per_component_ok: bool
    apriori_ok: bool
    sum_ok: bool
    contraction_ok: bool
    flags: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"components": self.components, "K": self.K, "k": self.k, "K_apriori": self.K_apriori,
                "per_component_ok": self.per_component_ok, "apriori_ok": self.apriori_ok,
                "sum_ok": self.sum_ok, "contraction_ok": self.contraction_ok, "flags": self.flags}


def siegel_passage_audit(chart: InfinityChartField, p, eps: float, traces: Sequence) -> SiegelAudit:
    """Measure time-integral increments of traces crossing U_eps around p.

    For each component of a trace inside the polydisc U_eps the increment
    |Delta T_i| and entry height z_i are recorded.  K is the largest
    |Delta T_i| / |z_i|^(d-1) and k the largest ratio of consecutive entry
    heights; the geometric bound K |z0|^(d-1) / (1 - k^(d-1)) is then checked
    per trace.  K is also compared with sup |1/H| / ((d - 1) cos theta) along
    the passage, which bounds it a priori.
    """
    sing = classify_singularity(chart, p)
    lam = sing.eigenvalues
    ratio = lam[1] / lam[0] if abs(lam[0]) > 0 else None
    if ratio is None or not _is_real(ratio) or ratio.real >= 0 or abs(sing.H_value) < 1e-12:
        raise ValueError("siegel_passage_audit needs a point with negative real eigenvalue ratio and H != 0")
    d = chart.d
    comps = []
    per_trace = []
    K = 0.0
    K_apriori = 0.0
    kmax = None
    for ti, tr in enumerate(traces):
        states = tr.states
        inside = [max(abs(s.x - p[0]), abs(s.y - p[1])) <= eps for s in states]
        runs, start = [], None
        for i, flag in enumerate(inside + [False]):
            if flag and start is None:
                start = i
            elif not flag and start is not None:
                runs.append((start, i - 1))
                start = None
        entries = []
        total = 0.0
        for i0, i1 in runs:
            zi = states[i0].z
            dT = abs(states[i1].T - states[i0].T)
            inv_h = max(1 / abs(chart.H(states[i].x, states[i].y)) for i in range(i0, i1 + 1))
            K_apriori = max(K_apriori, inv_h / ((d - 1) * math.cos(tr.theta)))
            K = max(K, dT / abs(zi) ** (d - 1))
            comps.append({"trace": ti, "t_entry": states[i0].t, "t_exit": states[i1].t,
                          "z_entry_abs": abs(zi), "dT_abs": dT})
            entries.append(abs(zi))
            total += dT
        k = None
        if len(entries) >= 2:
            k = max(entries[i + 1] / entries[i] for i in range(len(entries) - 1))
            kmax = k if kmax is None else max(kmax, k)
        if entries:
            per_trace.append((total, abs(tr.states[0].z), k))
    flags = []
    tol = 1e-9
    per_ok = all(c["dT_abs"] <= K * c["z_entry_abs"] ** (d - 1) * (1 + tol) + tol for c in comps)
    apriori_ok = all(c["dT_abs"] <= K_apriori * c["z_entry_abs"] ** (d - 1) * (1 + 1e-6) + tol for c in comps)
    sum_ok = True
    for total, z0, k in per_trace:
        kk = 0.0 if k is None else k
        if kk >= 1:
            sum_ok = False
            continue
        if total > K * z0 ** (d - 1) / (1 - kk ** (d - 1)) * (1 + tol) + tol:
            sum_ok = False
    contraction_ok = kmax is None or kmax < 1
    if not contraction_ok:
        flags.append("contraction premise violated: k >= 1")
    if not comps:
        flags.append("no trace entered U_eps")
    return SiegelAudit(comps, K, kmax, K_apriori, per_ok, apriori_ok, sum_ok, contraction_ok, flags)
