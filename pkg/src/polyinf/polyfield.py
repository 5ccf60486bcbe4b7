"""Sparse polynomials over C and the projective chart at infinity.

A homogeneous field X = A d/dx + B d/dy + C d/dz of degree d descends, in the
chart z = 1 of the hyperplane at infinity, to

    F(x, y) = A(x, y, 1) - x C(x, y, 1)
    G(x, y) = B(x, y, 1) - y C(x, y, 1)
    H(x, y) = -C(x, y, 1)

and the extended field reads z^(1-d) (F d/dx + G d/dy + z H d/dz).  The chart
then splits off the common factor P = gcd(F, G) and its part shared with H.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import sympy

PRUNE_TOL = 1e-14


class PolyError(ValueError):
    """Raised for algebraic preconditions that fail (radial input, gcd trouble)."""


def _as_complex(c) -> complex:
    return complex(c)


class MultiPoly:
    """Sparse polynomial in ``n_vars`` variables with complex coefficients.

    Terms live in a dict keyed by exponent tuples.  Coefficients with modulus
    at or below 1e-14 are dropped on construction, which keeps equality tests
    meaningful after floating arithmetic.
    """

    __slots__ = ("n_vars", "_terms", "__dict__")

    def __init__(self, n_vars: int, terms: Mapping[Sequence[int], complex] | None = None):
        if n_vars < 1:
            raise ValueError("n_vars must be positive")
        self.n_vars = int(n_vars)
        clean: dict[tuple[int, ...], complex] = {}
        for exp, coef in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.n_vars or min(exp) < 0:
                raise ValueError(f"bad exponent {exp} for {self.n_vars} variables")
            clean[exp] = clean.get(exp, 0j) + _as_complex(coef)
        self._terms = {e: c for e, c in clean.items() if abs(c) > PRUNE_TOL}

    # constructors

    @classmethod
    def zero(cls, n_vars: int) -> "MultiPoly":
        return cls(n_vars)

    @classmethod
    def constant(cls, n_vars: int, c: complex) -> "MultiPoly":
        return cls(n_vars, {(0,) * n_vars: c})

    @classmethod
    def var(cls, n_vars: int, i: int) -> "MultiPoly":
        exp = [0] * n_vars
        exp[i] = 1
        return cls(n_vars, {tuple(exp): 1})

    @classmethod
    def monomial(cls, exp: Sequence[int], coef: complex = 1) -> "MultiPoly":
        return cls(len(exp), {tuple(exp): coef})

    # basic access

    @property
    def terms(self) -> Mapping[tuple[int, ...], complex]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, exp: Sequence[int]) -> complex:
        return self._terms.get(tuple(exp), 0j)

    @property
    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def degree_in(self, i: int) -> int:
        if not self._terms:
            return -1
        return max(e[i] for e in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return self.degree <= 0

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self._terms}) <= 1

    def homogeneous_part(self, k: int) -> "MultiPoly":
        return MultiPoly(self.n_vars, {e: c for e, c in self._terms.items() if sum(e) == k})

    def truncate(self, max_degree: int) -> "MultiPoly":
        return MultiPoly(self.n_vars, {e: c for e, c in self._terms.items() if sum(e) <= max_degree})

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def leading_coeff(self) -> complex:
        """Coefficient of the largest exponent in graded lexicographic order."""
        if not self._terms:
            return 0j
        return self._terms[max(self._terms, key=lambda e: (sum(e), e))]

    # arithmetic

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.n_vars != self.n_vars:
                raise ValueError("variable count mismatch")
            return other
        return MultiPoly.constant(self.n_vars, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, 0j) + c
        return MultiPoly(self.n_vars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.n_vars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            c = _as_complex(other)
            return MultiPoly(self.n_vars, {e: c * v for e, v in self._terms.items()})
        other = self._coerce(other)
        out: dict[tuple[int, ...], complex] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0j) + c1 * c2
        return MultiPoly(self.n_vars, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, MultiPoly):
            return exact_div(self, other)
        return self * (1.0 / _as_complex(other))

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = MultiPoly.constant(self.n_vars, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            if isinstance(other, (int, float, complex)):
                other = MultiPoly.constant(self.n_vars, other)
            else:
                return NotImplemented
        return self.n_vars == other.n_vars and self._terms == other._terms

    def __hash__(self):
        return hash((self.n_vars, frozenset(self._terms.items())))

    def allclose(self, other: "MultiPoly", tol: float = 1e-12) -> bool:
        """Coefficient-wise comparison relative to the larger coefficient scale."""
        other = self._coerce(other)
        scale = max(1.0, self.max_abs_coeff(), other.max_abs_coeff())
        return (self - other).max_abs_coeff() <= tol * scale

    def diff(self, i: int) -> "MultiPoly":
        out = {}
        for e, c in self._terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = c * e[i]
        return MultiPoly(self.n_vars, out)

    def shift_down(self, i: int, k: int = 1) -> "MultiPoly | None":
        """Divide by x_i^k if every term allows it, else None."""
        out = {}
        for e, c in self._terms.items():
            if e[i] < k:
                return None
            ne = list(e)
            ne[i] -= k
            out[tuple(ne)] = c
        return MultiPoly(self.n_vars, out)

    # evaluation

    @cached_property
    def _arrays(self):
        if not self._terms:
            return np.zeros((0, self.n_vars), dtype=int), np.zeros(0, dtype=complex)
        exps = np.array(list(self._terms.keys()), dtype=int)
        coefs = np.array(list(self._terms.values()), dtype=complex)
        return exps, coefs

    def __call__(self, *point) -> complex:
        if len(point) == 1 and np.ndim(point[0]) == 1 and self.n_vars > 1:
            point = tuple(point[0])
        if len(point) != self.n_vars:
            raise ValueError(f"expected {self.n_vars} coordinates, got {len(point)}")
        exps, coefs = self._arrays
        if not len(coefs):
            return 0j
        pt = np.asarray(point, dtype=complex)
        mono = np.prod(pt[None, :] ** exps, axis=1)
        return complex(mono @ coefs)

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at an (m, n_vars) array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        exps, coefs = self._arrays
        if not len(coefs):
            return np.zeros(len(pts), dtype=complex)
        mono = np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
        return mono @ coefs

    def substitute(self, images: Sequence["MultiPoly"]) -> "MultiPoly":
        """Compose: replace variable i by the polynomial images[i]."""
        if len(images) != self.n_vars:
            raise ValueError("need one image per variable")
        m = images[0].n_vars
        powers: list[dict[int, MultiPoly]] = [{0: MultiPoly.constant(m, 1)} for _ in images]

        def pw(i, k):
            cache = powers[i]
            if k not in cache:
                cache[k] = pw(i, k - 1) * images[i]
            return cache[k]

        out = MultiPoly.zero(m)
        for e, c in self._terms.items():
            term = MultiPoly.constant(m, c)
            for i, k in enumerate(e):
                if k:
                    term = term * pw(i, k)
            out = out + term
        return out

    def linear_substitute(self, M) -> "MultiPoly":
        """Return p(M u) for a square matrix M."""
        M = np.asarray(M, dtype=complex)
        n = self.n_vars
        images = [MultiPoly(n, {tuple(int(j == k) for j in range(n)): M[i, k] for k in range(n)})
                  for i in range(n)]
        return self.substitute(images)

    def rename(self, n_vars: int, positions: Sequence[int]) -> "MultiPoly":
        """Embed into ``n_vars`` variables, variable i going to slot positions[i]."""
        out = {}
        for e, c in self._terms.items():
            ne = [0] * n_vars
            for i, k in enumerate(e):
                ne[positions[i]] += k
            out[tuple(ne)] = c
        return MultiPoly(n_vars, out)

    def set_var(self, i: int, value: complex) -> "MultiPoly":
        """Specialize variable i to a constant, dropping it from the variable list."""
        out: dict[tuple[int, ...], complex] = {}
        for e, c in self._terms.items():
            ne = e[:i] + e[i + 1:]
            out[ne] = out.get(ne, 0j) + c * value ** e[i]
        if self.n_vars == 1:
            return MultiPoly(1, {(0,): out.get((), 0j)})
        return MultiPoly(self.n_vars - 1, out)

    def univariate_coeffs(self) -> np.ndarray:
        """Dense coefficient vector, highest power first (numpy.roots order)."""
        if self.n_vars != 1:
            raise ValueError("not univariate")
        deg = max(self.degree, 0)
        out = np.zeros(deg + 1, dtype=complex)
        for (k,), c in self._terms.items():
            out[deg - k] = c
        return out

    # display

    def __repr__(self):
        if not self._terms:
            return f"MultiPoly({self.n_vars}, 0)"
        names = _var_names(self.n_vars)
        parts = []
        for e in sorted(self._terms, key=lambda e: (-sum(e), tuple(-k for k in e))):
            c = self._terms[e]
            mono = "*".join(f"{names[i]}^{k}" if k > 1 else names[i] for i, k in enumerate(e) if k)
            cs = _fmt_coef(c)
            parts.append(f"{cs}*{mono}" if mono else cs)
        return " + ".join(parts)

    def to_json(self) -> list[dict]:
        return [{"exp": list(e), "re": c.real, "im": c.imag}
                for e, c in sorted(self._terms.items())]

    @classmethod
    def from_json(cls, n_vars: int, data: Iterable[Mapping]) -> "MultiPoly":
        terms: dict[tuple[int, ...], complex] = {}
        for t in data:
            e = tuple(int(k) for k in t["exp"])
            terms[e] = terms.get(e, 0j) + complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))
        return cls(n_vars, terms)


def _var_names(n: int) -> list[str]:
    return ["x", "y", "z"][:n] if n <= 3 else [f"x{i}" for i in range(n)]


def _fmt_coef(c: complex) -> str:
    if c.imag == 0:
        r = c.real
        return str(int(r)) if r == int(r) else repr(r)
    return repr(c)


# ---------------------------------------------------------------------------
# exactness layer: rational lift and sympy-backed gcd / division
# ---------------------------------------------------------------------------

LIFT_DENOMINATOR = 10**6


def _lift_real(v: float) -> Fraction | None:
    f = Fraction(v).limit_denominator(LIFT_DENOMINATOR)
    if abs(float(f) - v) <= 1e-12 * max(1.0, abs(v)):
        return f
    return None


def rational_lift(p: MultiPoly) -> dict[tuple[int, ...], tuple[Fraction, Fraction]] | None:
    """Snap every coefficient to a Gaussian rational, or None if that fails."""
    out = {}
    for e, c in p.items():
        re, im = _lift_real(c.real), _lift_real(c.imag)
        if re is None or im is None:
            return None
        out[e] = (re, im)
    return out


def _gens(n: int):
    return sympy.symbols(" ".join(_var_names(n)), seq=True)


def to_sympy(p: MultiPoly, gens=None) -> sympy.Poly | None:
    """Exact sympy Poly over QQ_I when the rational lift succeeds."""
    lift = rational_lift(p)
    if lift is None:
        return None
    gens = gens or _gens(p.n_vars)
    expr = sympy.Integer(0)
    for e, (re, im) in lift.items():
        coef = sympy.Rational(re.numerator, re.denominator) + sympy.I * sympy.Rational(im.numerator, im.denominator)
        expr += coef * sympy.Mul(*[g**k for g, k in zip(gens, e)])
    return sympy.Poly(expr, *gens, domain=sympy.QQ_I)


def from_sympy(poly: sympy.Poly, n_vars: int) -> MultiPoly:
    terms = {}
    for monom, coef in poly.terms():
        terms[tuple(monom)] = complex(sympy.N(coef, 30))
    return MultiPoly(n_vars, terms)


def _normalize_unit(p: MultiPoly) -> MultiPoly:
    lc = p.leading_coeff()
    return p * (1 / lc) if lc else p


def _approx_common_factor(p: MultiPoly, q: MultiPoly, tol: float) -> bool:
    """Detect a shared factor by restricting both to random complex lines."""
    rng = np.random.default_rng(12345)
    n = p.n_vars
    hits = 0
    trials = 3
    for _ in range(trials):
        base = rng.normal(size=n) + 1j * rng.normal(size=n)
        direc = rng.normal(size=n) + 1j * rng.normal(size=n)
        images = [MultiPoly(1, {(0,): base[i], (1,): direc[i]}) for i in range(n)]
        pu, qu = p.substitute(images), q.substitute(images)
        if pu.degree < 1 or qu.degree < 1:
            continue
        rp = np.roots(pu.univariate_coeffs())
        rq = np.roots(qu.univariate_coeffs())
        dist = np.abs(rp[:, None] - rq[None, :]) / (1 + np.abs(rp[:, None]))
        if dist.min() < math.sqrt(tol):
            hits += 1
    return hits == trials


def poly_gcd(p: MultiPoly, q: MultiPoly, tol: float = 1e-10) -> MultiPoly:
    """Greatest common divisor, normalized to leading coefficient 1.

    Exact over Q(i) when both inputs lift to Gaussian rationals.  Otherwise a
    random-line test decides whether a common factor exists; if it does, the
    approximate route cannot recover it reliably and PolyError is raised.
    """
    n = p.n_vars
    if p.is_zero():
        return _normalize_unit(q) if not q.is_zero() else MultiPoly.zero(n)
    if q.is_zero():
        return _normalize_unit(p)
    if p.is_constant() or q.is_constant():
        return MultiPoly.constant(n, 1)
    sp, sq = to_sympy(p), to_sympy(q)
    if sp is not None and sq is not None:
        g = sp.gcd(sq)
        return _normalize_unit(from_sympy(g, n))
    if _approx_common_factor(p, q, tol):
        raise PolyError("inputs share a factor but have non-rational coefficients; "
                        "approximate gcd extraction is not supported")
    return MultiPoly.constant(n, 1)


def exact_div(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    """Quotient p / q, raising PolyError when q does not divide p."""
    if q.is_zero():
        raise ZeroDivisionError("division by zero polynomial")
    if q.is_constant():
        return p * (1 / q.coeff((0,) * q.n_vars))
    sp, sq = to_sympy(p), to_sympy(q)
    if sp is not None and sq is not None:
        quo, rem = sp.div(sq)
        if not rem.is_zero:
            raise PolyError("polynomial division leaves a remainder")
        return from_sympy(quo, p.n_vars)
    return _float_div(p, q)


def _float_div(p: MultiPoly, q: MultiPoly, tol: float = 1e-9) -> MultiPoly:
    # multivariate long division in graded-lex order
    order = lambda e: (sum(e), e)
    lead_q = max((e for e, _ in q.items()), key=order)
    lc_q = q.coeff(lead_q)
    rem = p
    quo = MultiPoly.zero(p.n_vars)
    scale = max(1.0, p.max_abs_coeff())
    for _ in range(10_000):
        if rem.max_abs_coeff() <= tol * scale:
            return quo
        lead_r = max((e for e, _ in rem.items()), key=order)
        diff = tuple(a - b for a, b in zip(lead_r, lead_q))
        if min(diff) < 0:
            break
        t = MultiPoly.monomial(diff, rem.coeff(lead_r) / lc_q)
        quo = quo + t
        rem = rem - t * q
    raise PolyError("polynomial division leaves a remainder")


def resultant(p: MultiPoly, q: MultiPoly, var: int) -> MultiPoly:
    """Resultant eliminating variable ``var``; the result keeps all slots."""
    gens = _gens(p.n_vars)
    sp, sq = to_sympy(p, gens), to_sympy(q, gens)
    if sp is None or sq is None:
        ep = sum(complex(c) * sympy.Mul(*[g**k for g, k in zip(gens, e)]) for e, c in p.items())
        eq = sum(complex(c) * sympy.Mul(*[g**k for g, k in zip(gens, e)]) for e, c in q.items())
        r = sympy.resultant(sympy.expand(ep), sympy.expand(eq), gens[var])
        rp = sympy.Poly(r, *gens)
        return MultiPoly(p.n_vars, {tuple(m): complex(c) for m, c in rp.terms()})
    r = sympy.resultant(sp.as_expr(), sq.as_expr(), gens[var])
    return from_sympy(sympy.Poly(r, *gens, domain=sympy.QQ_I), p.n_vars)


# ---------------------------------------------------------------------------
# vector fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PolyVectorField:
    """Polynomial vector field on C^n, n in {2, 3}."""

    n: int
    components: tuple[MultiPoly, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if self.n not in (2, 3):
            raise ValueError("only dimensions 2 and 3 are supported")
        if len(comps) != self.n or any(c.n_vars != self.n for c in comps):
            raise ValueError("components must be n polynomials in n variables")

    def __eq__(self, other):
        return isinstance(other, PolyVectorField) and self.n == other.n and self.components == other.components

    def __hash__(self):
        return hash((self.n, self.components))

    def __add__(self, other: "PolyVectorField") -> "PolyVectorField":
        return PolyVectorField(self.n, tuple(a + b for a, b in zip(self.components, other.components)))

    def scale(self, c: complex) -> "PolyVectorField":
        return PolyVectorField(self.n, tuple(p * c for p in self.components))

    def __repr__(self):
        names = _var_names(self.n)
        return " + ".join(f"({p})d/d{v}" for p, v in zip(self.components, names) if not p.is_zero()) or "0"

    @property
    def degree(self) -> int:
        return max(c.degree for c in self.components)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def is_homogeneous(self) -> bool:
        return len(homogeneous_components(self)) <= 1

    def __call__(self, *point) -> np.ndarray:
        return np.array([c(*point) for c in self.components])

    def pushforward(self, L) -> "PolyVectorField":
        """Field L X(L^-1 u) in the new coordinates u = L x."""
        L = np.asarray(L)
        Linv = _matrix_inverse(L)
        pulled = [c.linear_substitute(Linv) for c in self.components]
        comps = []
        for i in range(self.n):
            acc = MultiPoly.zero(self.n)
            for k in range(self.n):
                if L[i, k] != 0:
                    acc = acc + pulled[k] * complex(L[i, k])
            comps.append(acc)
        return PolyVectorField(self.n, tuple(comps))

    def to_json(self) -> dict:
        return {"n": self.n, "components": [c.to_json() for c in self.components]}

    @classmethod
    def from_json(cls, data: Mapping) -> "PolyVectorField":
        n = int(data["n"])
        comps = data["components"]
        if len(comps) != n:
            raise ValueError(f"expected {n} components, got {len(comps)}")
        return cls(n, tuple(MultiPoly.from_json(n, c) for c in comps))


def _matrix_inverse(L: np.ndarray) -> np.ndarray:
    """Inverse, kept exact for integer matrices with unit determinant."""
    if np.issubdtype(L.dtype, np.integer) or np.all(np.asarray(L) == np.round(np.real(L))):
        M = sympy.Matrix(np.real(L).astype(int).tolist())
        if abs(M.det()) == 1:
            return np.array(M.inv().tolist(), dtype=float)
    return np.linalg.inv(L.astype(complex))


def field_from_dicts(n: int, comps: Sequence[Mapping[Sequence[int], complex]]) -> PolyVectorField:
    return PolyVectorField(n, tuple(MultiPoly(n, c) for c in comps))


def load_field(path) -> PolyVectorField:
    with open(path) as fh:
        data = json.load(fh)
    return PolyVectorField.from_json(data)


def dump_field(X: PolyVectorField, path) -> None:
    with open(path, "w") as fh:
        json.dump(X.to_json(), fh, indent=1, sort_keys=True)


def radial_field(n: int) -> PolyVectorField:
    return PolyVectorField(n, tuple(MultiPoly.var(n, i) for i in range(n)))


def homogeneous_components(X: PolyVectorField) -> list[tuple[int, PolyVectorField]]:
    """Split X into homogeneous pieces, ascending in degree, empty ones omitted."""
    degrees = sorted({sum(e) for c in X.components for e, _ in c.items()})
    return [(k, PolyVectorField(X.n, tuple(c.homogeneous_part(k) for c in X.components)))
            for k in degrees]


def is_radial_multiple(Xd: PolyVectorField, tol: float = 1e-12) -> MultiPoly | None:
    """Return Q with Xd = Q * (radial field), or None."""
    if Xd.is_zero():
        return MultiPoly.zero(Xd.n)
    quotients = []
    for i, c in enumerate(Xd.components):
        q = c.shift_down(i)
        if q is None:
            return None
        quotients.append(q)
    first = quotients[0]
    if all(first.allclose(q, tol) for q in quotients[1:]):
        return first
    return None


# ---------------------------------------------------------------------------
# chart at infinity
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InfinityChartField:
    """The field induced on the chart z = 1 of the hyperplane at infinity.

    ``F, G, H`` live in the n-1 chart variables (``G`` is None when n = 2).
    For non-homogeneous sources ``F_full, G_full, H_full`` carry the extra
    height variable last, so that F_full(x, y, 0) = F.
    """

    F: MultiPoly
    G: MultiPoly | None
    H: MultiPoly
    d: int
    P: MultiPoly
    Pstar: MultiPoly
    Pbar: MultiPoly
    a: MultiPoly
    b: MultiPoly | None
    Hstar: MultiPoly
    generic: bool
    chart: np.ndarray
    axis: int
    homogeneous: bool = True
    F_full: MultiPoly | None = None
    G_full: MultiPoly | None = None
    H_full: MultiPoly | None = None
    source: PolyVectorField | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        """Number of chart variables (1 or 2)."""
        return self.F.n_vars

    @cached_property
    def f(self) -> MultiPoly | None:
        """Top form f with top(F, G) = f (x, y), when the chart is generic."""
        if not self.generic:
            return None
        return self.F.homogeneous_part(self.d + 1).shift_down(0)

    def reduced(self, point) -> tuple[complex, ...]:
        """(Pstar a, Pstar b) / Hstar pieces needed by the direction field."""
        ps = self.Pstar(*point)
        hs = self.Hstar(*point)
        if self.dim == 1:
            return ps * self.a(*point), hs
        return ps * self.a(*point), ps * self.b(*point), hs

    def describe(self) -> dict:
        return {
            "d": self.d,
            "axis": self.axis,
            "chart": np.real_if_close(self.chart).tolist(),
            "generic": self.generic,
            "homogeneous": self.homogeneous,
            "F": repr(self.F),
            "G": repr(self.G) if self.G is not None else None,
            "H": repr(self.H),
            "P": repr(self.P),
            "Pstar": repr(self.Pstar),
            "Pbar": repr(self.Pbar),
            "a": repr(self.a),
            "b": repr(self.b) if self.b is not None else None,
            "Hstar": repr(self.Hstar),
        }


def _axis_permutation(n: int, axis: int) -> np.ndarray:
    order = [i for i in range(n) if i != axis] + [axis]
    return np.eye(n, dtype=int)[order]


def _chart_polys(X: PolyVectorField) -> tuple[MultiPoly, MultiPoly | None, MultiPoly]:
    """(F, G, H) of a homogeneous field whose last variable is the chart height."""
    n = X.n
    one = [MultiPoly.var(n - 1, i) for i in range(n - 1)] + [MultiPoly.constant(n - 1, 1)]
    comps = [c.substitute(one) for c in X.components]
    C = comps[-1]
    F = comps[0] - one[0] * C
    G = comps[1] - one[1] * C if n == 3 else None
    H = -C
    return F, G, H


def _factorize(F, G, H, tol):
    n1 = F.n_vars
    if G is None:
        if F.is_zero():
            raise PolyError("F vanishes identically: the field is a radial multiple")
        lc = F.leading_coeff()
        P = F * (1 / lc)
        a, b = MultiPoly.constant(n1, lc), None
    else:
        P = poly_gcd(F, G, tol)
        if P.is_zero():
            raise PolyError("F and G vanish identically: the field is a radial multiple")
        a, b = exact_div(F, P), exact_div(G, P)
    Pbar = poly_gcd(P, H, tol) if not H.is_zero() else P
    Pstar = exact_div(P, Pbar)
    Hstar = exact_div(H, Pbar)
    return P, Pstar, Pbar, a, b, Hstar


def _top_form_generic(F, G, H, d) -> bool:
    if F.degree != d + 1:
        return False
    if G is None:
        return True
    if G.degree != d + 1:
        return False
    fx = F.homogeneous_part(d + 1).shift_down(0)
    fy = G.homogeneous_part(d + 1).shift_down(1)
    return fx is not None and fy is not None and fx.allclose(fy)


def to_infinity_chart(X: PolyVectorField, axis: int | None = None, transform=None,
                      tol: float = 1e-10) -> InfinityChartField:
    """Chart field at infinity after the linear change ``transform``.

    ``axis`` picks the coordinate set to 1 (default: the last one).  For a
    non-homogeneous X the chart of every homogeneous piece X_i enters the full
    fields as F_full = sum z^(d-i) F_i, and likewise for G and H.
    """
    n = X.n
    axis = n - 1 if axis is None else axis
    L = np.eye(n, dtype=int) if transform is None else np.asarray(transform)
    Y = X if transform is None else X.pushforward(L)
    perm = _axis_permutation(n, axis)
    if axis != n - 1:
        Y = Y.pushforward(perm)
    chart = perm @ L
    pieces = homogeneous_components(Y)
    if not pieces:
        raise PolyError("zero field has no chart at infinity")
    d, Xd = pieces[-1]
    if is_radial_multiple(Xd) is not None:
        raise PolyError("top-degree part is a radial multiple; the chart at infinity degenerates")
    F, G, H = _chart_polys(Xd)
    P, Pstar, Pbar, a, b, Hstar = _factorize(F, G, H, tol)
    generic = _top_form_generic(F, G, H, d)
    homogeneous = len(pieces) == 1
    F_full = G_full = H_full = None
    if not homogeneous:
        F_full, G_full, H_full = _full_chart(pieces, d, n)
    return InfinityChartField(F=F, G=G, H=H, d=d, P=P, Pstar=Pstar, Pbar=Pbar, a=a, b=b,
                              Hstar=Hstar, generic=generic, chart=chart, axis=axis,
                              homogeneous=homogeneous, F_full=F_full, G_full=G_full,
                              H_full=H_full, source=X)


def _full_chart(pieces, d, n):
    slots = list(range(n - 1))
    zvar = MultiPoly.var(n, n - 1)
    acc = [MultiPoly.zero(n) for _ in range(3)]
    for i, Xi in pieces:
        Fi, Gi, Hi = _chart_polys(Xi)
        w = zvar ** (d - i)
        acc[0] = acc[0] + Fi.rename(n, slots) * w
        if Gi is not None:
            acc[1] = acc[1] + Gi.rename(n, slots) * w
        acc[2] = acc[2] + Hi.rename(n, slots) * w
    return acc[0], (acc[1] if n == 3 else None), acc[2]


def line_at_infinity_singular(chart: InfinityChartField) -> list[tuple[complex, complex]]:
    """Singular points of the foliation on the chart's own line at infinity.

    Returned as projective points [x : y].  For a generic chart with
    top(a, b) = g (x, y) they are the common zeros of g and x b' - y a',
    where a', b' are the next-to-top parts.  For one-variable charts the
    point at infinity is singular exactly when deg F < d + 1.
    """
    if chart.dim == 1:
        return [] if chart.F.degree == chart.d + 1 else [(1 + 0j, 0j)]
    a, b = chart.a, chart.b
    e = max(a.degree, b.degree)
    if e < 1:
        # constant direction field: its own direction is tangent, no zeros
        return []
    top_a, top_b = a.homogeneous_part(e), b.homogeneous_part(e)
    g = top_a.shift_down(0)
    gy = top_b.shift_down(1)
    if g is None or gy is None or not g.allclose(gy):
        # top part is not radial: line at infinity is invariant, singular
        # points are the zeros of x top_b - y top_a
        x, y = MultiPoly.var(2, 0), MultiPoly.var(2, 1)
        return _projective_roots(x * top_b - y * top_a)
    x, y = MultiPoly.var(2, 0), MultiPoly.var(2, 1)
    h = x * b.homogeneous_part(e - 1) - y * a.homogeneous_part(e - 1)
    if g.is_constant():
        return []
    if h.is_zero():
        return _projective_roots(g)
    common = poly_gcd(g, h)
    if common.is_constant():
        return []
    return _projective_roots(common)


def _projective_roots(form: MultiPoly) -> list[tuple[complex, complex]]:
    """Roots on P^1 of a binary form."""
    if form.is_zero():
        return []
    k = form.degree
    coeffs = np.zeros(k + 1, dtype=complex)
    for (i, j), c in form.items():
        coeffs[k - i] += c  # polynomial in t = x / y: x^i y^j -> t^i
    roots = []
    nz = np.flatnonzero(np.abs(coeffs) > PRUNE_TOL)
    lead = nz[0]
    for _ in range(lead):
        roots.append((1 + 0j, 0j))  # the point y = 0
    for t in np.roots(coeffs[lead:]):
        roots.append((complex(t), 1 + 0j))
    return roots


def _random_unimodular(rng: np.random.Generator, n: int, steps: int = 3) -> np.ndarray:
    M = np.eye(n, dtype=int)
    for _ in range(steps):
        i, j = rng.choice(n, size=2, replace=False)
        E = np.eye(n, dtype=int)
        E[i, j] = int(rng.choice([-1, 1]))
        M = E @ M
    return M


def rotate_chart(X: PolyVectorField, seed: int = 0, attempts: int = 50,
                 tol: float = 1e-10) -> InfinityChartField:
    """Find a generic chart by random integer unimodular changes of coordinates.

    Integer matrices with determinant one keep rational coefficients rational,
    so the gcd step stays exact.  The identity is tried first; later attempts
    compose more elementary steps, reaching larger coefficients.
    """
    rng = np.random.default_rng(seed)
    top = homogeneous_components(X)
    if not top:
        raise PolyError("zero field has no chart at infinity")
    if is_radial_multiple(top[-1][1]) is not None:
        raise PolyError("top-degree part is a radial multiple; no chart is generic")
    last = "no attempt made"
    for k in range(attempts):
        L = np.eye(X.n, dtype=int) if k == 0 else _random_unimodular(rng, X.n, steps=3 + k // 5)
        try:
            chart = to_infinity_chart(X, transform=L, tol=tol)
        except PolyError as exc:
            last = str(exc)
            continue
        if not chart.generic:
            last = "top forms of F, G are not f(x, y)"
            continue
        if line_at_infinity_singular(chart):
            last = "a singular point lies on the chart's line at infinity"
            continue
        return chart
    raise PolyError(f"no generic chart within {attempts} attempts; last obstruction: {last}")
