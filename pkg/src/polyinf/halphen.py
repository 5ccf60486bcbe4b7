"""Triangle groups, their action on the Chern class 1 line bundle, Poincare
series along geodesic rays, and the egyptian-fraction enumerator.

Generators are built from reflections in the sides of a triangle with angles
pi/m_i in the disc, the plane or the sphere (through stereographic
projection).  Products of two side reflections are rotations of order m_i.
Every Mobius map is kept as an SL(2, C) matrix; the fiber action
z -> c_f sqrt(xi'(w)) z uses the lift's own square root 1/(c w + d), which
makes the action a genuine cocycle.
"""

from __future__ import annotations

import cmath
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

INF = math.inf


class HalphenError(ValueError):
    """Invalid input for a triangle-group operation."""


# ---------------------------------------------------------------------------
# Mobius maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MobiusMap:
    """w -> (a w + b) / (c w + d) with a d - b c = 1."""

    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def from_matrix(cls, m, normalize: bool = True) -> "MobiusMap":
        m = np.asarray(m, dtype=complex)
        if normalize:
            det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
            if det == 0:
                raise HalphenError("singular matrix")
            m = m / cmath.sqrt(det)
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1, 0, 0, 1)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        return MobiusMap.from_matrix(self.matrix @ other.matrix, normalize=False)

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def __pow__(self, k: int) -> "MobiusMap":
        if k < 0:
            return self.inverse() ** (-k)
        return MobiusMap.from_matrix(np.linalg.matrix_power(self.matrix, k), normalize=False)

    def __neg__(self) -> "MobiusMap":
        return MobiusMap(-self.a, -self.b, -self.c, -self.d)

    def __call__(self, w):
        if w == INF or (isinstance(w, complex) and cmath.isinf(w)):
            return self.a / self.c if self.c != 0 else INF
        den = self.c * w + self.d
        return (self.a * w + self.b) / den if den != 0 else INF

    def lift_factor(self, w: complex) -> complex:
        """1/(c w + d), the square root of the derivative fixed by the lift."""
        return 1 / (self.c * w + self.d)

    def derivative(self, w: complex) -> complex:
        return self.lift_factor(w) ** 2

    def trace(self) -> complex:
        return self.a + self.d

    def distance_to_identity(self) -> float:
        """Matrix-norm distance to +I or -I, whichever is closer."""
        m = self.matrix
        eye = np.eye(2)
        return float(min(np.linalg.norm(m - eye), np.linalg.norm(m + eye)))

    def fixed_points(self) -> tuple:
        a, b, c, d = self.a, self.b, self.c, self.d
        if abs(c) < 1e-14:
            if abs(a - d) < 1e-14:
                return ()
            return (b / (d - a), INF)
        disc = cmath.sqrt((a + d) ** 2 - 4)
        return ((a - d + disc) / (2 * c), (a - d - disc) / (2 * c))

    def kind(self, tol: float = 1e-9) -> str:
        tr = self.trace()
        if abs(tr.imag) > tol:
            return "loxodromic"
        t = abs(tr.real)
        if abs(t - 2) <= tol:
            return "parabolic" if self.distance_to_identity() > tol else "identity"
        return "elliptic" if t < 2 else "hyperbolic"

    def translation_length(self) -> float:
        """Hyperbolic translation length 2 arccosh(|tr|/2) (0 unless hyperbolic)."""
        t = abs(self.trace())
        return 2 * math.acosh(t / 2) if t > 2 else 0.0

    def to_json(self) -> dict:
        return {k: [getattr(self, k).real, getattr(self, k).imag] for k in "abcd"}


@dataclass(frozen=True)
class ExtendedAutomorphism:
    """(w, z) -> (xi(w), c_f sqrt(xi'(w)) z) with sqrt(xi') = 1/(c w + d)."""

    base: MobiusMap
    fiber_factor: complex = 1.0
    branch: int = 1

    def __call__(self, w: complex, z: complex) -> tuple[complex, complex]:
        return self.base(w), self.fiber_factor * self.base.lift_factor(w) * z

    def __matmul__(self, other: "ExtendedAutomorphism") -> "ExtendedAutomorphism":
        return ExtendedAutomorphism(self.base @ other.base, self.fiber_factor * other.fiber_factor,
                                    self.branch * other.branch)

    def __pow__(self, k: int) -> "ExtendedAutomorphism":
        if k < 0:
            raise HalphenError("negative powers are not needed")
        out = ExtendedAutomorphism(MobiusMap.identity())
        for _ in range(k):
            out = out @ self
        return out


# ---------------------------------------------------------------------------
# triangle groups
# ---------------------------------------------------------------------------


@dataclass
class TriangleGroup:
    orders: tuple
    generators: list
    fixed_points: list
    regime: str
    limit_circle: tuple | None = None
    vertices: tuple = ()

    @property
    def m(self) -> tuple:
        return self.orders

    @property
    def bases(self) -> list:
        return [g.base for g in self.generators]

    def to_json(self) -> dict:
        def c(v):
            return None if v == INF else [complex(v).real, complex(v).imag]
        return {
            "orders": [o if o != INF else "inf" for o in self.orders],
            "regime": self.regime,
            "generators": [{"matrix": g.base.to_json(), "fiber_factor": c(g.fiber_factor), "branch": g.branch}
                           for g in self.generators],
            "fixed_points": [[c(p) for p in pair] for pair in self.fixed_points],
            "limit_circle": None if self.limit_circle is None
            else {"center": c(self.limit_circle[0]), "radius": self.limit_circle[1]},
        }


def regime_of(orders: Sequence) -> str:
    s = sum(Fraction(0) if m == INF else Fraction(1, m) for m in orders)
    target = Fraction(len(orders) - 2)
    if s > target:
        return "spherical"
    if s == target:
        return "euclidean"
    return "hyperbolic"


def _circle_through(p1: complex, p2: complex, p3: complex) -> tuple[complex, float]:
    a = np.array([[2 * (p2 - p1).real, 2 * (p2 - p1).imag], [2 * (p3 - p1).real, 2 * (p3 - p1).imag]])
    rhs = np.array([abs(p2) ** 2 - abs(p1) ** 2, abs(p3) ** 2 - abs(p1) ** 2])
    x, y = np.linalg.solve(a, rhs)
    o = complex(x, y)
    return o, abs(p1 - o)


def _inversion(o: complex, R: float) -> np.ndarray:
    """Matrix M with w -> M(conj w) the inversion in the circle |w - o| = R."""
    m = np.array([[o, R * R - abs(o) ** 2], [1, -o.conjugate()]], dtype=complex)
    return m / (1j * R)


def _line_reflection(p: complex, phi: float) -> np.ndarray:
    """Matrix M with w -> M(conj w) the reflection in the line through p at angle phi."""
    e = cmath.exp(1j * phi)
    return np.array([[e, (p - e * e * p.conjugate()) / e], [0, 1 / e]], dtype=complex)


def _anti_compose(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Matrix of the Mobius map r1 o r2 for r_k(w) = M_k(conj w)."""
    return m1 @ np.conj(m2)


def _triangle_reflections(m1: int, m2: int, m3: int):
    """Side reflections (s_a, s_b, s_c), vertices, regime and the limit circle."""
    al, be, ga = math.pi / m1, math.pi / m2, math.pi / m3
    regime = regime_of((m1, m2, m3))
    A = 0j
    s_c = np.eye(2, dtype=complex)                                    # real axis
    s_b = np.array([[cmath.exp(1j * al), 0], [0, cmath.exp(-1j * al)]])  # line at angle al
    if regime == "euclidean":
        B = 1 + 0j
        C = math.sin(be) / math.sin(ga) * cmath.exp(1j * al)
        s_a = _line_reflection(B, cmath.phase(C - B))
        limit = None
    else:
        cc = (math.cos(ga) + math.cos(al) * math.cos(be)) / (math.sin(al) * math.sin(be))
        cb = (math.cos(be) + math.cos(al) * math.cos(ga)) / (math.sin(al) * math.sin(ga))
        if regime == "hyperbolic":
            B = complex(math.tanh(math.acosh(cc) / 2))
            C = math.tanh(math.acosh(cb) / 2) * cmath.exp(1j * al)
            o, R = _circle_through(B, C, 1 / B.conjugate())
            limit = (0j, 1.0)
        else:
            B = complex(math.tan(math.acos(cc) / 2))
            C = math.tan(math.acos(cb) / 2) * cmath.exp(1j * al)
            o, R = _circle_through(B, C, -1 / B.conjugate())
            limit = None
        s_a = _inversion(o, R)
    return (s_a, s_b, s_c), (A, B, C), regime, limit


def _sl2_rotation(m: np.ndarray, order: int, fiber_phase=None) -> ExtendedAutomorphism:
    """Lift with M^order = I when possible; otherwise a fiber factor undoing -I."""
    base = MobiusMap.from_matrix(m)
    power = base ** order
    branch = 1
    if order % 2 == 1 and np.allclose(power.matrix, -np.eye(2), atol=1e-6):
        base = -base
        branch = -1
        power = base ** order
    if fiber_phase is not None:
        cf = complex(fiber_phase)
    elif np.allclose(power.matrix, -np.eye(2), atol=1e-6):
        cf = cmath.exp(1j * math.pi / order)
    else:
        cf = 1.0 + 0j
    return ExtendedAutomorphism(base, cf, branch)


def build_triangle_group(m1: int, m2: int, m3: int, fiber_phases: Sequence | None = None) -> TriangleGroup:
    """Rotation generators xi_1, xi_2, xi_3 of orders m_i with xi_1 xi_2 xi_3 = id.

    xi_1 rotates about the vertex at 0, xi_2 about the vertex on the positive
    real axis and xi_3 about the third vertex.  ``fiber_phases`` overrides
    the fiber factors c_f = k_i^-1 B_i; by default they are chosen so that
    Xi_i^(m_i) is the identity of the bundle.
    """
    orders = (m1, m2, m3)
    if any(not isinstance(m, (int, np.integer)) or m < 2 for m in orders):
        raise HalphenError("orders must be integers >= 2; use prebuilt_group for (2,2,inf)")
    (s_a, s_b, s_c), verts, regime, limit = _triangle_reflections(m1, m2, m3)
    mats = [_anti_compose(s_b, s_c), _anti_compose(s_c, s_a), _anti_compose(s_a, s_b)]
    phases = fiber_phases or [None] * 3
    gens = [_sl2_rotation(mats[i], orders[i], phases[i]) for i in range(3)]
    fps = [_fixed_pair(g.base, verts[i]) for i, g in enumerate(gens)]
    return TriangleGroup(orders, gens, fps, regime, limit, verts)


def _fixed_pair(base: MobiusMap, vertex: complex) -> tuple:
    pts = list(base.fixed_points())
    pts.sort(key=lambda p: INF if p == INF else abs(p - vertex))
    return tuple(pts)


def prebuilt_group(name: str) -> TriangleGroup:
    """Affine orbifold groups (2,2,inf) and (2,2,2,2); semi-completeness is not claimed."""
    if name in ("2,2,inf", "(2,2,inf)"):
        mats = [[[1j, 0], [0, -1j]], [[1j, -2j], [0, -1j]], [[1, 2], [0, 1]]]
        orders = (2, 2, INF)
    elif name in ("2,2,2,2", "(2,2,2,2)"):
        tau = 1j
        mats = [[[1j, 0], [0, -1j]], [[1j, -1j], [0, -1j]], [[1j, -1j * (1 + tau)], [0, -1j]],
                [[1j, -1j * tau], [0, -1j]]]
        orders = (2, 2, 2, 2)
    else:
        raise HalphenError(f"unknown prebuilt group {name!r}")
    gens = []
    for m, o in zip(mats, orders):
        base = MobiusMap.from_matrix(m)
        cf = cmath.exp(1j * math.pi / o) if o != INF else 1.0 + 0j
        gens.append(ExtendedAutomorphism(base, cf, 1))
    fps = [tuple(g.base.fixed_points()) for g in gens]
    return TriangleGroup(orders, gens, fps, "euclidean", None)


def identity_group(orders: Sequence = (1, 1, 1)) -> TriangleGroup:
    """Degenerate group with identity generators, for guarding the checks."""
    gens = [ExtendedAutomorphism(MobiusMap.identity()) for _ in orders]
    return TriangleGroup(tuple(orders), gens, [() for _ in orders], "degenerate", None)


def perturb_generator(G: TriangleGroup, i: int, entry: str = "b", eps: complex = 1e-3) -> TriangleGroup:
    g = G.generators[i]
    m = g.base.matrix
    idx = {"a": (0, 0), "b": (0, 1), "c": (1, 0), "d": (1, 1)}[entry]
    m[idx] += eps
    gens = list(G.generators)
    gens[i] = ExtendedAutomorphism(MobiusMap.from_matrix(m), g.fiber_factor, g.branch)
    return TriangleGroup(G.orders, gens, G.fixed_points, G.regime, G.limit_circle, G.vertices)


@dataclass
class RelationReport:
    product_deviation: float
    power_deviations: list
    bundle_deviations: list
    fiber_modulus_deviations: list
    fixed_point_deviations: list

    @property
    def max_deviation(self) -> float:
        vals = [self.product_deviation, *self.power_deviations, *self.bundle_deviations]
        return max(vals) if vals else 0.0

    def ok(self, tol: float = 1e-9, modulus_tol: float = 1e-12) -> bool:
        return self.max_deviation < tol and all(v < modulus_tol for v in self.fiber_modulus_deviations)

    def to_json(self) -> dict:
        return {"product_deviation": self.product_deviation, "power_deviations": self.power_deviations,
                "bundle_deviations": self.bundle_deviations,
                "fiber_modulus_deviations": self.fiber_modulus_deviations,
                "fixed_point_deviations": self.fixed_point_deviations, "max_deviation": self.max_deviation}


def verify_relations(G: TriangleGroup, tol: float = 1e-9, samples: int = 8, seed: int = 0) -> RelationReport:
    """Deviations of the group relations, of Xi_i^(m_i) on sampled fibers and of |c_f| from 1."""
    rng = np.random.default_rng(seed)
    prod = MobiusMap.identity()
    for g in G.bases:
        prod = prod @ g
    product_dev = prod.distance_to_identity()
    powers, bundle, moduli, fixed = [], [], [], []
    pts = 0.5 * (rng.uniform(-1, 1, samples) + 1j * rng.uniform(-1, 1, samples))
    for g, m, fp in zip(G.generators, G.orders, G.fixed_points):
        moduli.append(abs(abs(g.fiber_factor) - 1))
        fixed.append(max([abs(g.base(p) - p) for p in fp if p != INF] or [0.0]))
        if m == INF:
            continue
        gm = g ** int(m)
        powers.append(gm.base.distance_to_identity())
        worst = 0.0
        for w in pts:
            w1, z1 = gm(w, 1.0 + 0j)
            if w1 == INF:
                continue
            worst = max(worst, abs(w1 - w), abs(z1 - 1))
        bundle.append(worst)
    return RelationReport(product_dev, powers, bundle, moduli, fixed)


def enumerate_group(G: TriangleGroup, limit: int = 10000, digits: int = 8) -> list:
    """Closure of the generated group up to ``limit`` elements (projective classes)."""
    gens = G.bases + [g.inverse() for g in G.bases]
    seen = {_key(MobiusMap.identity(), digits): MobiusMap.identity()}
    queue = deque([MobiusMap.identity()])
    while queue and len(seen) < limit:
        h = queue.popleft()
        for g in gens:
            k = h @ g
            key = _key(k, digits)
            if key not in seen:
                seen[key] = k
                queue.append(k)
    return list(seen.values())


def _key(g: MobiusMap, digits: int) -> tuple:
    m = g.matrix.ravel()
    i = int(np.argmax(np.abs(m) > 1e-9))
    if m[i].real < -1e-9 or (abs(m[i].real) <= 1e-9 and m[i].imag < 0):
        m = -m
    m = np.round(m, digits) + 0.0
    return tuple(m.real.tolist() + m.imag.tolist())


# ---------------------------------------------------------------------------
# geodesic rays and Poincare series
# ---------------------------------------------------------------------------


@dataclass
class GeodesicRay:
    word: list
    points: list
    derivative_norms: list
    prefixes: list = field(repr=False, default_factory=list)
    w0: complex = 0j
    selector: str = "auto"
    certified_depth: int = 0

    def to_json(self) -> dict:
        return {"word": self.word, "w0": [self.w0.real, self.w0.imag], "selector": self.selector,
                "certified_depth": self.certified_depth,
                "points": [[complex(p).real, complex(p).imag] for p in self.points],
                "derivative_norms": self.derivative_norms}


def _letter(G: TriangleGroup, k: int) -> MobiusMap:
    g = G.bases[abs(k) - 1]
    return g if k > 0 else g.inverse()


def _alphabet(G: TriangleGroup) -> list:
    out = []
    for i, m in enumerate(G.orders, start=1):
        out.append(i)
        if m != 2:
            out.append(-i)
    return out


def is_reduced(word: Sequence[int], orders: Sequence) -> bool:
    """No letter followed by its inverse and no run of m_i equal letters i."""
    run = 1
    for j in range(1, len(word)):
        if word[j] == -word[j - 1]:
            return False
        if word[j] == word[j - 1]:
            run += 1
            m = orders[abs(word[j]) - 1]
            if m != INF and run >= m:
                return False
        else:
            run = 1
    return True


def word_lengths(G: TriangleGroup, depth: int, digits: int = 7, cap: int = 400000) -> dict:
    """Cayley-graph word lengths of all elements in the ball of radius ``depth``."""
    gens = [_letter(G, k) for k in _alphabet(G)]
    ident = MobiusMap.identity()
    lengths = {_key(ident, digits): 0}
    frontier = [ident]
    for r in range(1, depth + 1):
        nxt = []
        for h in frontier:
            for g in gens:
                k = h @ g
                key = _key(k, digits)
                if key not in lengths:
                    lengths[key] = r
                    nxt.append(k)
        frontier = nxt
        if len(lengths) > cap:
            break
    return lengths


def candidate_rays(G: TriangleGroup, max_period: int = 6, depth: int = 12) -> list:
    """Periodic hyperbolic words whose powers are Cayley geodesics up to ``depth``.

    Sorted by decreasing translation length per letter, then by word.
    """
    if G.regime == "spherical":
        raise HalphenError("spherical groups are finite and have no ends")
    alphabet = _alphabet(G)
    lengths = word_lengths(G, depth)
    out = []
    seen_cycles = set()
    for k in range(1, max_period + 1):
        for word in itertools.product(alphabet, repeat=k):
            word = list(word)
            if not is_reduced(word + word, G.orders):
                continue
            rot = min(tuple(word[i:] + word[:i]) for i in range(k))
            if rot in seen_cycles or _is_power(word):
                continue
            g = MobiusMap.identity()
            for c in word:
                g = g @ _letter(G, c)
            kind = g.kind()
            if G.regime == "hyperbolic" and kind != "hyperbolic":
                continue
            if G.regime == "euclidean" and kind not in ("parabolic",):
                continue
            seen_cycles.add(rot)
            if not _is_geodesic(G, word, depth, lengths):
                continue
            rate = g.translation_length() / k if G.regime == "hyperbolic" else abs(g.b / g.d) / k
            out.append((rate, word))
    out.sort(key=lambda p: (-round(p[0], 12), p[1]))
    return [w for _, w in out]


def _is_power(word) -> bool:
    k = len(word)
    return any(k % q == 0 and word == word[:q] * (k // q) for q in range(1, k))


def _is_geodesic(G, word, depth, lengths, digits: int = 7) -> bool:
    g = MobiusMap.identity()
    for j in range(depth):
        g = g @ _letter(G, word[j % len(word)])
        if lengths.get(_key(g, digits), j + 1) != j + 1:
            return False
    return True


def parse_selector(direction: str | Sequence[int]) -> tuple[str, object]:
    if not isinstance(direction, str):
        return "custom", [int(v) for v in direction]
    if direction == "alt":
        return "alt", None
    if direction.startswith("auto"):
        k = int(direction.split(":", 1)[1]) if ":" in direction else 1
        if k < 1:
            raise HalphenError("auto:k needs k >= 1")
        return "auto", k
    if direction.startswith("custom:"):
        body = direction.split(":", 1)[1].replace(" ", "")
        try:
            return "custom", [int(v) for v in body.split(",") if v]
        except ValueError as exc:
            raise HalphenError(f"bad custom word {body!r}") from exc
    raise HalphenError(f"unknown ray selector {direction!r}")


def geodesic_ray(G: TriangleGroup, direction: str | Sequence[int] = "auto", J: int = 200, w0: complex = 0j,
                 depth: int = 12) -> GeodesicRay:
    """Prefixes gamma_j of a periodic reduced word, with a_j = gamma_j(w0) and |gamma_j'(w0)|.

    Selectors: ``auto`` or ``auto:k`` (k-th best certified periodic word),
    ``alt`` (1,2,1,2,...), ``custom:<comma separated letters>`` where a
    negative letter is an inverse generator.  Custom periodic words repeat.
    """
    if G.regime == "spherical":
        raise HalphenError("spherical regime has no ends")
    w0 = complex(w0)
    if G.regime == "hyperbolic" and not abs(w0) < 1:
        if abs(abs(w0) - 1) > 1e-12:
            raise HalphenError("w0 must lie in the closed unit disc for hyperbolic groups")
    kind, arg = parse_selector(direction)
    certified = 0
    if kind == "alt":
        period = [1, 2]
    elif kind == "custom":
        period = arg
        if not period or any(abs(v) < 1 or abs(v) > len(G.orders) for v in period):
            raise HalphenError("custom word letters must be +-1..n")
        if not is_reduced(period + period, G.orders):
            raise HalphenError("custom word is not reduced")
    else:
        cands = candidate_rays(G, depth=depth)
        if G.regime == "hyperbolic":
            # prefer words along which |a_j| increases strictly from w0
            mono = [w for w in cands if _strictly_outward(G, w, J, w0)]
            cands = mono + [w for w in cands if w not in mono]
        if len(cands) < arg:
            raise HalphenError(f"only {len(cands)} certified periodic rays available")
        period = cands[arg - 1]
        certified = depth
    word, prefixes = _unroll(G, period, J)
    points = [p(w0) for p in prefixes]
    derivs = [abs(p.derivative(w0)) for p in prefixes]
    return GeodesicRay(word, points, derivs, prefixes, w0, direction if isinstance(direction, str) else "custom",
                       certified)


def _unroll(G, period, J):
    word = [period[j % len(period)] for j in range(J)]
    g = MobiusMap.identity()
    prefixes = [g]
    for c in word:
        g = g @ _letter(G, c)
        prefixes.append(g)
    return word, prefixes


def _strictly_outward(G, period, J, w0) -> bool:
    # 1 - |a_j|^2 = |gamma_j'(w0)| (1 - |w0|^2) stays accurate near the circle
    _, prefixes = _unroll(G, period, J)
    gaps = [abs(p.derivative(w0)) for p in prefixes]
    return all(b < a for a, b in zip(gaps, gaps[1:]))


def _disc_distance_from_origin(one_minus_r2: float, r: float) -> float:
    """log((1+r)/(1-r)) computed from 1 - r^2 to avoid cancellation."""
    return math.log((1 + r) ** 2 / one_minus_r2) if one_minus_r2 > 0 else INF


@dataclass
class SeriesReport:
    terms: list
    partial_sums: list
    verdict: str
    c: float | None
    C: float | None
    upper_bound_ok: bool | None
    lower_bound_ok: bool | None
    distances: list
    kernel: list | None = None
    radial_events: list | None = None
    tail_ratio: float | None = None
    holdout_ok: bool | None = None

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "c": self.c, "C": self.C, "upper_bound_ok": self.upper_bound_ok,
                "lower_bound_ok": self.lower_bound_ok, "holdout_ok": self.holdout_ok,
                "tail_ratio": self.tail_ratio,
                "S_J": self.partial_sums[-1] if self.partial_sums else 0.0, "J": len(self.terms) - 1,
                "terms": self.terms, "kernel": self.kernel, "radial_events": self.radial_events}


def orbit_distances(ray: GeodesicRay) -> list:
    """Hyperbolic distances d(w0, gamma_j(w0)) in the unit disc."""
    w0 = ray.w0
    g0 = 1 - abs(w0) ** 2
    out = []
    for a, der in zip(ray.points, ray.derivative_norms):
        gap = der * g0                                  # 1 - |a|^2
        one_minus = gap * g0 / abs(1 - w0.conjugate() * a) ** 2   # 1 - r^2
        r = abs(a - w0) / abs(1 - w0.conjugate() * a)
        out.append(0.0 if r == 0 else _disc_distance_from_origin(one_minus, r))
    return out


def poincare_series(G: TriangleGroup, ray: GeodesicRay, ratio_tol: float = 1e-2,
                    cauchy_tol: float = 1e-10) -> SeriesReport:
    """Partial sums of |gamma_j'(w0)|^(1/2) with verdict and distance constants.

    With rho_j = d(w0, gamma_j(w0)) and the disc recentred at w0, the
    derivative terms become sech(rho_j / 2).  The constants c <= C are the
    least and largest rho_j / j; the bound sech(c j / 2) then holds on the
    whole ray whenever c > 0 and sech(C j / 2) is the matching lower bound.
    ``holdout_ok`` refits c on the first half and tests the second half.
    """
    terms = [math.sqrt(v) for v in ray.derivative_norms]
    sums = list(itertools.accumulate(terms))
    J = len(terms) - 1
    verdict = _verdict(terms, sums, ratio_tol, cauchy_tol)
    tail_ratio = _tail_ratio(terms)
    c = C = None
    up = low = hold = None
    dists = []
    if G.regime == "hyperbolic" and J >= 2 and abs(ray.w0) < 1:
        dists = orbit_distances(ray)
        rates = [dists[j] / j for j in range(1, J + 1)]
        c, C = min(rates), max(rates)
        centred = [_sech(d / 2) for d in dists]
        up = c > 1e-8 and all(centred[j] <= _sech(c * j / 2) * (1 + 1e-9) for j in range(1, J + 1))
        low = all(centred[j] >= _sech(C * j / 2) * (1 - 1e-9) for j in range(1, J + 1))
        c_half = min(rates[: max(1, J // 2)])
        hold = c_half > 1e-8 and all(centred[j] <= _sech(c_half * j / 2) * (1 + 1e-9) for j in range(1, J + 1))
    kernel = events = None
    if G.regime == "hyperbolic" and abs(abs(ray.w0) - 1) < 1e-12:
        kernel, events = [], []
        for j, p in enumerate(ray.prefixes):
            a = p.inverse()(0j)
            ra = abs(a)
            alpha = cmath.phase(ray.w0) - cmath.phase(a) if ra > 0 else 0.0
            kernel.append((1 - ra * ra) / (1 + ra * ra - 2 * ra * math.cos(alpha)))
            if ra > 0 and math.cos(alpha) > ra:
                events.append(j)
    return SeriesReport(terms, sums, verdict, c, C, up, low, dists, kernel, events, tail_ratio, hold)


def _sech(x: float) -> float:
    return 0.0 if x > 700 else 2 * math.exp(-x) / (1 + math.exp(-2 * x))


def _tail_ratio(terms: list) -> float | None:
    J = len(terms) - 1
    q = max(1, J // 4)
    if J < 4 or terms[J - q] <= 0 or terms[J] <= 0:
        return None
    return (terms[J] / terms[J - q]) ** (1 / q)


def _verdict(terms, sums, ratio_tol, cauchy_tol) -> str:
    J = len(terms) - 1
    if J < 4:
        return "undetermined"
    ratio = _tail_ratio(terms)
    if ratio is not None and ratio < 1 - ratio_tol and terms[-1] < cauchy_tol:
        return "convergent"
    if sums[J] > sums[J // 2] + 1:
        return "divergent"
    return "undetermined"


def leaf_type(G: TriangleGroup, w0: complex = 0j, rays: Sequence[GeodesicRay] | None = None) -> str:
    """hyperbolic if at least two rays converge, parabolic if all diverge."""
    if G.regime == "euclidean":
        return "parabolic"
    if G.regime == "spherical":
        return "compact"
    if not rays or len(rays) < 2:
        return "undetermined"
    verdicts = [poincare_series(G, r).verdict for r in rays]
    if sum(v == "convergent" for v in verdicts) >= 2:
        return "hyperbolic"
    if all(v == "divergent" for v in verdicts):
        return "parabolic"
    return "undetermined"


# ---------------------------------------------------------------------------
# egyptian fractions
# ---------------------------------------------------------------------------


def egyptian_enumerate(n: int, bound: int) -> list[tuple[int, ...]]:
    """All sorted tuples of 2^n - 1 nonzero integers in [-bound, bound] with sum 1/x_i = (-1)^(n+1).

    Exact integer arithmetic on the common denominator lcm(1..bound);
    the tuples are split into two halves matched on their partial sums.
    """
    if n not in (2, 3):
        raise HalphenError("n must be 2 or 3")
    if not 1 <= bound <= 30:
        raise HalphenError("bound must lie in 1..30")
    k = 2 ** n - 1
    L = math.lcm(*range(1, bound + 1))
    target = (-1) ** (n + 1) * L
    vals = sorted([v for v in range(-bound, bound + 1) if v != 0])
    num = [L // v for v in vals]
    h = k // 2
    # right halves indexed by their sum, remembering the smallest index used
    right: dict[int, list] = {}
    for combo in itertools.combinations_with_replacement(range(len(vals)), k - h):
        s = sum(num[i] for i in combo)
        right.setdefault(s, []).append(combo)
    out = []
    for left in itertools.combinations_with_replacement(range(len(vals)), h):
        need = target - sum(num[i] for i in left)
        for combo in right.get(need, ()):
            if combo[0] >= left[-1]:
                out.append(tuple(vals[i] for i in left + combo))
    return sorted(set(out))


# ---------------------------------------------------------------------------
# singularity spectrum of Halphen fields
# ---------------------------------------------------------------------------


@dataclass
class SpectrumReport:
    records: list
    matched: list | None = None
    mismatches: list | None = None

    @property
    def consistent(self) -> bool | None:
        return None if self.mismatches is None else not self.mismatches

    def to_json(self) -> dict:
        return {"records": self.records, "matched": self.matched, "mismatches": self.mismatches,
                "consistent": self.consistent}


def halphen_spectrum_check(m1: int, m2: int, m3: int, table: Sequence | None = None,
                           tol: float = 1e-6) -> SpectrumReport:
    """Expected singular points at infinity of a Halphen field with orders m_i.

    Eigenvalues are listed as (vertical, along C_i, transverse).  The
    foliation at infinity sees the last two; the residues of omega_1 there
    are -(vertical)/lambda.  With ``table`` (output of the singularity
    classifier) each record is matched to an entry with the same residues.
    """
    ms = (m1, m2, m3)
    if any(m < 1 for m in ms):
        raise HalphenError("orders must be >= 1")
    recs = [{"name": "P", "eigenvalues": [-1, 1, 1], "residues": [1.0, 1.0]}]
    for i, m in enumerate(ms, start=1):
        recs.append({"name": f"p{i}", "eigenvalues": [-1, -1, m], "residues": sorted([-1.0, 1.0 / m])})
        recs.append({"name": f"q{i}", "eigenvalues": [-1, -1, -m], "residues": sorted([-1.0, -1.0 / m])})
    if table is None:
        return SpectrumReport(recs)
    pool = []
    for row in table:
        res = row.residues if hasattr(row, "residues") else row["residues"]
        loc = row.location if hasattr(row, "location") else row.get("location")
        pool.append((sorted(complex(r).real for r in res), [complex(r) for r in res], loc))
    matched, missing = [], []
    used = set()
    for rec in recs:
        hit = None
        for j, (real_sorted, raw, loc) in enumerate(pool):
            if j in used or len(raw) != 2:
                continue
            if all(abs(r.imag) < tol for r in raw) and all(abs(a - b) < tol for a, b in zip(real_sorted, rec["residues"])):
                hit = j
                break
        if hit is None:
            missing.append(rec["name"])
        else:
            used.add(hit)
            matched.append({"name": rec["name"], "index": hit})
    extra = [f"unexpected row {j}" for j in range(len(pool)) if j not in used]
    return SpectrumReport(recs, matched, missing + extra)
