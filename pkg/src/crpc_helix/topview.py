"""Exact implicit equation of the profile's top view (x, y) = (t/2, g) for
rational k = n/m, built by eliminating s from h(s) = 1 + t^2 and g = q(s) sqrt(h)."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from sympy import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, ring

from crpc_helix.errors import DegreeBlowup, InvalidK
from crpc_helix.profile import GluedProfile

logger = logging.getLogger(__name__)

XY_RING = ring("x,y,C", QQ, grlex)[0]
TG_RING = ring("t,g,C", QQ, grlex)[0]


def _to_fraction(coeff) -> Fraction:
    return Fraction(int(coeff.numerator), int(coeff.denominator))


def _to_qq(value: Fraction | int) -> object:
    value = Fraction(value)
    return QQ(value.numerator, value.denominator)


# ── Exact polynomials ────────────────────────────────────────────────────


class MultiPoly:
    """Immutable sparse polynomial with rational coefficients over (x, y, C)
    or (t, g, C). Thin wrapper around a sympy ring element."""

    __slots__ = ("_p",)

    def __init__(self, element: PolyElement) -> None:
        self._p = element

    @classmethod
    def from_terms(cls, terms: dict[tuple[int, int, int], Fraction | int], poly_ring=XY_RING) -> MultiPoly:
        element = poly_ring.zero
        for monom, coeff in terms.items():
            if coeff:
                element += poly_ring({tuple(monom): _to_qq(coeff)})
        return cls(element)

    @classmethod
    def gens(cls, poly_ring=XY_RING) -> tuple[MultiPoly, MultiPoly, MultiPoly]:
        return tuple(cls(g) for g in poly_ring.gens)

    @property
    def element(self) -> PolyElement:
        return self._p

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(str(s) for s in self._p.ring.symbols)

    def _lift(self, other) -> PolyElement:
        if isinstance(other, MultiPoly):
            if other._p.ring != self._p.ring:
                raise ValueError(f"incompatible variables {other.variables} and {self.variables}")
            return other._p
        return self._p.ring.ground_new(_to_qq(other))

    def __add__(self, other) -> MultiPoly:
        return MultiPoly(self._p + self._lift(other))

    __radd__ = __add__

    def __sub__(self, other) -> MultiPoly:
        return MultiPoly(self._p - self._lift(other))

    def __rsub__(self, other) -> MultiPoly:
        return MultiPoly(self._lift(other) - self._p)

    def __neg__(self) -> MultiPoly:
        return MultiPoly(-self._p)

    def __mul__(self, other) -> MultiPoly:
        return MultiPoly(self._p * self._lift(other))

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> MultiPoly:
        if exponent < 0:
            raise ValueError("negative powers are not polynomials")
        return MultiPoly(self._p**exponent)

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            return self._p == other._p
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._p)

    def __bool__(self) -> bool:
        return bool(self._p)

    def __repr__(self) -> str:
        return f"MultiPoly({poly_to_text(self)})"

    def substitute(self, variable: str, value: Fraction | int | MultiPoly) -> MultiPoly:
        """Replace one variable by a rational number or another polynomial."""
        gen = self._p.ring.gens[self.variables.index(variable)]
        if isinstance(value, MultiPoly):
            return MultiPoly(self._p.compose(gen, self._lift(value)))
        return MultiPoly(self._p.subs(gen, _to_qq(value)))

    def degree(self, variables: tuple[str, ...] | None = None) -> int:
        """Total degree in ``variables`` (all of them by default); -1 for zero."""
        if not self._p:
            return -1
        idx = range(len(self.variables)) if variables is None else [self.variables.index(v) for v in variables]
        return max(sum(monom[i] for i in idx) for monom in self._p.itermonoms())

    def coefficients(self) -> dict[tuple[int, ...], Fraction]:
        """Exponent tuple -> coefficient, in graded-lex order (leading first)."""
        return {monom: _to_fraction(c) for monom, c in self._p.terms()}

    def divide_out(self, factor: MultiPoly) -> tuple[MultiPoly, int]:
        """Strip every power of ``factor``; returns (cofactor, multiplicity)."""
        f, d, count = self._p, self._lift(factor), 0
        while f:
            quotient, remainder = f.div(d)
            if remainder:
                break
            f, count = quotient, count + 1
        return MultiPoly(f), count

    def evaluate_terms(self, point: dict[str, float]) -> np.ndarray:
        """Float value of every monomial term at ``point``."""
        values = [point[v] for v in self.variables]
        return np.array([
            float(_to_fraction(c)) * math.prod(x**e for x, e in zip(values, monom))
            for monom, c in self._p.terms()
        ])

    def __call__(self, **point: float) -> float:
        return float(self.evaluate_terms(point).sum())


@dataclass(frozen=True)
class RationalFunction:
    numerator: MultiPoly
    denominator: MultiPoly

    def __post_init__(self) -> None:
        if not self.denominator:
            raise ZeroDivisionError("rational function with zero denominator")

    def __call__(self, **point: float) -> float:
        return self.numerator(**point) / self.denominator(**point)


# ── Elimination ──────────────────────────────────────────────────────────


def _check_ratio(n: int, m: int) -> Fraction:
    if n <= 0 or m <= 0:
        raise InvalidK(f"k = n/m needs positive integers, got n={n!r}, m={m!r}")
    if math.gcd(n, m) != 1:
        raise InvalidK(f"n={n} and m={m} must be coprime")
    if n == m:
        raise InvalidK("k = 1 (developable) has no CRPC top view")
    return Fraction(n, m)


def _scaled_branches(k: Fraction, t: MultiPoly, g: MultiPoly) -> tuple[MultiPoly, MultiPoly, MultiPoly]:
    """(A_bar, B2_bar, D) with s^2 = (A_bar +/- B_bar) / D and D = t^2 + 1.

    From 16 k^2 s^2 g^2 = D ((k-1) s^2 - (k+1))^2, a quadratic in s^2 whose
    roots multiply to ((k+1)/(k-1))^2.
    """
    D = t * t + 1
    A_bar = ((k * k - 1) * D + 8 * k * k * g * g) * (1 / (k - 1) ** 2)
    B2_bar = A_bar * A_bar - ((k + 1) / (k - 1)) ** 2 * D * D
    return A_bar, B2_bar, D


def s_squared_branches(n: int, m: int) -> tuple[RationalFunction, RationalFunction]:
    """A and B^2 over (t, g) such that s^2 = A +/- B."""
    k = _check_ratio(n, m)
    t, g, _ = MultiPoly.gens(TG_RING)
    A_bar, B2_bar, D = _scaled_branches(k, t, g)
    return RationalFunction(A_bar, D), RationalFunction(B2_bar, D * D)


def _times_root(left: tuple[MultiPoly, MultiPoly], right: tuple[MultiPoly, MultiPoly], B2: MultiPoly):
    """(u1 + v1 B)(u2 + v2 B) with B^2 reduced."""
    u1, v1 = left
    u2, v2 = right
    return u1 * u2 + v1 * v2 * B2, u1 * v2 + v1 * u2


def _power_with_root(base: tuple[MultiPoly, MultiPoly], exponent: int, B2: MultiPoly):
    result = (base[0] * 0 + 1, base[1] * 0)
    for _ in range(exponent):
        result = _times_root(result, base, B2)
    return result


def degree_bound(n: int, m: int) -> int:
    return 4 * (3 * m + n)


def build_implicit_polynomial(n: int, m: int, C: Fraction | int | None = None) -> MultiPoly:
    """Polynomial in (x, y, C) vanishing on the top view of every profile with
    k = n/m; with a numeric ``C`` the shape constant is fixed to that value.

    h = 2C S^((k+1)/2) / (S + 1) with S = s^2 becomes
    D^p (A_bar + D + B_bar)^q = (2C)^q (A_bar + B_bar)^p, using p = (n+m)/2,
    q = m when n and m share parity and p = n + m, q = 2m otherwise. Writing
    the difference as U + V B_bar, the product over both signs of B_bar is
    U^2 - V^2 B_bar^2. Powers of D are divided out and the result normalized.
    """
    k = _check_ratio(n, m)
    x, y, c_gen = MultiPoly.gens(XY_RING)
    shape = c_gen if C is None else MultiPoly(XY_RING.ground_new(_to_qq(C)))
    A_bar, B2_bar, D = _scaled_branches(k, 2 * x, y)
    if (n - m) % 2 == 0:
        p, q = (n + m) // 2, m
    else:
        p, q = n + m, 2 * m

    zero = x * 0
    left = _power_with_root((A_bar + D, zero + 1), q, B2_bar)
    right = _power_with_root((A_bar, zero + 1), p, B2_bar)
    scale_left = D**p
    scale_right = (2 * shape) ** q
    U = scale_left * left[0] - scale_right * right[0]
    V = scale_left * left[1] - scale_right * right[1]
    eliminated = U * U - V * V * B2_bar

    stripped, multiplicity = eliminated.divide_out(D)
    result = normalize(stripped)
    bound = degree_bound(n, m)
    degree = result.degree(("x", "y"))
    logger.info(
        "[topview] k=%s/%s C=%s: degree %d in (x, y), bound %d, stripped D^%d",
        n, m, "symbolic" if C is None else C, degree, bound, multiplicity,
    )
    if degree > bound:
        raise DegreeBlowup(f"degree {degree} exceeds the bound {bound} for k={n}/{m}")
    return result


def normalize(poly: MultiPoly) -> MultiPoly:
    """Integer coefficients with gcd 1 and a positive graded-lex leading coefficient."""
    if not poly:
        return poly
    coeffs = list(poly.coefficients().values())
    common = math.lcm(*(c.denominator for c in coeffs))
    content = math.gcd(*(int(c * common) for c in coeffs))
    factor = Fraction(common, content)
    if coeffs[0] < 0:
        factor = -factor
    return poly * factor


def golden_sextic() -> MultiPoly:
    """Top view for k = 3 with symbolic C, in closed form."""
    x, y, C = MultiPoly.gens(XY_RING)
    ring4 = 4 * x * x + 1
    return (
        (C * Fraction(1, 3) - Fraction(1, 16) - x * x * Fraction(1, 4) - y * y * Fraction(1, 4)) * ring4**2
        - C * C * Fraction(4, 9) * ring4
        + 6 * C * y * y * (4 * x * x + 3 * y * y + 1)
    )


# ── Numeric verification ─────────────────────────────────────────────────


def topview_samples(
    profile: GluedProfile,
    count: int = 200,
    extent: float | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """(x, y) = (t/2, g) over a symmetric t-sample of the glued profile.

    With ``rng`` the t-values are drawn uniformly instead of evenly spaced.
    """
    half = profile.default_extent() if extent is None else extent
    if rng is None:
        ts = np.linspace(-half, half, count)
    else:
        ts = np.sort(rng.uniform(-half, half, count))
    rows = []
    for t in ts:
        x, y, _ = profile.point(float(t))
        rows.append((x, y))
    return np.array(rows).reshape(-1, 2)


def residual(poly: MultiPoly, samples, C: float | None = None) -> float:
    """Max over samples of |P(x, y)| / max |monomial term|; 0.0 for no samples."""
    samples = np.asarray(samples, dtype=float).reshape(-1, 2)
    if len(samples) == 0:
        return 0.0
    if not poly:
        raise ValueError("residual of the zero polynomial is meaningless")
    if "C" in poly.variables and poly.degree(("C",)) > 0 and C is None:
        raise ValueError("a numeric C is needed to evaluate a polynomial with symbolic C")
    worst = 0.0
    for x, y in samples:
        point = {"x": x, "y": y, "C": 0.0 if C is None else C}
        terms = poly.evaluate_terms(point)
        scale = float(np.max(np.abs(terms)))
        if scale > 0:
            worst = max(worst, abs(float(terms.sum())) / scale)
    return worst


# ── Serialization ────────────────────────────────────────────────────────


def _monomial_text(variables: tuple[str, ...], monom: tuple[int, ...]) -> list[str]:
    return [v if e == 1 else f"{v}^{e}" for v, e in zip(variables, monom) if e]


def poly_to_text(poly: MultiPoly) -> str:
    """Deterministic graded-lex sum of ``coef * x^i * y^j * C^l`` terms."""
    if not poly:
        return "0"
    out = []
    for monom, coeff in poly.coefficients().items():
        factors = [str(abs(coeff))] + _monomial_text(poly.variables, monom)
        sign = "-" if coeff < 0 else "+"
        out.append((sign, " * ".join(factors)))
    first_sign, first = out[0]
    text = ("-" if first_sign == "-" else "") + first
    for sign, term in out[1:]:
        text += f" {sign} {term}"
    return text


def poly_to_json(poly: MultiPoly) -> dict:
    return {
        "variables": list(poly.variables),
        "order": "grlex",
        "terms": [
            {"monomial": list(monom), "coefficient": str(coeff)}
            for monom, coeff in poly.coefficients().items()
        ],
    }
