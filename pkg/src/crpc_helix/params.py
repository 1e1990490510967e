"""Parameter algebra: curvature ratio a, invariant k, shape constant C and the s-domain."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

from scipy import optimize

from crpc_helix.config import Tolerances, resolve
from crpc_helix.errors import BranchMismatch, ConfigError, DegenerateRatio, EmptyDomain, InvalidK

logger = logging.getLogger(__name__)

_BRACKET_START = 1e-6
_MAX_BRACKET_STEPS = 400


class GaussSign(str, Enum):
    NEGATIVE = "negative"
    POSITIVE = "positive"


class Branch(str, Enum):
    """Which glued profile to build: Full for k > 1, Minus/Plus for k < 1."""

    AUTO = "auto"
    FULL = "full"
    MINUS = "minus"
    PLUS = "plus"


# ── Curvature ratio ──────────────────────────────────────────────────────


def k_from_a(a: float) -> float:
    """Return k = |1 - a| / |1 + a|.

    The input is first mapped to the representative of {a, 1/a} with modulus
    below one. ``k_from_a(a) == k_from_a(1 / a)`` is bit-for-bit whenever
    1/a is exact in floating point. Otherwise the rounding of 1/a survives,
    scaled by the conditioning 2|b| / |1 - b^2| of k at that representative b.
    """
    if not math.isfinite(a):
        raise DegenerateRatio("nonfinite", a)
    if a == 0:
        raise DegenerateRatio("developable", a)
    if a == 1:
        raise DegenerateRatio("sphere_plane", a)
    if a == -1:
        raise DegenerateRatio("minimal", a)
    b = a if abs(a) < 1 else 1.0 / a
    return abs(1.0 - b) / abs(1.0 + b)


def _check_k(k: float) -> None:
    if math.isnan(k):
        raise DegenerateRatio("nonfinite", k)
    if math.isinf(k):
        raise DegenerateRatio("minimal", k)
    if k == 0:
        raise DegenerateRatio("sphere_plane", k)
    if k == 1:
        raise DegenerateRatio("developable", k)
    if k < 0:
        raise InvalidK(f"k must be positive, got {k!r}")


def a_pair_from_k(k: float) -> tuple[float, float]:
    """The two curvature ratios (a_low, a_high) sharing the invariant k."""
    _check_k(k)
    return (1.0 - k) / (1.0 + k), (1.0 + k) / (1.0 - k)


def gauss_sign(k: float) -> GaussSign:
    return GaussSign.POSITIVE if k < 1 else GaussSign.NEGATIVE


@dataclass(frozen=True)
class CurvatureSpec:
    a: float
    k: float
    gauss_sign: GaussSign

    @classmethod
    def from_a(cls, a: float) -> CurvatureSpec:
        k = k_from_a(a)
        return cls(a=a, k=k, gauss_sign=gauss_sign(k))

    @classmethod
    def from_k(cls, k: float) -> CurvatureSpec:
        """Canonical a for a given k is a_low."""
        a_low, _ = a_pair_from_k(k)
        return cls(a=a_low, k=k, gauss_sign=gauss_sign(k))

    @property
    def pair(self) -> tuple[float, float]:
        return a_pair_from_k(self.k)


# ── Special constants ────────────────────────────────────────────────────


def cusp_parameter(k: float) -> float:
    """s_k = sqrt((1 + k) / (1 - k)), the cusp parameter for 0 < k < 1."""
    _check_k(k)
    if k > 1:
        raise InvalidK(f"the cusp parameter exists only for k < 1, got k={k!r}")
    return math.sqrt((1.0 + k) / (1.0 - k))


def critical_C(k: float) -> float:
    """C_k: the profile touches the (x,z)-plane and the axis lies on the surface."""
    _check_k(k)
    if k < 1:
        raise InvalidK(f"critical_C classifies the a < 0 case and needs k > 1, got k={k!r}")
    return k * (k - 1.0) ** ((k - 1.0) / 2.0) / (k + 1.0) ** ((k + 1.0) / 2.0)


def min_C(k: float) -> float:
    """Smallest C with a nonempty domain when k < 1 (max of h equals one)."""
    _check_k(k)
    if k > 1:
        raise InvalidK(f"h is unbounded for k > 1, every C > 0 is admissible (k={k!r})")
    s_k = cusp_parameter(k)
    return (s_k * s_k + 1.0) / (2.0 * s_k ** (k + 1.0))


def _h(s: float, k: float, C: float) -> float:
    return 2.0 * C * s ** (k + 1.0) / (s * s + 1.0)


def _h_prime(s: float, k: float, C: float) -> float:
    return 2.0 * C * s**k * ((k - 1.0) * s * s + 1.0 + k) / (s * s + 1.0) ** 2


# ── Shape parameters and domain ──────────────────────────────────────────


@dataclass(frozen=True)
class ShapeParams:
    """(k, C, pitch). The internal pitch is 1/2; ``pitch`` only scales output."""

    k: float
    C: float
    pitch: float = 0.5

    def __post_init__(self) -> None:
        _check_k(self.k)
        if not (math.isfinite(self.C) and self.C > 0):
            raise ConfigError(f"shape constant C must be positive and finite, got {self.C!r}")
        if not math.isfinite(self.pitch) or self.pitch == 0:
            raise ConfigError(f"pitch must be nonzero and finite, got {self.pitch!r}")
        if self.k < 1 and self.C <= min_C(self.k):
            raise EmptyDomain(
                f"C={self.C!r} does not exceed min_C({self.k!r})={min_C(self.k)!r}"
            )

    @property
    def scale(self) -> float:
        """The similarity factor 2p applied to normalized coordinates."""
        return 2.0 * self.pitch


@dataclass(frozen=True)
class DomainInfo:
    k: float
    C: float
    s0: float
    s0_prime: float | None = None
    s_k: float | None = None

    @property
    def interval(self) -> tuple[float, float]:
        if self.s0_prime is None:
            return (self.s0, math.inf)
        return (self.s0, self.s0_prime)

    def anchor(self, branch: Branch) -> float:
        return self.s0_prime if branch is Branch.PLUS else self.s0

    def contains(self, s: float) -> bool:
        lo, hi = self.interval
        return lo <= s <= hi

    def to_dict(self) -> dict:
        return {"k": self.k, "C": self.C, "s0": self.s0, "s0_prime": self.s0_prime, "s_k": self.s_k}


def resolve_branch(k: float, branch: Branch | str = Branch.AUTO) -> Branch:
    """Validate a branch tag against k; AUTO picks Full or Minus."""
    branch = Branch(branch)
    if branch is Branch.AUTO:
        return Branch.FULL if k > 1 else Branch.MINUS
    if (branch is Branch.FULL) != (k > 1):
        raise BranchMismatch(f"branch {branch.value!r} is inconsistent with k={k!r}")
    return branch


def _require_bracket(found: bool, k: float, C: float) -> None:
    # NaN comparisons are False, so an overflowed bracket end lands here too
    if not found:
        raise EmptyDomain(
            f"no root of h(s) = 1 is representable in double precision for k={k!r}, C={C!r}",
            hint="k is too close to 1 for this C; move k away from 1 or bring C closer to 1.",
        )


def _refine_root(f, lo: float, hi: float, k: float, C: float, tol: Tolerances) -> float:
    root = optimize.bisect(f, lo, hi, xtol=1e-300, rtol=tol.root_rtol, maxiter=_MAX_BRACKET_STEPS)
    # two Newton polish steps, kept only while they stay bracketed and improve
    for _ in range(2):
        slope = _h_prime(root, k, C)
        if slope == 0:
            break
        candidate = root - f(root) / slope
        if lo <= candidate <= hi and abs(f(candidate)) < abs(f(root)):
            root = candidate
        else:
            break
    return root


def compute_domain(k: float, C: float, tol: Tolerances | None = None) -> DomainInfo:
    """Roots of h(s) = 1 that delimit the open solution interval I_C."""
    tol = resolve(tol)
    ShapeParams(k, C)
    if k < 1:
        c_min = min_C(k)
        if C - c_min < tol.near_critical * c_min:
            raise EmptyDomain(f"C={C!r} is numerically critical (min_C={c_min!r}); the domain is a sliver")

    def f(s: float) -> float:
        return _h(s, k, C) - 1.0

    if k > 1:
        lo = _BRACKET_START
        for _ in range(_MAX_BRACKET_STEPS):
            if f(lo) < 0:
                break
            lo *= 0.5
        hi = lo
        for _ in range(_MAX_BRACKET_STEPS):
            if f(hi) > 0:
                break
            lo, hi = hi, hi * 2.0
        _require_bracket(f(lo) < 0 < f(hi), k, C)
        s0 = _refine_root(f, lo, hi, k, C, tol)
        logger.debug("[domain] k=%s C=%s s0=%r", k, C, s0)
        return DomainInfo(k=k, C=C, s0=s0)

    s_k = cusp_parameter(k)
    lo = s_k
    for _ in range(_MAX_BRACKET_STEPS):
        lo *= 0.5
        if f(lo) < 0:
            break
    hi = s_k
    for _ in range(_MAX_BRACKET_STEPS):
        hi *= 2.0
        if f(hi) < 0:
            break
    _require_bracket(f(lo) < 0 < f(s_k) and f(hi) < 0, k, C)
    s0 = _refine_root(f, lo, s_k, k, C, tol)
    s0_prime = _refine_root(f, s_k, hi, k, C, tol)
    logger.debug("[domain] k=%s C=%s s0=%r s0'=%r s_k=%r", k, C, s0, s0_prime, s_k)
    return DomainInfo(k=k, C=C, s0=s0, s0_prime=s0_prime, s_k=s_k)
