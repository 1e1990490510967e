"""Closed-form generating contour: h, t, g, the z-quadrature, the two branches,
gluing into one t-parametrized profile and the cusp split for k < 1.

All coordinates are normalized to internal pitch 1/2; the surface module
applies the 2p similarity.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate, optimize, special

from crpc_helix import params as pc
from crpc_helix.config import Tolerances, resolve
from crpc_helix.errors import (
    InvalidK,
    NonPositiveS,
    OutsideDomain,
    QuadratureFailure,
    SingularPoint,
)
from crpc_helix.params import Branch, DomainInfo, ShapeParams

logger = logging.getLogger(__name__)

_PANEL_STEP = 0.05
_PANEL_ORDER = 16
_COARSE_ORDER = 10


class ContourBranch(str, Enum):
    X0 = "X0"
    X1 = "X1"


@dataclass(frozen=True)
class ProfileSample:
    s: float
    t: float
    g: float
    z: float
    branch: ContourBranch

    @property
    def point(self) -> tuple[float, float, float]:
        if self.branch is ContourBranch.X0:
            return (self.t / 2.0, self.g, self.z)
        return (-self.t / 2.0, self.g, -self.z)


# ── Scalar kernels (accept floats or numpy arrays) ───────────────────────


def _q(s, k):
    return ((k - 1.0) * s * s - (k + 1.0)) / (4.0 * k * s)


def _w(s, k):
    return (k + 1.0) * s * s - (k - 1.0)


def _h(s, k, C):
    return 2.0 * C * s ** (k + 1.0) / (s * s + 1.0)


def _h_prime(s, k, C):
    return 2.0 * C * s**k * ((k - 1.0) * s * s + 1.0 + k) / (s * s + 1.0) ** 2


def _g_prime(s, k, C):
    return _h_prime(s, k, C) * _w(s, k) / (8.0 * k * s * np.sqrt(_h(s, k, C)))


def _slope(s, k, C):
    """dz/dt along the contour, which is also f'' in the ODE variables."""
    return _w(s, k) / (4.0 * k * s * np.sqrt(_h(s, k, C)))


def _slope_prime(s, k, C):
    w = _w(s, k)
    p = (k - 1.0) * s * s + k + 1.0
    top = 2.0 * (k + 1.0) * s * s - w - w * p / (2.0 * (s * s + 1.0))
    return top / (4.0 * k * s * s * np.sqrt(_h(s, k, C)))


def _excess_ratio(delta, anchor, k):
    """(h(anchor + delta) - 1) * (sigma^2 + 1) / delta, assuming h(anchor) = 1.

    Written with expm1/log1p so it stays accurate as delta -> 0.
    """
    delta = np.asarray(delta, dtype=float)
    safe = np.where(delta == 0, 1.0, delta)
    growth = (anchor * anchor + 1.0) * np.expm1((k + 1.0) * np.log1p(safe / anchor)) / safe
    limit = (anchor * anchor + 1.0) * (k + 1.0) / anchor - 2.0 * anchor
    return np.where(delta == 0, limit, growth - (2.0 * anchor + delta))


def _t_squared_near(delta, anchor, k):
    sigma = anchor + delta
    return delta * _excess_ratio(delta, anchor, k) / (sigma * sigma + 1.0)


def _check_s(s: float) -> None:
    if not s > 0:
        raise NonPositiveS(f"s must be positive, got {s!r}")


# ── Public closed forms ──────────────────────────────────────────────────


def h_of_s(s: float, k: float, C: float) -> float:
    _check_s(s)
    return float(_h(s, k, C))


def h_prime_of_s(s: float, k: float, C: float) -> float:
    _check_s(s)
    return float(_h_prime(s, k, C))


def t_of_s(s: float, k: float, C: float, tol: Tolerances | None = None) -> float:
    """t = sqrt(h(s) - 1), clamped to zero within the root tolerance."""
    tol = resolve(tol)
    excess = h_of_s(s, k, C) - 1.0
    if excess < 0:
        allowance = 10.0 * tol.root_rtol * max(1.0, abs(s * _h_prime(s, k, C)))
        if excess < -allowance:
            raise OutsideDomain(f"s={s!r} lies outside the domain (h - 1 = {excess!r})")
        return 0.0
    return math.sqrt(excess)


def g_of_s(s: float, k: float, C: float) -> float:
    _check_s(s)
    return float(_q(s, k) * math.sqrt(_h(s, k, C)))


def g_prime_of_s(s: float, k: float, C: float) -> float:
    _check_s(s)
    return float(_g_prime(s, k, C))


def discriminant(t: float, g: float, k: float) -> float:
    """D(t, g) = 16k^2 g^2 + 4(k^2 - 1)(1 + t^2); vanishes on the cusp."""
    return 16.0 * k * k * g * g + 4.0 * (k * k - 1.0) * (1.0 + t * t)


def discriminant_gradient(t: float, g: float, k: float) -> tuple[float, float]:
    return 8.0 * (k * k - 1.0) * t, 32.0 * k * k * g


# ── z-coordinate quadrature ──────────────────────────────────────────────


def _substituted_integrand(anchor: float, direction: float, k: float, C: float):
    """dz/du after sigma = anchor + direction * u^2; smooth at u = 0."""

    def integrand(u):
        u = np.asarray(u, dtype=float)
        delta = direction * u * u
        sigma = anchor + delta
        t_over_u = np.sqrt(np.abs(_excess_ratio(delta, anchor, k)) / (sigma * sigma + 1.0))
        return direction * 2.0 * _g_prime(sigma, k, C) / t_over_u

    return integrand


def _z_from_root(s: float, root: float, k: float, C: float, tol: Tolerances) -> float:
    delta = s - root
    if delta == 0:
        return 0.0
    direction = 1.0 if delta > 0 else -1.0
    integrand = _substituted_integrand(root, direction, k, C)
    result = integrate.quad(
        lambda u: float(integrand(u)),
        0.0,
        math.sqrt(abs(delta)),
        epsabs=tol.quad_abs,
        epsrel=tol.quad_rel,
        limit=tol.quad_panel_cap,
        full_output=1,
    )
    if len(result) > 3:
        raise QuadratureFailure(
            f"z-quadrature from {root!r} to {s!r} did not converge: {result[3]}"
        )
    return float(result[0])


def z_of_s(
    s: float,
    k: float,
    C: float,
    anchor_s: float | None = None,
    tol: Tolerances | None = None,
) -> float:
    """z(s) = integral of g'/t from anchor_s to s (anchor defaults to s0).

    Each leg is integrated from the nearer domain root with the substitution
    sigma = root +/- u^2, which absorbs the inverse square root at the root.
    """
    tol = resolve(tol)
    domain = pc.compute_domain(k, C, tol)
    anchor_s = domain.s0 if anchor_s is None else anchor_s
    for value in (s, anchor_s):
        t_of_s(value, k, C, tol)
    if s == anchor_s:
        return 0.0

    def plus_side(x: float) -> bool:
        return domain.s_k is not None and x > domain.s_k

    if anchor_s in (domain.s0, domain.s0_prime) and plus_side(s) == (anchor_s == domain.s0_prime):
        return _z_from_root(s, anchor_s, k, C, tol)

    def from_s0(x: float) -> float:
        if not plus_side(x):
            return _z_from_root(x, domain.s0, k, C, tol)
        bridge = _z_from_root(domain.s_k, domain.s0, k, C, tol)
        bridge -= _z_from_root(domain.s_k, domain.s0_prime, k, C, tol)
        return bridge + _z_from_root(x, domain.s0_prime, k, C, tol)

    return from_s0(s) - from_s0(anchor_s)


def profile_sample(
    s: float,
    k: float,
    C: float,
    branch: ContourBranch = ContourBranch.X0,
    anchor_s: float | None = None,
    tol: Tolerances | None = None,
) -> ProfileSample:
    return ProfileSample(
        s=s,
        t=t_of_s(s, k, C, tol),
        g=g_of_s(s, k, C),
        z=z_of_s(s, k, C, anchor_s, tol),
        branch=ContourBranch(branch),
    )


def contour_point(
    s: float,
    k: float,
    C: float,
    branch: ContourBranch = ContourBranch.X0,
    anchor_s: float | None = None,
    tol: Tolerances | None = None,
) -> np.ndarray:
    """X0(s) = (t/2, g, z) or X1(s) = (-t/2, g, -z), z anchored at anchor_s."""
    return np.array(profile_sample(s, k, C, branch, anchor_s, tol).point)


def contour_tangent(
    s: float,
    k: float,
    C: float,
    branch: ContourBranch = ContourBranch.X0,
    tol: Tolerances | None = None,
) -> np.ndarray:
    """d/ds of the contour point.

    At a domain root t = 0 and the x- and z-components are unbounded; they are
    returned as signed infinities rather than raising.
    """
    t = t_of_s(s, k, C, tol)
    hp = float(_h_prime(s, k, C))
    w = float(_w(s, k))
    root_h = math.sqrt(_h(s, k, C))
    dy = hp * w / (8.0 * k * s * root_h)
    if t == 0.0:
        dx = math.copysign(math.inf, hp)
        dz = math.copysign(math.inf, hp * w) if hp * w != 0 else 0.0
    else:
        dx = hp / (4.0 * t)
        dz = dy / t
    if ContourBranch(branch) is ContourBranch.X1:
        dx, dz = -dx, -dz
    return np.array([dx, dy, dz])


# ── Glued profile ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class ProfileJet:
    """Position (without z) and first/second t-derivatives at one parameter."""

    t: float
    s: float
    x: float
    y: float
    d1: np.ndarray
    d2: np.ndarray


class _CheckpointTable:
    """Cumulative fixed-order Gauss-Legendre integrals over graded u-panels.

    Panel edges are scale * sinh(j * step); values are memoized and only ever
    appended, under a lock. Every panel is also summed with a coarser rule and
    the two must agree to the quadrature tolerances.
    """

    def __init__(self, integrand, scale: float, tol: Tolerances | None = None) -> None:
        self._f = integrand
        self._scale = scale
        self._tol = resolve(tol)
        self._nodes, self._weights = special.roots_legendre(_PANEL_ORDER)
        self._coarse_nodes, self._coarse_weights = special.roots_legendre(_COARSE_ORDER)
        self._cumulative = [0.0]
        self._lock = threading.Lock()

    def _edge(self, j: int) -> float:
        return self._scale * math.sinh(j * _PANEL_STEP)

    def _panel(self, lo: float, hi: float) -> float:
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        values = np.asarray(self._f(mid + half * self._nodes), dtype=float)
        fine = float(half * np.dot(self._weights, values))
        coarse = float(half * np.dot(self._coarse_weights, self._f(mid + half * self._coarse_nodes)))
        # rounding floor for panels whose integrand changes sign
        mass = abs(half) * float(np.dot(self._weights, np.abs(values)))
        allowed = max(self._tol.quad_abs, self._tol.quad_rel * abs(fine), 64.0 * np.finfo(float).eps * mass)
        if not abs(fine - coarse) <= allowed:
            raise QuadratureFailure(
                f"panel [{lo!r}, {hi!r}] did not converge: {_PANEL_ORDER}-point {fine!r} "
                f"vs {_COARSE_ORDER}-point {coarse!r}",
                hint="the height integrand is not resolved on this panel; try the strict preset or a smaller extent.",
            )
        return fine

    def _extend(self, j: int) -> None:
        if j < len(self._cumulative):
            return
        with self._lock:
            while len(self._cumulative) <= j:
                n = len(self._cumulative)
                self._cumulative.append(self._cumulative[-1] + self._panel(self._edge(n - 1), self._edge(n)))

    def __call__(self, u: float) -> float:
        if u <= 0:
            return 0.0
        j = int(math.asinh(u / self._scale) / _PANEL_STEP)
        self._extend(j)
        return self._cumulative[j] + self._panel(self._edge(j), u)

    @property
    def checkpoints(self) -> int:
        return len(self._cumulative)


class GluedProfile:
    """The X0/X1 contour pair stitched at a domain root into one curve in t.

    ``point(t)`` gives X0(s(t)) for t > 0 and X1(s(-t)) for t < 0. Minus and
    Plus profiles (k < 1) live on [-t_k, t_k].
    """

    def __init__(
        self,
        params: ShapeParams,
        domain: DomainInfo,
        branch: Branch,
        *,
        g_scale: float = 1.0,
        tol: Tolerances | None = None,
    ) -> None:
        self._params = params
        self._domain = domain
        self._branch = pc.resolve_branch(params.k, branch)
        self._tol = resolve(tol)
        self._g_scale = g_scale
        self._anchor = domain.anchor(self._branch)
        k = params.k
        if self._branch is Branch.FULL:
            self._direction = 1.0
            self._delta_end = None
            self._t_max = None
        else:
            self._direction = 1.0 if self._branch is Branch.MINUS else -1.0
            self._delta_end = domain.s_k - self._anchor
            self._t_max = math.sqrt(float(_t_squared_near(self._delta_end, self._anchor, k)))
        self._z_table = _CheckpointTable(
            _substituted_integrand(self._anchor, self._direction, k, params.C),
            math.sqrt(self._anchor),
            self._tol,
        )
        logger.debug(
            "[profile] k=%s C=%s branch=%s anchor=%r t_max=%r",
            k, params.C, self._branch.value, self._anchor, self._t_max,
        )

    # ── properties ──

    @property
    def params(self) -> ShapeParams:
        return self._params

    @property
    def domain(self) -> DomainInfo:
        return self._domain

    @property
    def branch_tag(self) -> Branch:
        return self._branch

    @property
    def k(self) -> float:
        return self._params.k

    @property
    def C(self) -> float:
        return self._params.C

    @property
    def anchor(self) -> float:
        return self._anchor

    @property
    def t_max(self) -> float | None:
        """t_k for the bounded k < 1 branches, None for Full."""
        return self._t_max

    @property
    def g_scale(self) -> float:
        return self._g_scale

    @property
    def tol(self) -> Tolerances:
        return self._tol

    # ── inversion ──

    def _delta_of_t(self, t_abs: float) -> float:
        k, a = self.k, self._anchor
        if t_abs == 0.0:
            return 0.0
        if self._t_max is not None and t_abs >= self._t_max:
            if t_abs > self._t_max * (1.0 + self._tol.singular_band):
                raise OutsideDomain(f"|t|={t_abs!r} exceeds t_k={self._t_max!r}")
            return self._delta_end
        target = t_abs * t_abs
        slope0 = float(_h_prime(a, k, self.C))
        if t_abs <= self._tol.series_switch:
            return target / slope0

        def residual(delta: float) -> float:
            return float(_t_squared_near(delta, a, k)) - target

        if self._delta_end is not None:
            lo, hi = sorted((0.0, self._delta_end))
        else:
            lo, hi = 0.0, max(a, 1.0)
            while residual(hi) < 0:
                lo, hi = hi, 2.0 * hi
        delta = optimize.brentq(residual, lo, hi, xtol=1e-300, rtol=self._tol.inversion_rtol, maxiter=200)
        slope = float(_h_prime(a + delta, k, self.C))
        if slope != 0:
            polished = delta - residual(delta) / slope
            if min(lo, hi) <= polished <= max(lo, hi) and abs(residual(polished)) <= abs(residual(delta)):
                delta = polished
        return delta

    def s_of_t(self, t: float) -> float:
        """Solution parameter s for the signed profile parameter t."""
        return self._anchor + self._delta_of_t(abs(t))

    def is_singular(self, t: float) -> bool:
        if self._t_max is None:
            return False
        return abs(t) >= self._t_max * (1.0 - self._tol.singular_band)

    # ── evaluation ──

    def z_of_t(self, t: float) -> float:
        delta = self._delta_of_t(abs(t))
        z = self._z_table(math.sqrt(abs(delta)))
        return z if t >= 0 else -z

    def point(self, t: float) -> np.ndarray:
        """(x, y, z) of the glued curve at signed parameter t."""
        delta = self._delta_of_t(abs(t))
        s = self._anchor + delta
        z = self._z_table(math.sqrt(abs(delta)))
        y = self._g_scale * g_of_s(s, self.k, self.C)
        return np.array([t / 2.0, y, z if t >= 0 else -z])

    def jet(self, t: float) -> ProfileJet:
        """First and second t-derivatives; raises SingularPoint on the cusp row."""
        if self.is_singular(t):
            raise SingularPoint(f"t={t!r} lies on the cusp |t| = t_k")
        return self._jet_at(self.s_of_t(t), t)

    def _jet_at(self, s: float, t: float) -> ProfileJet:
        k, C = self.k, self.C
        m = float(_slope(s, k, C))
        ratio = float(_slope_prime(s, k, C)) / float(_h_prime(s, k, C))
        gs = self._g_scale
        d1 = np.array([0.5, gs * t * m, m])
        d2 = np.array([0.0, gs * (m + 2.0 * t * t * ratio), 2.0 * t * ratio])
        return ProfileJet(t=t, s=s, x=t / 2.0, y=gs * g_of_s(s, k, C), d1=d1, d2=d2)

    def default_extent(self) -> float:
        """Half-width of the t-range used for meshes and certificates."""
        if self._t_max is not None:
            return self._t_max
        k = self.k
        s_end = max(4.0 * self._anchor, 2.0 * math.sqrt((k + 1.0) / (k - 1.0)))
        return t_of_s(s_end, k, self.C, self._tol)

    def samples(self, count: int, extent: float | None = None) -> list[ProfileSample]:
        """Uniform t-samples over [-extent, extent] as ProfileSample rows."""
        extent = self.default_extent() if extent is None else extent
        rows = []
        for t in np.linspace(-extent, extent, count):
            x, y, z = self.point(float(t))
            branch = ContourBranch.X0 if t >= 0 else ContourBranch.X1
            sign = 1.0 if t >= 0 else -1.0
            rows.append(ProfileSample(s=self.s_of_t(float(t)), t=abs(float(t)), g=y, z=sign * z, branch=branch))
        return rows


def glued_profile(
    k: float,
    C: float,
    branch_tag: Branch | str = Branch.AUTO,
    *,
    g_scale: float = 1.0,
    tol: Tolerances | None = None,
) -> GluedProfile:
    """Build the glued profile; BranchMismatch when the tag contradicts k."""
    tol = resolve(tol)
    branch = pc.resolve_branch(k, branch_tag)
    params = ShapeParams(k, C)
    domain = pc.compute_domain(k, C, tol)
    return GluedProfile(params, domain, branch, g_scale=g_scale, tol=tol)


def split_at_cusp(k: float, C: float, tol: Tolerances | None = None) -> tuple[GluedProfile, GluedProfile]:
    """The Minus and Plus profiles meeting at the singular parameter s_k."""
    if k >= 1:
        raise InvalidK(f"the cusp split needs 0 < k < 1, got k={k!r}")
    return glued_profile(k, C, Branch.MINUS, tol=tol), glued_profile(k, C, Branch.PLUS, tol=tol)


def one_sided_jet(profile: GluedProfile, side: int, max_order: int = 4, step: float | None = None) -> np.ndarray:
    """Derivatives of orders 1..max_order of the profile at t = 0 from one side.

    Interpolates the analytic tangent near side * j * step, j = 0..max_order+3,
    and reads derivatives off the interpolating polynomial. Row r-1 holds the
    order-r derivative vector.

    Each node is placed at an exact s and its t is taken from the
    cancellation-free t^2, so the node data carry rounding error only and
    not the tolerance of the t -> s inversion.
    """
    count = max_order + 4
    if step is None:
        step = 0.005
        if profile.t_max is not None:
            step = min(step, profile.t_max / (4.0 * count))
    anchor, k = profile.anchor, profile.k
    deltas = [profile._delta_of_t(j * step) for j in range(count)]
    t_nodes = np.array([side * math.sqrt(float(_t_squared_near(d, anchor, k))) for d in deltas])
    tangents = np.array([profile._jet_at(anchor + d, float(t)).d1 for d, t in zip(deltas, t_nodes)])
    coeffs = P.polyfit(t_nodes / step, tangents, count - 1)
    rows = [coeffs[r] * math.factorial(r) / step**r for r in range(max_order)]
    return np.array(rows)


@dataclass(frozen=True)
class CuspData:
    k: float
    C: float
    s_k: float
    t_k: float
    point: tuple[float, float]
    tangent_norm: float
    discriminant: float
    directional_derivative: float

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "C": self.C,
            "s_k": self.s_k,
            "t_k": self.t_k,
            "point": list(self.point),
            "tangent_norm": self.tangent_norm,
            "discriminant": self.discriminant,
            "directional_derivative": self.directional_derivative,
        }


def cusp_analysis(k: float, C: float, tol: Tolerances | None = None) -> CuspData:
    """Tangent, discriminant and its slope along the limit tangent at s_k."""
    if k >= 1:
        raise InvalidK(f"cusps occur only for k < 1, got k={k!r}")
    ShapeParams(k, C)
    s_k = pc.cusp_parameter(k)
    t = t_of_s(s_k, k, C, tol)
    g = g_of_s(s_k, k, C)
    tangent = contour_tangent(s_k, k, C, tol=tol)
    # limit tangent: X0' with the common factor h' divided out
    limit = (1.0 / (4.0 * t), float(_w(s_k, k)) / (8.0 * k * s_k * math.sqrt(_h(s_k, k, C))))
    grad = discriminant_gradient(t, g, k)
    return CuspData(
        k=k,
        C=C,
        s_k=s_k,
        t_k=t,
        point=(t / 2.0, g),
        tangent_norm=float(np.linalg.norm(tangent)),
        discriminant=discriminant(t, g, k),
        directional_derivative=grad[0] * limit[0] + grad[1] * limit[1],
    )
