"""Fundamental forms, principal curvatures and the checks that certify a
constant ratio of principal curvatures on the swept surface."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel

from crpc_helix import params as pc
from crpc_helix import profile as pr
from crpc_helix.config import Tolerances, resolve
from crpc_helix.errors import InvalidK, SingularPoint, UmbilicPoint
from crpc_helix.params import Branch, GaussSign
from crpc_helix.surface import (
    HelicalPatch,
    SurfacePartials,
    fd_partials,
    make_patch,
    partials_from_jet,
    surface_normal,
    surface_partials,
)

logger = logging.getLogger(__name__)

# ── Forms and curvatures ─────────────────────────────────────────────────


@dataclass(frozen=True)
class FundamentalForms:
    E: float
    F: float
    G: float
    L: float
    M: float
    N: float

    @property
    def metric_det(self) -> float:
        return self.E * self.G - self.F * self.F

    def first(self) -> np.ndarray:
        return np.array([[self.E, self.F], [self.F, self.G]])

    def second(self) -> np.ndarray:
        return np.array([[self.L, self.M], [self.M, self.N]])

    def to_dict(self) -> dict:
        return {"E": self.E, "F": self.F, "G": self.G, "L": self.L, "M": self.M, "N": self.N}


@dataclass(frozen=True)
class CurvatureReport:
    kappa1: float
    kappa2: float
    ratio: float
    alpha: float
    gauss_sign: GaussSign

    def to_dict(self) -> dict:
        return {
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "ratio": self.ratio,
            "alpha": self.alpha,
            "gauss_sign": self.gauss_sign.value,
        }


def fundamental_forms(partials: SurfacePartials, normal: np.ndarray) -> FundamentalForms:
    """E, F, G from the tangent vectors, L, M, N by projecting onto ``normal``."""
    X_v, X_t = partials.X_v, partials.X_t
    forms = FundamentalForms(
        E=float(X_v @ X_v),
        F=float(X_v @ X_t),
        G=float(X_t @ X_t),
        L=float(normal @ partials.X_vv),
        M=float(normal @ partials.X_vt),
        N=float(normal @ partials.X_tt),
    )
    if forms.E <= 0 or forms.G <= 0 or forms.metric_det <= 0:
        raise SingularPoint(f"degenerate first fundamental form (EG - F^2 = {forms.metric_det!r})")
    return forms


def gauss_mean_curvature(forms: FundamentalForms) -> tuple[float, float]:
    """(K, H) with K = det II / det I and H = trace(I^-1 II) / 2."""
    det = forms.metric_det
    K = (forms.L * forms.N - forms.M * forms.M) / det
    H = (forms.E * forms.N - 2.0 * forms.F * forms.M + forms.G * forms.L) / (2.0 * det)
    return K, H


def principal_curvatures(
    forms: FundamentalForms,
    *,
    t: float | None = None,
    path_first: bool | None = None,
    tol: Tolerances | None = None,
) -> CurvatureReport:
    """Eigenvalues of the shape operator I^-1 II.

    By default kappa1 is the eigenvalue of smaller modulus. With
    ``path_first`` kappa1 belongs to the principal direction closest to the
    helical path direction X_v instead. Left unset, ``path_first`` switches on
    when the profile parameter ``t`` lies within the singular band of the glue
    point.
    """
    tol = resolve(tol)
    if path_first is None:
        path_first = t is not None and abs(t) < tol.singular_band
    shape = np.linalg.solve(forms.first(), forms.second())
    values, vectors = np.linalg.eig(shape)
    values = values.real
    vectors = vectors.real
    scale = float(np.max(np.abs(values)))
    if abs(values[0] - values[1]) < tol.umbilic * scale or scale == 0:
        raise UmbilicPoint(f"principal curvatures coincide: {values[0]!r}, {values[1]!r}")

    if path_first:
        metric = forms.first()

        def path_alignment(vec: np.ndarray) -> float:
            along = metric[0] @ vec
            return abs(along) / math.sqrt(forms.E * float(vec @ metric @ vec))

        order = sorted(range(2), key=lambda i: -path_alignment(vectors[:, i]))
    else:
        order = sorted(range(2), key=lambda i: abs(values[i]))
    kappa1, kappa2 = float(values[order[0]]), float(values[order[1]])
    ratio = kappa1 / kappa2 if kappa2 != 0 else math.inf
    alpha = math.atan(math.sqrt(abs(ratio))) if math.isfinite(ratio) else math.pi / 2.0
    sign = GaussSign.POSITIVE if kappa1 * kappa2 > 0 else GaussSign.NEGATIVE
    return CurvatureReport(kappa1=kappa1, kappa2=kappa2, ratio=ratio, alpha=alpha, gauss_sign=sign)


def characteristic_angle(a: float) -> float:
    """alpha = arctan sqrt(|a|); DegenerateRatio for a in {0, 1, -1}."""
    pc.k_from_a(a)
    return math.atan(math.sqrt(abs(a)))


def conjugacy_defect(partials: SurfacePartials, normal: np.ndarray, forms: FundamentalForms | None = None) -> float:
    """II(path tangent, steepest descent), normalized by |X_v| |d| max|kappa|.

    The steepest-descent direction is -e_z projected into the tangent plane.
    Returns 0.0 where the tangent plane is horizontal.
    """
    forms = fundamental_forms(partials, normal) if forms is None else forms
    e_z = np.array([0.0, 0.0, 1.0])
    descent = -e_z + (e_z @ normal) * normal
    length = float(np.linalg.norm(descent))
    if length == 0:
        return 0.0
    rhs = np.array([partials.X_v @ descent, partials.X_t @ descent])
    alpha, beta = np.linalg.solve(forms.first(), rhs)
    bilinear = forms.L * alpha + forms.M * beta
    K, H = gauss_mean_curvature(forms)
    kappa_max = abs(H) + math.sqrt(max(H * H - K, 0.0))
    return abs(bilinear) / (math.sqrt(forms.E) * length * kappa_max)


# ── Scalar diagnostics along the contour ─────────────────────────────────


def ode_residual(s: float, k: float, C: float, *, g_scale: float = 1.0, tol: Tolerances | None = None) -> float:
    """Relative residual of (1 + t^2) + ((t + 1/t) g' + g)^2 = k^2 ((t + 1/t) g' - g)^2.

    g' is the derivative in t; (t + 1/t) g' is written as h * f'' with
    f'' = g'/t so the expression stays finite at t = 0. ``g_scale`` multiplies
    g and g' for negative controls.
    """
    if k == 1:
        raise InvalidK("the reduced ODE is degenerate for k = 1 (developable surfaces)")
    tol = resolve(tol)
    pc.ShapeParams(k, C)
    pr.t_of_s(s, k, C, tol)
    h = float(pr._h(s, k, C))
    g = g_scale * pr.g_of_s(s, k, C)
    f2 = g_scale * float(pr._slope(s, k, C))
    lhs = h + (h * f2 + g) ** 2
    rhs = k * k * (h * f2 - g) ** 2
    return abs(lhs - rhs) / max(lhs, rhs)


@dataclass(frozen=True)
class SteinerData:
    r_s: float
    d_s: float
    ratio: float

    def to_dict(self) -> dict:
        return {"r_s": self.r_s, "d_s": self.d_s, "ratio": self.ratio}


def steiner_diagnostic(s: float, k: float, C: float, *, g_scale: float = 1.0, tol: Tolerances | None = None) -> SteinerData:
    """Steiner circle radius, distance of the involution center, and their ratio.

    r_s = sqrt(1 + t^2) / 2 with center (0, r_s); the involution center is
    lambda * (1/2, f'' sqrt(1 + t^2)) with lambda = (1 + t^2) / ((1 + t^2) f'' - g).
    """
    tol = resolve(tol)
    pc.ShapeParams(k, C)
    pr.t_of_s(s, k, C, tol)
    h = float(pr._h(s, k, C))
    root_h = math.sqrt(h)
    g = g_scale * pr.g_of_s(s, k, C)
    f2 = g_scale * float(pr._slope(s, k, C))
    r_s = root_h / 2.0
    lam = h / (h * f2 - g)
    center = np.array([lam / 2.0, lam * f2 * root_h])
    d_s = float(np.linalg.norm(center - np.array([0.0, r_s])))
    return SteinerData(r_s=r_s, d_s=d_s, ratio=d_s / r_s)


def axis_point_ratio(k: float, C: float, branch: Branch | str = Branch.AUTO, tol: Tolerances | None = None) -> float:
    """LG / NE at the glue point X(0, 0).

    At t = 0 the point is (0, g0, 0) with X_v = (-g0, 0, 1/2), X_t = (1/2, 0, m0),
    X_vv = (0, -g0, 0) and X_tt = (0, m0, 0), where g0 = q(s0) and
    m0 = w(s0) / (4 k s0) because h(s0) = 1.
    """
    tol = resolve(tol)
    branch = pc.resolve_branch(k, branch)
    domain = pc.compute_domain(k, C, tol)
    s0 = domain.anchor(branch)
    g0 = float(pr._q(s0, k))
    m0 = float(pr._w(s0, k)) / (4.0 * k * s0)
    return (-g0) * (0.25 + m0 * m0) / (m0 * (g0 * g0 + 0.25))


def glue_point_forms(
    k: float,
    C: float,
    branch: Branch | str = Branch.AUTO,
    pitch: float = 0.5,
    tol: Tolerances | None = None,
) -> FundamentalForms:
    """Fundamental forms at (v, t) = (0, 0) of the scaled surface."""
    patch = make_patch(k, C, pitch, branch, tol=tol)
    partials = surface_partials(patch, 0.0, 0.0)
    return fundamental_forms(partials, surface_normal(patch, partials))


# ── Certificate ──────────────────────────────────────────────────────────


class Argmax(BaseModel):
    v: float
    t: float


class ResidualStats(BaseModel):
    max: float
    mean: float


class SteinerStats(BaseModel):
    max_rel_deviation: float
    mean_ratio: float


class CertificateReport(BaseModel):
    params: dict
    grid: dict
    partials: str
    max_rel_deviation: float
    bound: float
    passed: bool
    argmax: Argmax | None
    residual_stats: ResidualStats
    steiner_stats: SteinerStats
    gauss_sign_consistent: bool
    excluded_points: int


def certificate_grid(patch: HelicalPatch, n_v: int, n_t: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell-centered interior samples, so no node sits on a boundary or cusp row."""
    v0, v1 = patch.v_range
    extent = patch.extent
    v_values = v0 + (np.arange(n_v) + 0.5) * (v1 - v0) / n_v
    t_values = extent * (2.0 * (np.arange(n_t) + 0.5) / n_t - 1.0)
    return v_values, t_values


def _ratio_deviation(ratio: float, a_low: float, a_high: float) -> float:
    return min(abs(ratio - a_low) / abs(a_low), abs(ratio - a_high) / abs(a_high))


def _column_curvatures(
    patch: HelicalPatch,
    v_values: np.ndarray,
    t: float,
    fd_only: bool,
    tol: Tolerances,
) -> list[CurvatureReport | None]:
    out: list[CurvatureReport | None] = []
    jet = None if fd_only else patch.profile.jet(t)
    for v in v_values:
        try:
            if fd_only:
                partials = fd_partials(patch, float(v), t, tol.fd_step)
            else:
                partials = partials_from_jet(patch, float(v), jet)
            forms = fundamental_forms(partials, surface_normal(patch, partials))
            out.append(principal_curvatures(forms, t=t, tol=tol))
        except (SingularPoint, UmbilicPoint) as exc:
            logger.warning("[certificate] excluded (v=%.6g, t=%.6g): %s", v, t, exc)
            out.append(None)
    return out


def crpc_certificate(
    k: float,
    C: float,
    pitch: float = 0.5,
    grid: tuple[int, int] = (64, 64),
    *,
    branch: Branch | str = Branch.AUTO,
    v_range: tuple[float, float] = (0.0, 2.0 * math.pi),
    t_extent: float | None = None,
    fd_only: bool = False,
    g_scale: float = 1.0,
    workers: int | None = None,
    tol: Tolerances | None = None,
) -> CertificateReport:
    """Maximum relative deviation of kappa1/kappa2 from {a_low, a_high} over
    an interior grid, plus ODE-residual and Steiner-ratio statistics."""
    tol = resolve(tol)
    n_v, n_t = grid
    patch = make_patch(
        k, C, pitch, branch, g_scale=g_scale, tol=tol,
        v_range=v_range, grid=(max(n_v, 2), max(n_t, 2)), t_extent=t_extent,
    )
    a_low, a_high = pc.a_pair_from_k(k)
    v_values, t_values = certificate_grid(patch, n_v, n_t)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        columns = list(pool.map(lambda t: _column_curvatures(patch, v_values, float(t), fd_only, tol), t_values))

    magnitudes = [abs(c.kappa1) + abs(c.kappa2) for col in columns for c in col if c is not None]
    mean_kappa = 0.5 * float(np.mean(magnitudes)) if magnitudes else 0.0
    vanishing = tol.vanishing_curvature * mean_kappa
    expected_sign = pc.gauss_sign(k)

    worst, argmax, excluded = 0.0, None, 0
    sign_ok = True
    for j, col in enumerate(columns):
        for i, report in enumerate(col):
            if report is None or min(abs(report.kappa1), abs(report.kappa2)) < vanishing:
                excluded += 1
                continue
            sign_ok &= report.gauss_sign is expected_sign
            deviation = _ratio_deviation(report.ratio, a_low, a_high)
            if deviation > worst or argmax is None:
                worst = max(worst, deviation)
                argmax = Argmax(v=float(v_values[i]), t=float(t_values[j]))

    profile = patch.profile
    residuals, steiner = [], []
    for t in t_values:
        s = profile.s_of_t(float(t))
        residuals.append(ode_residual(s, k, C, g_scale=g_scale, tol=tol))
        steiner.append(steiner_diagnostic(s, k, C, g_scale=g_scale, tol=tol).ratio)
    steiner = np.array(steiner)

    bound = tol.fd_certificate_bound if fd_only else tol.certificate_bound
    residual_max = float(np.max(residuals))
    steiner_dev = float(np.max(np.abs(steiner - k)) / k)
    report = CertificateReport(
        params={
            "k": k,
            "C": C,
            "pitch": pitch,
            "branch": profile.branch_tag.value,
            "a_low": a_low,
            "a_high": a_high,
        },
        grid={"n_v": n_v, "n_t": n_t, "v_range": list(v_range), "t_extent": patch.extent},
        partials="fd" if fd_only else "analytic",
        max_rel_deviation=worst,
        bound=bound,
        passed=(
            worst <= bound
            and sign_ok
            and residual_max <= tol.residual_bound
            and steiner_dev <= tol.steiner_bound
        ),
        argmax=argmax,
        residual_stats=ResidualStats(max=residual_max, mean=float(np.mean(residuals))),
        steiner_stats=SteinerStats(
            max_rel_deviation=steiner_dev,
            mean_ratio=float(np.mean(steiner)),
        ),
        gauss_sign_consistent=sign_ok,
        excluded_points=excluded,
    )
    logger.info(
        "[certificate] k=%s C=%s %dx%d %s: max deviation %.3e (bound %.0e), %d excluded",
        k, C, n_v, n_t, report.partials, worst, bound, excluded,
    )
    return report
