"""Sections of the helical surface by planes through the axis, shape
classification for k > 1 and the self-intersection of the (y,z)-profile."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize

from crpc_helix import params as pc
from crpc_helix import profile as pr
from crpc_helix.config import Tolerances, resolve
from crpc_helix.errors import InvalidK
from crpc_helix.params import Branch

logger = logging.getLogger(__name__)

YZ_PLANE = math.pi / 2.0
XZ_PLANE = 0.0
_MAX_DOUBLINGS = 200


class ShapeClass(str, Enum):
    ONE_SIDED = "OneSided"
    AXIS_TOUCHING = "AxisTouching"
    SELF_INTERSECTING = "SelfIntersecting"


@dataclass(frozen=True)
class ShapeClassification:
    shape: ShapeClass
    C: float
    C_k: float
    min_g: float
    consistent: bool

    def to_dict(self) -> dict:
        return {
            "class": self.shape.value,
            "C": self.C,
            "C_k": self.C_k,
            "min_g": self.min_g,
            "consistent": self.consistent,
        }


@dataclass(frozen=True)
class PlanarProfile:
    """Ordered (u, z) section points; u is the signed distance from the axis
    inside the plane at ``plane_angle``."""

    plane_angle: float
    pitch: float
    points: np.ndarray
    t: np.ndarray
    s: np.ndarray
    v: np.ndarray
    pieces: np.ndarray
    piece_boundaries: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.points)

    def rows(self) -> list[tuple[float, float, float, int]]:
        """(s, u, z, piece) rows in sample order."""
        return [
            (float(s), float(u), float(z), int(piece))
            for s, (u, z), piece in zip(self.s, self.points, self.pieces)
        ]


# ── Classification ───────────────────────────────────────────────────────


def _require_a_negative(k: float) -> None:
    if not k > 1:
        raise InvalidK(f"shape classification applies to k > 1, got k={k!r}")


def classify_shape(k: float, C: float, tol: Tolerances | None = None) -> ShapeClassification:
    """OneSided for C < C_k, AxisTouching at C_k, SelfIntersecting above.

    Cross-checked against min g = g(s0), which is positive, zero or negative
    in the same three cases.
    """
    _require_a_negative(k)
    tol = resolve(tol)
    C_k = pc.critical_C(k)
    if abs(C - C_k) <= tol.classify_rel * C_k:
        shape = ShapeClass.AXIS_TOUCHING
    elif C < C_k:
        shape = ShapeClass.ONE_SIDED
    else:
        shape = ShapeClass.SELF_INTERSECTING

    s0 = pc.compute_domain(k, C, tol).s0
    min_g = pr.g_of_s(s0, k, C)
    if shape is ShapeClass.ONE_SIDED:
        consistent = min_g > 0
    elif shape is ShapeClass.SELF_INTERSECTING:
        consistent = min_g < 0
    else:
        consistent = abs(min_g) <= math.sqrt(tol.classify_rel)
    if not consistent:
        logger.warning("[classify] k=%s C=%s: %s disagrees with min g=%r", k, C, shape.value, min_g)
    return ShapeClassification(shape=shape, C=C, C_k=C_k, min_g=min_g, consistent=consistent)


def default_plane(k: float, C: float, tol: Tolerances | None = None) -> float:
    """The (x,z)-plane when the axis lies on the surface, else the (y,z)-plane."""
    if k > 1 and classify_shape(k, C, tol).shape is ShapeClass.AXIS_TOUCHING:
        return XZ_PLANE
    return YZ_PLANE


# ── Plane sections ───────────────────────────────────────────────────────


def _g_zero_parameter(profile: pr.GluedProfile) -> float | None:
    """|t| where g changes sign on the profile, if it does."""
    k = profile.k
    if k < 1:
        return None
    s_g = math.sqrt((k + 1.0) / (k - 1.0))
    if s_g <= profile.anchor:
        return None
    return pr.t_of_s(s_g, k, profile.C, profile.tol)


def _fill_axis_angles(t: np.ndarray, raw: np.ndarray, on_axis: np.ndarray) -> np.ndarray:
    if not on_axis.any() or on_axis.all():
        return np.where(on_axis, 0.0, raw)
    # a point on the axis lies in every plane; borrow the angle from its neighbours
    unwrapped = np.unwrap(raw[~on_axis], period=math.pi)
    filled = np.interp(t, t[~on_axis], unwrapped)
    out = raw.copy()
    out[on_axis] = filled[on_axis]
    return out


def plane_section(
    k: float,
    C: float,
    pitch: float = 0.5,
    plane_angle: float = YZ_PLANE,
    samples: int = 1001,
    *,
    branch: Branch | str = Branch.AUTO,
    extent: float | None = None,
    workers: int | None = None,
    tol: Tolerances | None = None,
) -> PlanarProfile:
    """Screw every profile point into the plane through the axis at ``plane_angle``.

    The rotation angle is continued along t (unwrapped modulo pi) and fixed so
    that it lies in (-pi/2, pi/2] at the glue point. Uniform t is already
    graded toward the domain root in s.
    """
    tol = resolve(tol)
    pc.ShapeParams(k, C, pitch)
    if samples < 2:
        raise ValueError("plane_section needs at least two samples")
    profile = pr.glued_profile(k, C, branch, tol=tol)
    half = profile.default_extent() if extent is None else extent
    t = np.linspace(-half, half, samples)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        pts = np.array(list(pool.map(lambda tau: profile.point(float(tau)), t)))
    s = np.array([profile.s_of_t(float(tau)) for tau in t])
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    radius = np.hypot(x, y)

    on_axis = radius <= tol.singular_band * max(1.0, float(radius.max()))
    raw = np.mod(plane_angle - np.arctan2(y, x), math.pi)
    v = np.unwrap(_fill_axis_angles(t, raw, on_axis), period=math.pi)
    center = int(np.argmin(np.abs(t)))
    v = v - math.pi * math.ceil((v[center] - math.pi / 2.0) / math.pi)

    c, sn = math.cos(plane_angle), math.sin(plane_angle)
    rot_x = x * np.cos(v) - y * np.sin(v)
    rot_y = x * np.sin(v) + y * np.cos(v)
    u = rot_x * c + rot_y * sn
    z_total = z + 0.5 * v
    scale = 2.0 * pitch

    boundaries = [0.0]
    t_g = _g_zero_parameter(profile)
    if t_g is not None and t_g <= half:
        boundaries = [-t_g, 0.0, t_g]
    pieces = np.searchsorted(np.array(boundaries), t, side="right")

    logger.debug(
        "[planar] k=%s C=%s plane=%.6g: %d samples, max |dv| %.3g",
        k, C, plane_angle, samples, float(np.max(np.abs(np.diff(v)))),
    )
    return PlanarProfile(
        plane_angle=plane_angle,
        pitch=pitch,
        points=scale * np.column_stack([u, z_total]),
        t=t,
        s=s,
        v=v,
        pieces=pieces,
        piece_boundaries=tuple(boundaries),
    )


def profile_formula_oracle(k: float, C: float, s: float, tol: Tolerances | None = None) -> tuple[float, float]:
    """Closed-form (u, z) of the X0 half at parameter s, pitch 1/2, for k > 1.

    (y,z)-plane for C != C_k, (x,z)-plane at C = C_k. Above C_k the formula
    switches where g vanishes; both pieces meet continuously there.
    """
    shape = classify_shape(k, C, tol).shape
    t = pr.t_of_s(s, k, C, tol)
    g = pr.g_of_s(s, k, C)
    z = pr.z_of_s(s, k, C, tol=tol)
    r = math.hypot(t / 2.0, g)
    if shape is ShapeClass.ONE_SIDED:
        return r, z + 0.5 * math.atan(t / (2.0 * g))
    if shape is ShapeClass.AXIS_TOUCHING:
        return r, z - 0.5 * math.atan(2.0 * g / t)
    if g < 0:
        return -r, z + 0.5 * math.atan(t / (2.0 * g))
    return -r, z - math.pi / 4.0 - 0.5 * math.atan(2.0 * g / t)


# ── Self-intersection ────────────────────────────────────────────────────


@dataclass(frozen=True)
class SelfIntersection:
    """Crossing of the (y,z)-profile with the y-axis; reached from t and -t."""

    t: float
    s: float
    point: tuple[float, float]
    preimages: tuple[tuple[float, float], tuple[float, float]]

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "s": self.s,
            "point": list(self.point),
            "preimages": [{"v": v, "t": t} for v, t in self.preimages],
        }


def self_intersection(
    k: float,
    C: float,
    pitch: float = 0.5,
    tol: Tolerances | None = None,
) -> SelfIntersection | None:
    """Where the lower (y,z)-profile half meets its mirror image on the y-axis.

    On t > 0 the section height is zeta(t) = z(t) - pi/4 - atan(2g/t)/2, which
    starts at zero with slope -inf and grows without bound. None unless the
    shape is SelfIntersecting.
    """
    tol = resolve(tol)
    if classify_shape(k, C, tol).shape is not ShapeClass.SELF_INTERSECTING:
        return None
    profile = pr.glued_profile(k, C, Branch.FULL, tol=tol)

    def zeta(tau: float) -> float:
        _, g, z = profile.point(tau)
        return z - math.pi / 4.0 - 0.5 * math.atan(2.0 * g / tau)

    lo = 1e-3 * profile.default_extent()
    for _ in range(_MAX_DOUBLINGS):
        if zeta(lo) < 0:
            break
        lo *= 0.5
    hi = 2.0 * lo
    for _ in range(_MAX_DOUBLINGS):
        if zeta(hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    root = optimize.brentq(zeta, lo, hi, xtol=1e-14, rtol=tol.root_rtol, maxiter=200)

    _, g, _ = profile.point(root)
    radius = math.hypot(root / 2.0, g)
    slope = math.atan(2.0 * g / root)
    preimages = ((-math.pi / 2.0 - slope, root), (math.pi / 2.0 + slope, -root))
    logger.info("[planar] k=%s C=%s self-intersection at t=%.12g", k, C, root)
    return SelfIntersection(
        t=root,
        s=profile.s_of_t(root),
        point=(-2.0 * pitch * radius, 0.0),
        preimages=preimages,
    )
