"""Helical sweep of glued profiles into evaluable surfaces and quad meshes."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from crpc_helix.config import resolve
from crpc_helix.errors import ConfigError, InvalidK, SingularPoint
from crpc_helix.params import Branch, ShapeParams
from crpc_helix.profile import GluedProfile, ProfileJet, glued_profile

logger = logging.getLogger(__name__)

INTERNAL_PITCH = 0.5
_BOUNDARY_SHRINK = 1e-3


def helical_motion(v, point, internal_pitch: float = INTERNAL_PITCH) -> np.ndarray:
    """Screw ``point`` about the z-axis by angle v (scalar or array of angles)."""
    x, y, z = point
    v = np.asarray(v, dtype=float)
    c, s = np.cos(v), np.sin(v)
    return np.stack([x * c - y * s, x * s + y * c, z + internal_pitch * v], axis=-1)


@dataclass(frozen=True)
class HelicalPatch:
    profile: GluedProfile
    pitch: float = 0.5
    v_range: tuple[float, float] = (0.0, 2.0 * math.pi)
    grid: tuple[int, int] = (32, 32)
    t_extent: float | None = None
    include_singular: bool = False
    mirror: bool = False

    def __post_init__(self) -> None:
        n_v, n_t = self.grid
        if n_v < 2 or n_t < 2:
            raise ConfigError(f"grid must be at least 2x2, got {n_v}x{n_t}")
        if not all(math.isfinite(v) for v in self.v_range):
            raise ConfigError(f"v_range must be finite, got {self.v_range}")
        if not math.isfinite(self.pitch) or self.pitch == 0:
            raise ConfigError(f"pitch must be nonzero and finite, got {self.pitch!r}")

    @property
    def scale(self) -> float:
        return 2.0 * self.pitch

    @property
    def extent(self) -> float:
        """Half-width of the sampled t-interval."""
        t_max = self.profile.t_max
        if self.t_extent is not None:
            extent = self.t_extent
            if t_max is not None:
                extent = min(extent, t_max)
        else:
            extent = self.profile.default_extent()
        if t_max is not None and not self.include_singular and extent >= t_max:
            extent = t_max * (1.0 - _BOUNDARY_SHRINK)
        return extent

    @property
    def orientation(self) -> float:
        """+1 when X_v x X_t already points along the chosen normal."""
        sign = 1.0 if self.profile.k > 1 else -1.0
        return -sign if self.mirror else sign

    def v_values(self) -> np.ndarray:
        return np.linspace(self.v_range[0], self.v_range[1], self.grid[0])

    def t_values(self) -> np.ndarray:
        extent = self.extent
        return np.linspace(-extent, extent, self.grid[1])


def make_patch(
    k: float,
    C: float,
    pitch: float = 0.5,
    branch: Branch | str = Branch.AUTO,
    **kwargs,
) -> HelicalPatch:
    profile = glued_profile(k, C, branch, g_scale=kwargs.pop("g_scale", 1.0), tol=kwargs.pop("tol", None))
    return HelicalPatch(profile=profile, pitch=pitch, **kwargs)


def _reflect(vector: np.ndarray, mirror: bool) -> np.ndarray:
    if mirror:
        vector = vector.copy()
        vector[..., 1] = -vector[..., 1]
    return vector


def evaluate_surface(patch: HelicalPatch, v: float, t: float) -> np.ndarray:
    """2p * H(v, profile(t)), reflected through the (x,z)-plane when mirrored."""
    point = patch.profile.point(t)
    return _reflect(patch.scale * helical_motion(v, point), patch.mirror)


@dataclass(frozen=True)
class SurfacePartials:
    X_v: np.ndarray
    X_t: np.ndarray
    X_vv: np.ndarray
    X_vt: np.ndarray
    X_tt: np.ndarray


def _rotate(v: float, vector: np.ndarray) -> np.ndarray:
    c, s = math.cos(v), math.sin(v)
    return np.array([vector[0] * c - vector[1] * s, vector[0] * s + vector[1] * c, vector[2]])


def _rotate_prime(v: float, vector: np.ndarray) -> np.ndarray:
    c, s = math.cos(v), math.sin(v)
    return np.array([-vector[0] * s - vector[1] * c, vector[0] * c - vector[1] * s, 0.0])


def _rotate_second(v: float, vector: np.ndarray) -> np.ndarray:
    c, s = math.cos(v), math.sin(v)
    return np.array([-vector[0] * c + vector[1] * s, -vector[0] * s - vector[1] * c, 0.0])


def partials_from_jet(patch: HelicalPatch, v: float, jet: ProfileJet) -> SurfacePartials:
    position = np.array([jet.x, jet.y, 0.0])
    X_v = _rotate_prime(v, position)
    X_v[2] = INTERNAL_PITCH
    vectors = (
        X_v,
        _rotate(v, jet.d1),
        _rotate_second(v, position),
        _rotate_prime(v, jet.d1),
        _rotate(v, jet.d2),
    )
    scaled = [_reflect(patch.scale * vec, patch.mirror) for vec in vectors]
    return SurfacePartials(*scaled)


def surface_partials(patch: HelicalPatch, v: float, t: float) -> SurfacePartials:
    """Analytic X_v, X_t, X_vv, X_vt, X_tt; SingularPoint on the cusp row."""
    return partials_from_jet(patch, v, patch.profile.jet(t))


def fd_partials(patch: HelicalPatch, v: float, t: float, step: float | None = None) -> SurfacePartials:
    """Central finite-difference partials of evaluate_surface."""
    h = resolve(patch.profile.tol).fd_step if step is None else step
    if patch.profile.is_singular(t):
        raise SingularPoint(f"t={t!r} lies on the cusp |t| = t_k")

    def X(dv: float, dt: float) -> np.ndarray:
        return evaluate_surface(patch, v + dv, t + dt)

    center = X(0.0, 0.0)
    vp, vm = X(h, 0.0), X(-h, 0.0)
    tp, tm = X(0.0, h), X(0.0, -h)
    return SurfacePartials(
        X_v=(vp - vm) / (2.0 * h),
        X_t=(tp - tm) / (2.0 * h),
        X_vv=(vp - 2.0 * center + vm) / (h * h),
        X_vt=(X(h, h) - X(h, -h) - X(-h, h) + X(-h, -h)) / (4.0 * h * h),
        X_tt=(tp - 2.0 * center + tm) / (h * h),
    )


def surface_normal(patch: HelicalPatch, partials: SurfacePartials) -> np.ndarray:
    cross = np.cross(partials.X_v, partials.X_t)
    norm = np.linalg.norm(cross)
    if norm == 0:
        raise SingularPoint("X_v and X_t are parallel")
    return patch.orientation * cross / norm


@dataclass(frozen=True)
class SurfaceMesh:
    vertices: np.ndarray
    normals: np.ndarray
    faces: np.ndarray
    grid_shape: tuple[int, int]
    singular_flags: np.ndarray
    v_values: np.ndarray = field(repr=False)
    t_values: np.ndarray = field(repr=False)

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    def triangles(self) -> np.ndarray:
        """Each quad (a, b, c, d) split into (a, b, c) and (a, c, d)."""
        quads = self.faces
        return np.concatenate([quads[:, [0, 1, 2]], quads[:, [0, 2, 3]]])


def _column(patch: HelicalPatch, v_values: np.ndarray, t: float):
    profile = patch.profile
    positions = _reflect(patch.scale * helical_motion(v_values, profile.point(t)), patch.mirror)
    normals = np.full_like(positions, np.nan)
    if profile.is_singular(t):
        return positions, normals, True
    jet = profile.jet(t)
    for i, v in enumerate(v_values):
        normals[i] = surface_normal(patch, partials_from_jet(patch, float(v), jet))
    return positions, normals, False


def sample_mesh(patch: HelicalPatch, workers: int | None = None) -> SurfaceMesh:
    """Regular n_v x n_t grid; vertex (i, j) sits at index i * n_t + j."""
    n_v, n_t = patch.grid
    v_values = patch.v_values()
    t_values = patch.t_values()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        columns = list(pool.map(lambda t: _column(patch, v_values, float(t)), t_values))

    vertices = np.empty((n_v, n_t, 3))
    normals = np.empty((n_v, n_t, 3))
    flags = np.zeros((n_v, n_t), dtype=bool)
    for j, (positions, column_normals, singular) in enumerate(columns):
        vertices[:, j] = positions
        normals[:, j] = column_normals
        flags[:, j] = singular

    faces = []
    for i in range(n_v - 1):
        for j in range(n_t - 1):
            a, b = i * n_t + j, (i + 1) * n_t + j
            c, d = b + 1, a + 1
            faces.append((a, b, c, d) if patch.orientation > 0 else (a, d, c, b))
    logger.info("[mesh] %dx%d grid, %d singular vertices", n_v, n_t, int(flags.sum()))
    return SurfaceMesh(
        vertices=vertices.reshape(-1, 3),
        normals=normals.reshape(-1, 3),
        faces=np.array(faces, dtype=np.int64).reshape(-1, 4),
        grid_shape=(n_v, n_t),
        singular_flags=flags.reshape(-1),
        v_values=v_values,
        t_values=t_values,
    )


def singular_curve(
    k: float,
    C: float,
    pitch: float = 0.5,
    v_range: tuple[float, float] = (0.0, 2.0 * math.pi),
    n_v: int = 64,
) -> np.ndarray:
    """The helix swept by the cusp point X0(s_k), z anchored at s0."""
    if k >= 1:
        raise InvalidK(f"the singular helix exists only for k < 1, got k={k!r}")
    ShapeParams(k, C, pitch)
    profile = glued_profile(k, C, Branch.MINUS)
    cusp = profile.point(profile.t_max)
    return 2.0 * pitch * helical_motion(np.linspace(v_range[0], v_range[1], n_v), cusp)
