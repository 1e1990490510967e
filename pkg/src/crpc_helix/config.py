"""Central tolerance record and environment-driven preset selection."""

from __future__ import annotations

import logging
import os

from pydantic import BaseModel, ConfigDict, Field

from crpc_helix.errors import ConfigError

logger = logging.getLogger(__name__)

PROFILE_ENV = "CRPC_TOLERANCE_PROFILE"


class Tolerances(BaseModel):
    """Every numeric tolerance used by the library, in one place."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    root_rtol: float = Field(1e-12, gt=0)
    inversion_rtol: float = Field(1e-13, gt=0)
    quad_abs: float = Field(1e-10, gt=0)
    quad_rel: float = Field(1e-12, gt=0)
    quad_panel_cap: int = Field(200, ge=10)
    near_critical: float = Field(1e-10, ge=0)
    umbilic: float = Field(1e-12, ge=0)
    vanishing_curvature: float = Field(1e-10, ge=0)
    singular_band: float = Field(1e-9, ge=0)
    classify_rel: float = Field(1e-10, ge=0)
    domain_slack: float = Field(1e-12, ge=0)
    fd_step: float = Field(1e-4, gt=0)
    series_switch: float = Field(1e-7, ge=0)
    certificate_bound: float = Field(1e-8, gt=0)
    fd_certificate_bound: float = Field(1e-4, gt=0)
    residual_bound: float = Field(1e-9, gt=0)
    steiner_bound: float = Field(1e-8, gt=0)


PRESETS: dict[str, Tolerances] = {
    "default": Tolerances(),
    "strict": Tolerances(root_rtol=1e-14, quad_abs=1e-12, quad_panel_cap=400, certificate_bound=1e-9),
    "loose": Tolerances(root_rtol=1e-10, quad_abs=1e-8, certificate_bound=1e-6, fd_certificate_bound=1e-3),
}

_default: Tolerances | None = None


def preset(name: str) -> Tolerances:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown tolerance profile {name!r}; expected one of {sorted(PRESETS)}"
        ) from None


def get_tolerances() -> Tolerances:
    """Process-wide default, chosen once from $CRPC_TOLERANCE_PROFILE."""
    global _default
    if _default is None:
        name = os.getenv(PROFILE_ENV, "default").strip() or "default"
        _default = preset(name)
        logger.debug("[config] tolerance profile %s", name)
    return _default


def reset_tolerances() -> None:
    """Forget the cached default so the environment is read again."""
    global _default
    _default = None


def resolve(tol: Tolerances | None) -> Tolerances:
    return get_tolerances() if tol is None else tol
