"""Shared parsing and formatting helpers for the CLI and the MCP server."""

from __future__ import annotations

import math
from fractions import Fraction

from crpc_helix.errors import ConfigError


def parse_grid(text: str) -> tuple[int, int]:
    """'64x64' -> (64, 64)."""
    try:
        n_v, n_t = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise ConfigError(f"grid must look like NVxNT, got {text!r}") from None
    if n_v < 2 or n_t < 2:
        raise ConfigError(f"grid must be at least 2x2, got {text!r}")
    return n_v, n_t


def parse_range(text: str) -> tuple[float, float]:
    """'0:6.283' -> (0.0, 6.283); 'tau' and 'pi' multiples are accepted."""
    try:
        lo, hi = (_parse_angle(part) for part in text.split(":"))
    except ValueError:
        raise ConfigError(f"range must look like LO:HI, got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo == hi:
        raise ConfigError(f"range must be finite and nonempty, got {text!r}")
    return lo, hi


def _parse_angle(part: str) -> float:
    part = part.strip().lower()
    for name, value in (("tau", 2.0 * math.pi), ("pi", math.pi)):
        if part.endswith(name):
            head = part[: -len(name)].rstrip("*")
            if head in ("", "+", "-"):
                head += "1"
            return float(head) * value
    return float(part)


def parse_ratio(text: str) -> tuple[int, int]:
    """'3' -> (3, 1), '5/3' -> (5, 3); must be a rational in lowest terms."""
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"k must be a rational n/m, got {text!r}") from None
    if value <= 0:
        raise ConfigError(f"k must be positive, got {text!r}")
    return value.numerator, value.denominator


def format_float(value: float) -> str:
    """Shortest round-tripping representation, used by every text writer."""
    if value == 0:
        return "0"
    return repr(float(value))
