"""CRPC Helix MCP Server: helical constant-ratio surfaces as Model Context Protocol tools."""

from __future__ import annotations

from dotenv import load_dotenv

load_dotenv()

from fractions import Fraction

from mcp.server.fastmcp import FastMCP

from crpc_helix import diffgeo, planar, topview
from crpc_helix import params as pc
from crpc_helix import profile as pr
from crpc_helix.config import Tolerances, get_tolerances
from crpc_helix.errors import CrpcError

mcp = FastMCP(
    "CRPC Helix",
    instructions=(
        "You are a differential geometry assistant for helical surfaces whose principal "
        "curvature ratio is constant. Start with curvature_parameters to turn a ratio a "
        "into the invariant k, then shape_domain to check a shape constant C. "
        "verify_surface certifies the constant ratio numerically, classify_surface and "
        "plane_profile describe the shape for k > 1, cusp_analysis the singular helix for "
        "k < 1, and topview_polynomial returns the exact algebraic top view for rational k."
    ),
)

_tol: Tolerances | None = None


def _get_tol() -> Tolerances:
    global _tol
    if _tol is None:
        _tol = get_tolerances()
    return _tol


def _error(e: Exception) -> dict:
    if isinstance(e, CrpcError):
        return e.to_dict()
    return {"error": str(e), "hint": "Check the argument types and ranges."}


# ---------------------------------------------------------------------------
# Tool 1: Curvature Parameters
# ---------------------------------------------------------------------------
@mcp.tool()
def curvature_parameters(a: float | None = None, k: float | None = None) -> dict:
    """Translate a principal curvature ratio into the shape invariants.

    Returns k, the pair of ratios sharing it, the Gaussian curvature sign,
    the characteristic angle and, depending on k, C_k or the cusp parameter.

    Args:
        a: Principal curvature ratio kappa1/kappa2 (not 0, 1 or -1)
        k: Invariant |1 - a| / |1 + a|, alternative to a
    """
    try:
        if (a is None) == (k is None):
            return {"error": "give exactly one of a or k", "hint": "a = -1/2 and k = 3 describe the same family."}
        spec = pc.CurvatureSpec.from_a(a) if a is not None else pc.CurvatureSpec.from_k(k)
        a_low, a_high = spec.pair
        result = {
            "a": spec.a,
            "k": spec.k,
            "a_low": a_low,
            "a_high": a_high,
            "gauss_sign": spec.gauss_sign.value,
            "alpha": diffgeo.characteristic_angle(spec.a),
        }
        if spec.k > 1:
            result["C_k"] = pc.critical_C(spec.k)
        else:
            result["s_k"] = pc.cusp_parameter(spec.k)
            result["min_C"] = pc.min_C(spec.k)
        return result
    except Exception as e:
        return _error(e)


# ---------------------------------------------------------------------------
# Tool 2: Shape Domain
# ---------------------------------------------------------------------------
@mcp.tool()
def shape_domain(k: float, C: float) -> dict:
    """Get the solution interval of the profile parameter s for (k, C).

    Args:
        k: Invariant k (k != 1)
        C: Shape constant, must exceed min_C(k) when k < 1
    """
    try:
        domain = pc.compute_domain(k, C, _get_tol())
        return {**domain.to_dict(), "branches": ["full"] if k > 1 else ["minus", "plus"]}
    except Exception as e:
        return _error(e)


# ---------------------------------------------------------------------------
# Tool 3: Verify Surface
# ---------------------------------------------------------------------------
@mcp.tool()
def verify_surface(
    k: float,
    C: float,
    pitch: float = 0.5,
    branch: str = "auto",
    n_v: int = 32,
    n_t: int = 32,
    fd_only: bool = False,
) -> dict:
    """Certify the constant principal curvature ratio on a sample grid.

    Computes kappa1/kappa2 on an interior n_v x n_t grid and reports the
    maximum relative deviation from the expected pair, plus ODE-residual and
    Steiner-ratio statistics.

    Args:
        k: Invariant k
        C: Shape constant
        pitch: Helical pitch (default 0.5)
        branch: 'auto', 'full', 'minus' or 'plus'
        n_v: Grid size along the rotation angle (default 32)
        n_t: Grid size along the profile (default 32)
        fd_only: Use finite-difference partials instead of the analytic ones
    """
    try:
        report = diffgeo.crpc_certificate(
            k, C, pitch, (n_v, n_t), branch=branch, fd_only=fd_only, tol=_get_tol()
        )
        return report.model_dump(mode="json")
    except Exception as e:
        return _error(e)


# ---------------------------------------------------------------------------
# Tool 4: Classify Surface
# ---------------------------------------------------------------------------
@mcp.tool()
def classify_surface(k: float, C: float, pitch: float = 0.5) -> dict:
    """Classify a k > 1 surface as OneSided, AxisTouching or SelfIntersecting.

    SelfIntersecting surfaces also get the crossing point of their
    (y,z)-profile with the y-axis.

    Args:
        k: Invariant k, must be greater than 1
        C: Shape constant
        pitch: Helical pitch (default 0.5)
    """
    try:
        tol = _get_tol()
        result = planar.classify_shape(k, C, tol).to_dict()
        crossing = planar.self_intersection(k, C, pitch, tol)
        result["self_intersection"] = None if crossing is None else crossing.to_dict()
        return result
    except Exception as e:
        return _error(e)


# ---------------------------------------------------------------------------
# Tool 5: Cusp Analysis
# ---------------------------------------------------------------------------
@mcp.tool()
def cusp_analysis(k: float, C: float) -> dict:
    """Describe the cusp of a k < 1 profile at the singular parameter s_k.

    Returns the cusp point, the contour tangent norm there (zero), the
    discriminant value and its derivative along the limit tangent.

    Args:
        k: Invariant k, must be below 1
        C: Shape constant, must exceed min_C(k)
    """
    try:
        return pr.cusp_analysis(k, C, _get_tol()).to_dict()
    except Exception as e:
        return _error(e)


# ---------------------------------------------------------------------------
# Tool 6: Top View Polynomial
# ---------------------------------------------------------------------------
@mcp.tool()
def topview_polynomial(n: int, m: int, C: str | None = None) -> dict:
    """Exact implicit polynomial of the top view for rational k = n/m.

    Without C the shape constant stays symbolic. With C the residual of the
    polynomial on 200 profile samples is reported as well.

    Args:
        n: Numerator of k
        m: Denominator of k, coprime to n
        C: Optional exact rational shape constant such as '1' or '3/8'
    """
    try:
        exact = None if C is None else Fraction(C)
        poly = topview.build_implicit_polynomial(n, m, exact)
        result = {
            "polynomial": topview.poly_to_text(poly),
            "degree": poly.degree(("x", "y")),
            "degree_bound": topview.degree_bound(n, m),
        }
        if exact is not None:
            profile = pr.glued_profile(n / m, float(exact), tol=_get_tol())
            result["residual"] = topview.residual(poly, topview.topview_samples(profile), C=float(exact))
        return result
    except Exception as e:
        return _error(e)


# ---------------------------------------------------------------------------
# Tool 7: Plane Profile
# ---------------------------------------------------------------------------
@mcp.tool()
def plane_profile(
    k: float,
    C: float,
    pitch: float = 0.5,
    plane_angle: float | None = None,
    samples: int = 201,
) -> dict:
    """Intersect the surface with a plane through the helical axis.

    Defaults to the (y,z)-plane, or the (x,z)-plane when the axis lies on
    the surface. Points are (u, z) with u the signed distance from the axis.

    Args:
        k: Invariant k
        C: Shape constant
        pitch: Helical pitch (default 0.5)
        plane_angle: Angle of the plane in radians (optional)
        samples: Number of section points (default 201)
    """
    try:
        tol = _get_tol()
        angle = planar.default_plane(k, C, tol) if plane_angle is None else plane_angle
        section = planar.plane_section(k, C, pitch, angle, samples, tol=tol)
        return {
            "plane_angle": angle,
            "count": len(section),
            "piece_boundaries": list(section.piece_boundaries),
            "points": section.points.tolist(),
        }
    except Exception as e:
        return _error(e)


def main():
    """Run the CRPC Helix MCP server."""
    mcp.run()


if __name__ == "__main__":
    main()
