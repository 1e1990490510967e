"""Exception hierarchy shared by the library, the CLI and the MCP server."""

from __future__ import annotations

EXIT_OK = 0
EXIT_CERTIFICATE = 1
EXIT_CONFIG = 2
EXIT_MATH = 3


class CrpcError(Exception):
    """Base class. ``code`` is stable and machine-readable."""

    code = "crpc_error"
    exit_code = EXIT_MATH
    hint = ""

    def __init__(self, message: str = "", *, hint: str | None = None) -> None:
        super().__init__(message)
        if hint is not None:
            self.hint = hint

    def to_dict(self) -> dict:
        data = {"error": self.code, "kind": type(self).__name__, "message": str(self)}
        if self.hint:
            data["hint"] = self.hint
        return data


class ConfigError(CrpcError):
    code = "invalid_config"
    exit_code = EXIT_CONFIG


class DegenerateRatio(CrpcError):
    """Curvature ratio hits one of the excluded surface classes."""

    code = "degenerate_ratio"
    exit_code = EXIT_CONFIG

    def __init__(self, case: str, value: float) -> None:
        self.case = case
        self.value = value
        super().__init__(f"curvature input {value!r} is degenerate ({case})")

    def to_dict(self) -> dict:
        data = super().to_dict()
        data["case"] = self.case
        return data


class InvalidK(CrpcError):
    code = "invalid_k"
    exit_code = EXIT_CONFIG


class BranchMismatch(CrpcError):
    code = "branch_mismatch"
    exit_code = EXIT_CONFIG
    hint = "Use branch Full for k > 1 and Minus or Plus for k < 1."


class EmptyDomain(CrpcError):
    code = "empty_domain"
    hint = "For k < 1 the shape constant C must exceed min_C(k)."


class NonPositiveS(CrpcError):
    code = "nonpositive_s"


class OutsideDomain(CrpcError):
    code = "outside_domain"


class QuadratureFailure(CrpcError):
    code = "quadrature_failure"


class SingularPoint(CrpcError):
    code = "singular_point"


class UmbilicPoint(CrpcError):
    code = "umbilic_point"


class DegreeBlowup(CrpcError):
    code = "degree_blowup"
