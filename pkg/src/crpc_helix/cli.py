"""crpc-helix command line: generate, verify, topview, classify, profile, report."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import tomllib
from enum import Enum
from fractions import Fraction
from pathlib import Path

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from crpc_helix import __version__
from crpc_helix import diffgeo, export, planar, topview
from crpc_helix import params as pc
from crpc_helix import profile as pr
from crpc_helix.config import Tolerances, get_tolerances
from crpc_helix.errors import EXIT_CERTIFICATE, EXIT_OK, ConfigError, CrpcError
from crpc_helix.params import Branch
from crpc_helix.surface import make_patch, sample_mesh, singular_curve
from crpc_helix.timing import StageTimer, track
from crpc_helix.utils import parse_grid, parse_range, parse_ratio

logger = logging.getLogger("crpc_helix")

SCHEMA_VERSION = "1"


class OutputFormat(str, Enum):
    OBJ = "obj"
    CSV = "csv"
    JSON = "json"
    SVG = "svg"
    POLY = "poly"


_FORMATS = {
    "generate": {OutputFormat.OBJ, OutputFormat.CSV},
    "verify": {OutputFormat.JSON},
    "report": {OutputFormat.JSON},
    "classify": {OutputFormat.JSON},
    "topview": {OutputFormat.POLY, OutputFormat.JSON},
    "profile": {OutputFormat.SVG, OutputFormat.CSV},
}


class RunConfig(BaseModel):
    """Everything one command needs; built from TOML and flags, flags win."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: str
    a: float | None = None
    k: float | None = None
    C: float | None = None
    pitch: float = 0.5
    branch: Branch = Branch.AUTO
    grid: tuple[int, int] = (32, 32)
    v_range: tuple[float, float] = (0.0, 2.0 * math.pi)
    format: OutputFormat | None = None
    out: Path | None = None
    profile_csv: Path | None = None
    singular_obj: Path | None = None
    n: int | None = None
    m: int | None = None
    symbolic_C: bool = False
    C_exact: str | None = None
    samples: int = 1001
    plane_angle: float | None = None
    fd_only: bool = False
    mirror: bool = False
    seed: int | None = None
    workers: int | None = None
    timings: bool = False
    tamper_g: float = 1.0
    tolerances: dict[str, float] = {}

    @model_validator(mode="after")
    def _check(self) -> RunConfig:
        if self.a is not None and self.k is not None:
            raise ValueError("give either a or k, not both")
        if self.format is not None and self.format not in _FORMATS.get(self.command, set(OutputFormat)):
            raise ValueError(f"format {self.format.value!r} is not available for {self.command!r}")
        return self

    def curvature_k(self) -> float:
        if self.a is not None:
            return pc.k_from_a(self.a)
        if self.k is not None:
            return self.k
        raise ConfigError(f"{self.command} needs --a or --k")

    def shape_C(self) -> float:
        if self.C is None:
            raise ConfigError(f"{self.command} needs --C")
        return self.C

    def tol(self) -> Tolerances:
        base = get_tolerances()
        if not self.tolerances:
            return base
        return Tolerances(**{**base.model_dump(), **self.tolerances})

    def echo(self) -> dict:
        data = self.model_dump(mode="json", exclude={"out", "profile_csv", "singular_obj", "timings", "workers"})
        return {key: value for key, value in data.items() if value is not None}


# ── Config assembly ──────────────────────────────────────────────────────


def _load_toml(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config file {str(path)!r}: {exc}") from None
    for key in ("grid", "v_range"):
        if isinstance(data.get(key), str):
            data[key] = parse_grid(data[key]) if key == "grid" else parse_range(data[key])
    return data


def build_config(args: argparse.Namespace) -> RunConfig:
    data = _load_toml(getattr(args, "config", None))
    flags = {
        key: value
        for key, value in vars(args).items()
        if key not in ("config", "verbose", "func") and value is not None and value is not False
    }
    if "k_text" in flags:
        text = flags.pop("k_text")
        if "/" in text:
            flags["n"], flags["m"] = parse_ratio(text)
        else:
            flags["k"] = float(text)
    if isinstance(flags.get("C"), str):
        text = flags.pop("C")
        flags["C_exact"] = text
        flags["C"] = float(Fraction(text))
    data.update(flags)
    try:
        return RunConfig(**data)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc.errors(include_url=False)}") from None


# ── Commands ─────────────────────────────────────────────────────────────


def _emit(cfg: RunConfig, data: dict) -> None:
    if cfg.out is not None:
        export.write_json(cfg.out, data)
    else:
        sys.stdout.write(export.dumps_json(data))


def cmd_generate(cfg: RunConfig, timer: StageTimer) -> int:
    k, C, tol = cfg.curvature_k(), cfg.shape_C(), cfg.tol()
    with track("profile", timer):
        patch = make_patch(
            k, C, cfg.pitch, cfg.branch, tol=tol,
            grid=cfg.grid, v_range=cfg.v_range, mirror=cfg.mirror,
        )
    files = []
    fmt = cfg.format or OutputFormat.OBJ
    if fmt is OutputFormat.CSV:
        rows = export.profile_rows(patch.profile, patch.t_values())
        files.append(str(export.write_profile_csv(cfg.out or Path("profile.csv"), rows)))
        summary = {"rows": len(rows)}
    else:
        with track("mesh", timer):
            mesh = sample_mesh(patch, cfg.workers)
        comments = [f"crpc-helix {__version__}", f"k={k!r} C={C!r} pitch={cfg.pitch!r} branch={patch.profile.branch_tag.value}"]
        files.append(str(export.write_obj(cfg.out or Path("surface.obj"), mesh, comments)))
        summary = {"vertices": mesh.vertex_count, "faces": len(mesh.faces), "singular_vertices": int(mesh.singular_flags.sum())}
        if cfg.profile_csv is not None:
            rows = export.profile_rows(patch.profile, patch.t_values())
            files.append(str(export.write_profile_csv(cfg.profile_csv, rows)))
    if cfg.singular_obj is not None:
        points = singular_curve(k, C, cfg.pitch, cfg.v_range, cfg.grid[0])
        files.append(str(export.write_polyline_obj(cfg.singular_obj, points, ["singular helix"])))
    sys.stdout.write(export.dumps_json({**summary, "files": files}))
    return EXIT_OK


def _certificate(cfg: RunConfig, timer: StageTimer) -> diffgeo.CertificateReport:
    k, C = cfg.curvature_k(), cfg.shape_C()
    with track("certificate", timer):
        return diffgeo.crpc_certificate(
            k, C, cfg.pitch, cfg.grid,
            branch=cfg.branch,
            v_range=cfg.v_range,
            fd_only=cfg.fd_only,
            g_scale=cfg.tamper_g,
            workers=cfg.workers,
            tol=cfg.tol(),
        )


def cmd_verify(cfg: RunConfig, timer: StageTimer) -> int:
    report = _certificate(cfg, timer)
    _emit(cfg, report.model_dump(mode="json"))
    return EXIT_OK if report.passed else EXIT_CERTIFICATE


def _topview_ratio(cfg: RunConfig) -> tuple[int, int]:
    if cfg.n is not None and cfg.m is not None:
        return cfg.n, cfg.m
    if cfg.k is not None:
        value = Fraction(cfg.k).limit_denominator(1000)
        if float(value) != cfg.k:
            raise ConfigError(f"k={cfg.k!r} is not a small rational; pass --n and --m")
        return value.numerator, value.denominator
    raise ConfigError("topview needs --n and --m (or a rational --k)")


def cmd_topview(cfg: RunConfig, timer: StageTimer) -> int:
    n, m = _topview_ratio(cfg)
    if cfg.C is None and not cfg.symbolic_C:
        raise ConfigError("topview needs --C or --symbolic-C")
    exact_C = None if cfg.symbolic_C else Fraction(cfg.C_exact or repr(cfg.C))
    with track("elimination", timer):
        poly = topview.build_implicit_polynomial(n, m, exact_C)

    residual = None
    if cfg.C is not None:
        with track("residual", timer):
            profile = pr.glued_profile(n / m, cfg.C, tol=cfg.tol())
            rng = None if cfg.seed is None else np.random.default_rng(cfg.seed)
            samples = topview.topview_samples(profile, 200, rng=rng)
            residual = topview.residual(poly, samples, C=cfg.C)

    fmt = cfg.format or OutputFormat.POLY
    summary = {
        "n": n,
        "m": m,
        "C": "symbolic" if exact_C is None else str(exact_C),
        "degree": poly.degree(("x", "y")),
        "degree_bound": topview.degree_bound(n, m),
        "terms": len(poly.coefficients()),
        "residual": residual,
    }
    if cfg.out is not None:
        if fmt is OutputFormat.JSON:
            export.write_json(cfg.out, {**summary, "polynomial": topview.poly_to_json(poly)})
        else:
            export.write_text(cfg.out, topview.poly_to_text(poly))
        summary["file"] = str(cfg.out)
    else:
        summary["polynomial"] = topview.poly_to_text(poly)
    sys.stdout.write(export.dumps_json(summary))
    return EXIT_OK


def cmd_classify(cfg: RunConfig, timer: StageTimer) -> int:
    k, C, tol = cfg.curvature_k(), cfg.shape_C(), cfg.tol()
    with track("classify", timer):
        result = planar.classify_shape(k, C, tol).to_dict()
        crossing = planar.self_intersection(k, C, cfg.pitch, tol)
    result["self_intersection"] = None if crossing is None else crossing.to_dict()
    _emit(cfg, result)
    return EXIT_OK


def cmd_profile(cfg: RunConfig, timer: StageTimer) -> int:
    k, C, tol = cfg.curvature_k(), cfg.shape_C(), cfg.tol()
    angle = cfg.plane_angle if cfg.plane_angle is not None else planar.default_plane(k, C, tol)
    with track("section", timer):
        section = planar.plane_section(
            k, C, cfg.pitch, angle, cfg.samples, branch=cfg.branch, workers=cfg.workers, tol=tol
        )
    fmt = cfg.format or OutputFormat.SVG
    default = Path("profile.svg" if fmt is OutputFormat.SVG else "section.csv")
    path = cfg.out or default
    if fmt is OutputFormat.SVG:
        export.write_planar_svg(path, section)
    else:
        export.write_planar_csv(path, section)
    sys.stdout.write(export.dumps_json({"samples": len(section), "plane_angle": angle, "file": str(path)}))
    return EXIT_OK


class VerificationReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    config: dict
    domain: dict
    certificate: diffgeo.CertificateReport
    axis_point_ratio: float
    classification: dict | None = None
    self_intersection: dict | None = None
    cusp: dict | None = None
    digest: str = ""
    runtime: list[dict] | None = None


def content_digest(data: dict) -> str:
    """sha256 over the canonical JSON of everything except digest and runtime."""
    body = {key: value for key, value in data.items() if key not in ("digest", "runtime")}
    return hashlib.sha256(json.dumps(body, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def build_report(cfg: RunConfig, timer: StageTimer) -> VerificationReport:
    k, C, tol = cfg.curvature_k(), cfg.shape_C(), cfg.tol()
    with track("domain", timer):
        domain = pc.compute_domain(k, C, tol)
    certificate = _certificate(cfg, timer)
    with track("diagnostics", timer):
        axis_ratio = diffgeo.axis_point_ratio(k, C, cfg.branch, tol)
        classification = crossing = cusp = None
        if k > 1:
            classification = planar.classify_shape(k, C, tol).to_dict()
            found = planar.self_intersection(k, C, cfg.pitch, tol)
            crossing = None if found is None else found.to_dict()
        else:
            cusp = pr.cusp_analysis(k, C, tol).to_dict()
    report = VerificationReport(
        config=cfg.echo(),
        domain=domain.to_dict(),
        certificate=certificate,
        axis_point_ratio=axis_ratio,
        classification=classification,
        self_intersection=crossing,
        cusp=cusp,
    )
    digest = content_digest(report.model_dump(mode="json"))
    return report.model_copy(update={"digest": digest})


def cmd_report(cfg: RunConfig, timer: StageTimer) -> int:
    report = build_report(cfg, timer)
    data = report.model_dump(mode="json", exclude_none=False)
    if cfg.timings:
        data["runtime"] = timer.summary()
    else:
        data.pop("runtime")
    _emit(cfg, data)
    return EXIT_OK if report.certificate.passed else EXIT_CERTIFICATE


# ── Parser ───────────────────────────────────────────────────────────────


def _shape_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    curvature = parent.add_mutually_exclusive_group()
    curvature.add_argument("--a", type=float, help="principal curvature ratio kappa1/kappa2")
    curvature.add_argument("--k", type=float, help="invariant k = |1 - a| / |1 + a|")
    parent.add_argument("--C", type=float, help="shape constant C > 0")
    parent.add_argument("--pitch", type=float, help="helical pitch p (default 0.5)")
    parent.add_argument("--branch", choices=[b.value for b in Branch], help="glued profile branch")
    parent.add_argument("--grid", type=parse_grid, help="NVxNT, e.g. 64x64")
    parent.add_argument("--v-range", dest="v_range", type=parse_range, help="LO:HI rotation range")
    parent.add_argument("--workers", type=int, help="thread pool size")
    return parent


def _common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", type=Path, help="TOML file with RunConfig keys (flags win)")
    parent.add_argument("--out", type=Path, help="output path (stdout for JSON when omitted)")
    parent.add_argument("--format", choices=[f.value for f in OutputFormat])
    parent.add_argument("--timings", action="store_true", help="record stage timings")
    parent.add_argument("-v", "--verbose", action="count", default=0)
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crpc-helix", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common, shape = _common_options(), _shape_options()

    gen = sub.add_parser("generate", parents=[common, shape], help="write an OBJ mesh or profile CSV")
    gen.add_argument("--profile-csv", dest="profile_csv", type=Path)
    gen.add_argument("--singular-obj", dest="singular_obj", type=Path, help="k < 1: singular helix polyline")
    gen.add_argument("--mirror", action="store_true", help="reflect through the (x,z)-plane")
    gen.set_defaults(func=cmd_generate)

    for name, func, text in (
        ("verify", cmd_verify, "CRPC certificate as JSON"),
        ("report", cmd_report, "full verification report with content digest"),
    ):
        p = sub.add_parser(name, parents=[common, shape], help=text)
        p.add_argument("--fd-only", dest="fd_only", action="store_true", help="finite-difference partials")
        p.add_argument("--tamper-g", dest="tamper_g", type=float, help=argparse.SUPPRESS)
        p.set_defaults(func=func)

    top = sub.add_parser("topview", parents=[common], help="implicit top-view polynomial for rational k")
    top.add_argument("--n", type=int)
    top.add_argument("--m", type=int)
    top.add_argument("--k", dest="k_text", help="rational k as n/m")
    top.add_argument("--C", type=str, help="exact rational C, e.g. 1 or 3/8")
    top.add_argument("--symbolic-C", dest="symbolic_C", action="store_true")
    top.add_argument("--seed", type=int, help="random residual samples instead of a uniform grid")
    top.set_defaults(func=cmd_topview)

    cls = sub.add_parser("classify", parents=[common, shape], help="OneSided / AxisTouching / SelfIntersecting")
    cls.set_defaults(func=cmd_classify)

    prof = sub.add_parser("profile", parents=[common, shape], help="planar section as SVG or CSV")
    prof.add_argument("--plane-angle", dest="plane_angle", type=float)
    prof.add_argument("--samples", type=int)
    prof.set_defaults(func=cmd_profile)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s %(message)s")


def run(argv: list[str] | None = None) -> int:
    load_dotenv()
    timer = StageTimer()
    try:
        args = build_parser().parse_args(argv)
        _configure_logging(args.verbose)
        cfg = build_config(args)
        status = args.func(cfg, timer)
    except CrpcError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), sort_keys=True) + "\n")
        return exc.exit_code
    logger.info("[cli] %s finished with status %d", cfg.command, status)
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
