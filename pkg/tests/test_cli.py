from __future__ import annotations

import json

import pytest

from crpc_helix.cli import build_parser, content_digest, run
from crpc_helix.errors import EXIT_CERTIFICATE, EXIT_CONFIG, EXIT_MATH, EXIT_OK


def _stdout_json(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def _stderr_json(capsys) -> dict:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_generate_writes_mesh_and_profile(tmp_path, capsys):
    obj, csv = tmp_path / "surface.obj", tmp_path / "profile.csv"
    code = run(["generate", "--k", "3", "--C", "1", "--grid", "8x6", "--out", str(obj), "--profile-csv", str(csv)])
    assert code == EXIT_OK
    summary = _stdout_json(capsys)
    assert summary["vertices"] == 48
    assert summary["files"] == [str(obj), str(csv)]
    assert obj.read_text().startswith("# crpc-helix")
    assert len(csv.read_text().splitlines()) == 7


def test_generate_singular_helix(tmp_path, capsys):
    helix = tmp_path / "cusp.obj"
    code = run([
        "generate", "--k", "0.5", "--C", "2", "--grid", "6x6",
        "--out", str(tmp_path / "s.obj"), "--singular-obj", str(helix),
    ])
    assert code == EXIT_OK
    assert helix.read_text().splitlines()[-1].startswith("l 1 2")


def test_minimal_ratio_is_a_config_error(tmp_path, capsys):
    code = run(["generate", "--a", "-1", "--C", "1", "--out", str(tmp_path / "x.obj")])
    assert code == EXIT_CONFIG
    error = _stderr_json(capsys)
    assert error["error"] == "degenerate_ratio"
    assert error["case"] == "minimal"


def test_empty_domain_is_a_math_error(tmp_path, capsys):
    code = run(["generate", "--k", "0.5", "--C", "0.5", "--out", str(tmp_path / "x.obj")])
    assert code == EXIT_MATH
    assert _stderr_json(capsys)["error"] == "empty_domain"


@pytest.mark.parametrize("k, C", [("1.0001", "1e-6"), ("0.999", "1000")])
def test_unbracketable_domain_exits_with_json_error(k, C, capsys):
    code = run(["verify", "--k", k, "--C", C, "--grid", "4x4"])
    assert code == EXIT_MATH
    error = _stderr_json(capsys)
    assert error["error"] == "empty_domain"
    assert error["kind"] == "EmptyDomain"


def test_verify_passes_reference_surface(capsys):
    code = run(["verify", "--k", "3", "--C", "1", "--grid", "16x16"])
    report = _stdout_json(capsys)
    assert code == EXIT_OK
    assert report["passed"] is True
    assert report["max_rel_deviation"] <= 1e-8


def test_verify_fd_mode_uses_relaxed_bound(capsys):
    assert run(["verify", "--k", "3", "--C", "1", "--grid", "10x10", "--fd-only"]) == EXIT_OK
    assert _stdout_json(capsys)["bound"] == 1e-4


def test_verify_fails_on_tampered_profile(capsys):
    code = run(["verify", "--k", "3", "--C", "1", "--grid", "12x12", "--tamper-g", "1.01"])
    assert code == EXIT_CERTIFICATE
    assert _stdout_json(capsys)["passed"] is False


def test_classify_requires_k_above_one(capsys):
    assert run(["classify", "--k", "0.5", "--C", "2"]) == EXIT_CONFIG
    assert _stderr_json(capsys)["error"] == "invalid_k"


def test_classify_reports_crossing(capsys):
    assert run(["classify", "--a", "-0.5", "--C", "1"]) == EXIT_OK
    result = _stdout_json(capsys)
    assert result["class"] == "SelfIntersecting"
    assert result["self_intersection"]["point"][0] < 0


def test_topview_symbolic_text(tmp_path, capsys):
    out = tmp_path / "sextic.txt"
    assert run(["topview", "--n", "3", "--m", "1", "--symbolic-C", "--out", str(out)]) == EXIT_OK
    summary = _stdout_json(capsys)
    assert summary["degree"] == 6
    assert summary["C"] == "symbolic"
    assert summary["residual"] is None
    assert "C^2" in out.read_text()


def test_topview_numeric_residual(capsys):
    assert run(["topview", "--k", "3", "--C", "2"]) == EXIT_OK
    summary = _stdout_json(capsys)
    assert summary["C"] == "2"
    assert summary["residual"] <= 1e-9
    assert summary["degree"] <= summary["degree_bound"]


def test_topview_json_with_rational_inputs(tmp_path, capsys):
    out = tmp_path / "poly.json"
    assert run(["topview", "--k", "3/1", "--C", "3/8", "--format", "json", "--seed", "4", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["polynomial"]["order"] == "grlex"
    assert data["residual"] <= 1e-9


def test_profile_csv_output(tmp_path, capsys):
    out = tmp_path / "section.csv"
    assert run(["profile", "--k", "3", "--C", "10", "--samples", "51", "--format", "csv", "--out", str(out)]) == EXIT_OK
    assert _stdout_json(capsys)["samples"] == 51
    assert out.read_text().splitlines()[0] == "s,u,z,piece"


def test_format_must_suit_command(capsys):
    assert run(["verify", "--k", "3", "--C", "1", "--format", "svg"]) == EXIT_CONFIG
    assert _stderr_json(capsys)["error"] == "invalid_config"


def test_a_and_k_are_exclusive():
    with pytest.raises(SystemExit) as info:
        run(["verify", "--a", "-0.5", "--k", "3", "--C", "1"])
    assert info.value.code == 2


def test_toml_config_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text('k = 3.0\nC = 1.0\ngrid = "8x8"\n')
    assert run(["verify", "--config", str(cfg), "--grid", "6x4"]) == EXIT_OK
    report = _stdout_json(capsys)
    assert (report["grid"]["n_v"], report["grid"]["n_t"]) == (6, 4)


def test_unknown_toml_key_is_rejected(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text("k = 3.0\nC = 1.0\ncolour = 'red'\n")
    assert run(["verify", "--config", str(cfg)]) == EXIT_CONFIG


def test_report_digest_and_timings(capsys):
    assert run(["report", "--k", "3", "--C", "1", "--grid", "8x8", "--timings"]) == EXIT_OK
    data = _stdout_json(capsys)
    assert data["digest"] == content_digest(data)
    assert {r["stage"] for r in data["runtime"]} >= {"domain", "certificate", "diagnostics"}
    assert data["classification"]["class"] == "SelfIntersecting"
    assert data["cusp"] is None


def test_report_for_k_below_one(capsys):
    assert run(["report", "--k", "0.5", "--C", "2", "--grid", "8x8"]) == EXIT_OK
    data = _stdout_json(capsys)
    assert "runtime" not in data
    assert data["classification"] is None
    assert data["cusp"]["tangent_norm"] <= 1e-10


def test_runs_are_byte_identical(tmp_path, capsys):
    outputs = []
    for name in ("first", "second"):
        obj = tmp_path / f"{name}.obj"
        run(["generate", "--k", "3", "--C", "1", "--grid", "10x7", "--out", str(obj), "--workers", "3"])
        outputs.append(obj.read_bytes())
    assert outputs[0] == outputs[1]

    capsys.readouterr()
    reports = []
    for _ in range(2):
        run(["report", "--k", "3", "--C", "0.375", "--grid", "8x8"])
        reports.append(capsys.readouterr().out)
    assert reports[0] == reports[1]


def test_parser_lists_every_command():
    parser = build_parser()
    for command in ("generate", "verify", "topview", "classify", "profile", "report"):
        assert parser.parse_args([command]).command == command
