"""Command-line front end: artifacts, manifests, config precedence and exit codes."""

import hashlib
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tfe_lab.artifacts import PlotStyle, dumps_csv, dumps_json, format_float, render_svg
from tfe_lab.cli import COMMANDS, FIGURE3_CURVATURES, resolve_config, run_command
from tfe_lab.errors import ParameterError


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv("TFE_LAB_OUT", str(tmp_path / "out"))
    return tmp_path / "out"


def manifest(out, command):
    return json.loads((out / command / "manifest.json").read_text())


def test_all_subcommands_registered():
    assert set(COMMANDS) == {"profile-fbp", "profile-cp", "kernel", "kernel-sequence", "profile-explicit",
                             "spectrum", "symmetry-check", "centre", "orbit", "orbit-exact", "bifurcate",
                             "simulate-critical", "simulate-supercritical", "preset"}


def test_explicit_profile_manifest(out):
    assert run_command(["profile-explicit", "--n", "1", "--dim", "1"]) == 0
    man = manifest(out, "profile-explicit")
    assert man["results"]["c0"] == "1/120"
    assert set(man) >= {"config", "artifacts", "versions", "wallclock"}
    for entry in man["artifacts"]:
        data = (out / "profile-explicit" / entry["path"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == entry["sha256"]
    assert {Path(e["path"]).suffix for e in man["artifacts"]} == {".csv", ".json", ".svg"}


def test_identical_config_gives_identical_bytes(out):
    run_command(["centre", "--dim", "2"])
    first = manifest(out, "centre")["artifacts"]
    run_command(["centre", "--dim", "2"])
    assert manifest(out, "centre")["artifacts"] == first


def test_manifest_replay_reproduces_artifacts(out, tmp_path):
    run_command(["symmetry-check", "--n", "4/5", "--formats", "json"])
    saved = tmp_path / "saved.json"
    saved.write_text((out / "symmetry-check" / "manifest.json").read_text())
    original = json.loads(saved.read_text())
    (out / "symmetry-check" / "certificate.json").unlink()
    assert run_command(["symmetry-check", "--config", str(saved)]) == 0
    replay = manifest(out, "symmetry-check")
    assert replay["artifacts"] == original["artifacts"]
    assert replay["config"] == original["config"]
    assert replay["results"]["verdict"] == "not-symmetric"


def test_precedence_flags_over_file_over_defaults(out, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"N": 2, "points": 11}))
    assert run_command(["profile-explicit", "--config", str(cfg), "--points", "21"]) == 0
    resolved = manifest(out, "profile-explicit")["config"]
    assert resolved["N"] == 2 and resolved["points"] == 21 and resolved["m"] == 2
    rows = (out / "profile-explicit" / "profile.csv").read_text().splitlines()
    assert len(rows) == 22


def test_unknown_config_key_rejected(out, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 1, "dim": 2}))
    assert run_command(["profile-explicit", "--config", str(cfg)]) == 2


def test_nested_config_rejected(out, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": {"value": 1}}))
    assert run_command(["profile-explicit", "--config", str(cfg)]) == 2


def test_config_for_other_subcommand_rejected():
    with pytest.raises(ParameterError):
        resolve_config("centre", {}, {"subcommand": "spectrum"})


def test_parameter_failure_exit_code(out):
    assert run_command(["profile-explicit", "--n", "2"]) == 2
    man = manifest(out, "profile-explicit")
    assert man["status"] == "parameter-error" and "n = 1" in man["diagnostic"]
    assert run_command(["spectrum", "--bogus", "1"]) == 2
    assert run_command(["centre", "--dim", "two"]) == 2
    assert run_command(["preset", "figure-9"]) == 2


def test_numerical_failure_exit_code_and_diagnostic(out):
    # the orbit persists over this whole range, so no bifurcation is found
    assert run_command(["bifurcate", "--range", "1.6:1.65"]) == 3
    man = manifest(out, "bifurcate")
    assert man["status"] == "numerical-failure"
    assert "persisted" in man["diagnostic"]


def test_format_selection(out):
    assert run_command(["orbit-exact", "--samples", "64", "--formats", "csv"]) == 0
    names = [e["path"] for e in manifest(out, "orbit-exact")["artifacts"]]
    assert names == ["orbit.csv"]


def test_output_directory_flag_beats_environment(out, tmp_path):
    target = tmp_path / "elsewhere"
    assert run_command(["orbit-exact", "--samples", "32", "--out", str(target)]) == 0
    assert (target / "orbit-exact" / "manifest.json").exists()
    assert not (out / "orbit-exact").exists()


def test_bifurcate_reports_library_bracket(out):
    from tfe_lab.orbits import trace_heteroclinic_bifurcation

    assert run_command(["bifurcate", "--range", "1.6:1.9", "--period-cap", "50"]) == 0
    man = manifest(out, "bifurcate")
    trace = trace_heteroclinic_bifurcation((1.6, 1.9), 50.0)
    assert man["results"]["bracket"] == pytest.approx(list(trace.bracket), abs=0)
    assert "<polyline" in (out / "bifurcate" / "bifurcation.svg").read_text()


def test_figure3_preset(out):
    assert run_command(["preset", "figure-3", "--workers", "2"]) == 0
    man = json.loads((out / "preset" / "figure-3" / "manifest.json").read_text())
    table = man["results"]["table"]
    assert [row["n"] for row in table] == [0, 0.2, 0.5, 1, 1.5]
    for row, ref in zip(table, FIGURE3_CURVATURES):
        assert abs(row["second_deriv_origin"] - ref) <= 1e-3
    paths = [e["path"] for e in man["artifacts"]]
    assert sum(p.endswith("/profile.csv") for p in paths) == 5


def test_figure1_preset_overlays_four_profiles(out):
    assert run_command(["preset", "figure-1", "--workers", "1"]) == 0
    svg = (out / "preset" / "figure-1" / "figure.svg").read_text()
    assert svg.count("<polyline") == 4
    for label in ("n=0.25", "n=0.5", "n=0.75", "n=1"):
        assert f">{label}<" in svg


def test_module_entry_point_propagates_exit_code(out):
    res = subprocess.run([sys.executable, "-m", "tfe_lab.cli", "profile-explicit", "--n", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 2
    assert "invalid parameters" in res.stderr


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_json_floats_round_trip_with_seventeen_digits(x):
    text = dumps_json({"x": x})
    assert json.loads(text)["x"] == x
    assert format_float(x) == format(x, ".17g")


def test_json_non_finite_maps_to_null():
    assert json.loads(dumps_json([float("nan"), float("inf")])) == [None, None]


def test_csv_line_endings_and_digits():
    text = dumps_csv(("a", "b"), [(0.1, 2)])
    assert text == "a,b\n0.10000000000000001,2\n"


def test_svg_default_style_and_determinism():
    y = np.linspace(-1, 1, 50)
    svg = render_svg([("", y, 1 - y * y)])
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert ">y</text>" in svg and ">F</text>" in svg
    assert svg == render_svg([("", y, 1 - y * y)], PlotStyle())


def test_svg_requires_data():
    with pytest.raises(ParameterError):
        render_svg([])
    with pytest.raises(ParameterError):
        render_svg([("a", [np.nan], [1.0])])
