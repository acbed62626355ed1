"""CLI subcommands, exit codes, output formats, determinism."""

import json
import os
import subprocess
import sys

from algmech.cli import (
    EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_VERIFICATION, run,
)

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIGS = os.path.join(REPO, "configs")


def _config(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _harmonic_config(tmp_path, out_path, **overrides):
    doc = {
        "schema": 1,
        "model": {"builtin": "tangent_bundle",
                  "params": {"n": 1, "V": "0.5*x1^2"}},
        "simulation": {"t0": 0.0, "t1": 10.0, "dt": 0.001, "method": "rk4",
                       "initial": {"x": [1.0], "y": [0.0]}},
        "output": {"format": "csv", "path": str(out_path),
                   "monitors": {"energy": "0.5*y1^2 + 0.5*x1^2"}},
    }
    doc.update(overrides)
    return _config(tmp_path, "harmonic.json", doc)


class TestSimulate:
    def test_csv_header_and_row_count(self, tmp_path):
        out = tmp_path / "traj.csv"
        cfg = _harmonic_config(tmp_path, out)
        assert run(["simulate", cfg]) == EXIT_OK
        lines = out.read_text().split("\n")
        assert lines[0] == "t,x1,y1,p1,adm_res,el_res,energy"
        # 10001 data rows + header + trailing newline
        assert len(lines) == 10003 and lines[-1] == ""

    def test_byte_identical_reruns(self, tmp_path):
        out = tmp_path / "traj.csv"
        cfg = _harmonic_config(tmp_path, out)
        assert run(["simulate", cfg]) == EXIT_OK
        first = out.read_bytes()
        assert run(["simulate", cfg]) == EXIT_OK
        assert out.read_bytes() == first

    def test_lf_line_endings_and_c_locale(self, tmp_path):
        out = tmp_path / "traj.csv"
        cfg = _harmonic_config(tmp_path, out)
        run(["simulate", cfg])
        data = out.read_bytes()
        assert b"\r" not in data
        assert b"," in data and b";" not in data.split(b"\n")[0]

    def test_json_output(self, tmp_path):
        out = tmp_path / "traj.json"
        cfg = _harmonic_config(
            tmp_path, out,
            simulation={"t0": 0.0, "t1": 1.0, "dt": 0.01,
                        "initial": {"x": [1.0], "y": [0.0]}},
            output={"format": "json", "path": str(out)})
        assert run(["simulate", cfg]) == EXIT_OK
        doc = json.loads(out.read_text())
        assert len(doc["t"]) == 101
        assert doc["model"] == "tangent_bundle"

    def test_missing_config_exits_2(self, capsys):
        assert run(["simulate", "missing.json"]) == EXIT_CONFIG
        err = capsys.readouterr().err.strip()
        doc = json.loads(err)
        assert doc["error"] == "config"

    def test_schema_violation_exits_2(self, tmp_path):
        cfg = _config(tmp_path, "bad.json", {"schema": 1})
        assert run(["simulate", cfg]) == EXIT_CONFIG

    def test_malformed_json_exits_2(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert run(["simulate", str(path)]) == EXIT_CONFIG

    def test_bad_expression_exits_2(self, tmp_path):
        out = tmp_path / "x.csv"
        cfg = _harmonic_config(tmp_path, out, lagrangian="0.5*y1^2 +")
        assert run(["simulate", cfg]) == EXIT_CONFIG

    def test_singular_lagrangian_exits_3(self, tmp_path, capsys):
        out = tmp_path / "x.csv"
        cfg = _harmonic_config(tmp_path, out, lagrangian="y1")
        assert run(["simulate", cfg]) == EXIT_NUMERICAL
        doc = json.loads(capsys.readouterr().err.strip())
        assert doc["error"] == "numerical"

    def test_inline_structure(self, tmp_path):
        out = tmp_path / "inline.csv"
        doc = {
            "schema": 1,
            "model": {"inline": {
                "kind": "algebroid", "n": 1, "m": 1,
                "rho": [["1"]], "sigma": [["1"]], "c": [[["0"]]]}},
            "lagrangian": "0.5*y1^2 - 0.5*x1^2",
            "simulation": {"t0": 0.0, "t1": 1.0, "dt": 0.01,
                           "initial": {"x": [1.0], "y": [0.0]}},
            "output": {"format": "csv", "path": str(out)},
        }
        cfg = _config(tmp_path, "inline.json", doc)
        assert run(["simulate", cfg]) == EXIT_OK
        assert out.read_text().startswith("t,x1,y1,p1,adm_res,el_res")


class TestVerify:
    def test_shipped_so3_config(self, capsys):
        code = run(["verify", os.path.join(CONFIGS, "so3.json")])
        out = capsys.readouterr().out
        doc = json.loads(out)
        assert code == EXIT_OK
        assert doc["classification"]["is_lie"] is True
        assert doc["classification"]["jacobiator_max"] <= 1e-10
        assert doc["passed"] is True

    def test_broken_structure_exits_4(self, tmp_path, capsys):
        doc = {
            "schema": 1,
            "model": {"inline": {
                "kind": "algebroid", "n": 0, "m": 3,
                "rho": [], "sigma": [],
                "c": [[["0", "0", "0"], ["0", "0", "1.1"], ["0", "-1", "0"]],
                      [["0", "0", "-1"], ["0", "0", "0"], ["1", "0", "0"]],
                      [["0", "1", "0"], ["-1", "0", "0"], ["0", "0", "0"]]]}},
            "verify": {"samples": 50, "seed": 42, "tol": 1e-8},
        }
        cfg = _config(tmp_path, "broken.json", doc)
        code = run(["verify", cfg])
        report = json.loads(capsys.readouterr().out)
        assert code == EXIT_VERIFICATION
        assert report["passed"] is False

    def test_seed_env_override(self, tmp_path, capsys, monkeypatch):
        cfg = _config(tmp_path, "v.json", {
            "schema": 1,
            "model": {"builtin": "so3_rigid_body"},
            "verify": {"samples": 10, "seed": 1, "tol": 1e-8},
        })
        monkeypatch.setenv("ALGMECH_SEED", "777")
        run(["verify", cfg])
        doc = json.loads(capsys.readouterr().out)
        assert doc["classification"]["seed"] == 777


class TestTransform:
    def test_table(self, capsys):
        code = run(["transform",
                    os.path.join(CONFIGS, "transform_rigid_body.json")])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        lines = out.strip().split("\n")
        assert lines[0] == "xi1,xi2,xi3,ystar1,ystar2,ystar3,h"
        assert len(lines) == 12
        # the inertia tensor is diag(1,2,3): y* = xi / I
        first = [float(v) for v in lines[1].split(",")]
        assert first[:3] == [-1.0, -1.0, -1.0]
        assert abs(first[3] + 1.0) <= 1e-12
        assert abs(first[4] + 0.5) <= 1e-12
        assert abs(first[5] + 1.0 / 3.0) <= 1e-12


class TestModels:
    def test_listing(self, capsys):
        assert run(["models"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        names = {entry["name"] for entry in doc}
        assert names == {"tangent_bundle", "so3_rigid_body", "newtonian",
                         "time_dependent"}


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "algmech.cli", "models"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "so3_rigid_body" in proc.stdout

    def test_no_subcommand_exits_2(self):
        proc = subprocess.run(
            [sys.executable, "-m", "algmech.cli"],
            capture_output=True, text=True)
        assert proc.returncode == 2
