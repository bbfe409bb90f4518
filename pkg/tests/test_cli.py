import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pandas as pd
import pytest

from src.assembly import read_matrix
from src.cli import build_config, main, parse_angles, read_config_file
from src.cli.manifest import sha256_file
from src.cli.tables import FLOAT_FORMAT, read_table, write_table
from src.database import ResultsDatabase
from src.geometry import read_mesh
from src.utils.errors import ConfigError

SMALL = ["--h", "1.0", "--grading", "2", "--no-refine", "--k", "2"]


def _json(path):
    return json.loads(path.read_text())


# -- configuration -----------------------------------------------------------

def test_parse_angles():
    assert parse_angles("2.5") == (2.5,)
    assert parse_angles("1,2,5") == (1.0, 2.0, 5.0)
    grid = parse_angles("1:15:1")
    assert len(grid) == 15
    assert grid[0] == 1.0 and grid[-1] == 15.0
    assert parse_angles("0.5:0.7:0.1") == (0.5, 0.6, 0.7)
    assert parse_angles(["1", 2.0]) == (1.0, 2.0)


@pytest.mark.parametrize("text", ["1:2", "5:1:1", "1:5:0", "a,b"])
def test_parse_angles_rejects_malformed_lists(text):
    with pytest.raises(ConfigError):
        parse_angles(text)


def test_build_config_precedence():
    config = build_config("solve", {"theta_deg": "80", "k": "3", "h": "0.5"}, {"beta_deg": "5", "k": 4})
    assert config.angle_key == "beta_deg"
    assert config.aperture.theta_deg == pytest.approx(85.0)
    assert config.k == 4
    assert config.h == 0.5
    assert config.policy().auto_smax
    assert build_config("solve", {"theta_deg": "80", "s_max": "60"}).policy().s_max == 60.0


@pytest.mark.parametrize("command, values", [
    ("solve", {"theta_deg": "80", "colour": "red"}),
    ("solve", {"theta_deg": "80", "beta_deg": "10"}),
    ("solve", {"theta_deg": "80,81"}),
    ("sweep", {"theta_deg": "80,82,81"}),
    ("solve", {"theta_deg": "80", "k": "0"}),
    ("solve", {"theta_deg": "80", "k": "seven"}),
    ("solve", {"theta_deg": "95"}),
    ("solve", {}),
    ("solve", {"theta_deg": "80", "sigma": "2.0"}),
    ("bound", {"theta_deg": "87.5"}),
    ("bound", {"theta_deg": "87.5", "lambda_bar": "0.5"}),
])
def test_build_config_rejects(command, values):
    with pytest.raises(ConfigError):
        build_config(command, values)


def test_read_config_file_with_comments(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# narrow layer\ntheta_deg = 87.5   # degrees\nlambda_bar = 0.95\nrefine = no\n")
    values = read_config_file(path)
    assert values == {"theta_deg": "87.5", "lambda_bar": "0.95", "refine": "no"}
    config = build_config("bound", values)
    assert config.lambda_bar == 0.95
    assert config.refine is False


def test_read_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "missing.cfg")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        read_config_file(bad)
    foreign = tmp_path / "foreign.json"
    foreign.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        read_config_file(foreign)


def test_table_writer_keeps_every_digit(tmp_path):
    frame = pd.DataFrame({"lambda": [math.pi / 5, 0.1 + 0.2], "j": [1, 2]})
    back = read_table(write_table(frame, tmp_path / "t.csv"))
    assert back["lambda"].tolist() == frame["lambda"].tolist()
    assert FLOAT_FORMAT == "%.17g"


# -- bound -------------------------------------------------------------------

def test_bound_command(tmp_path):
    out = tmp_path / "bound"
    assert main(["bound", "--theta-deg", "87.5", "--lambda-bar", "0.95", "--out", str(out)]) == 0
    payload = _json(out / "bound.json")
    assert payload["N"] == 1
    assert payload["beta_deg"] == pytest.approx(2.5)
    assert 0.0 < payload["R"] < math.pi
    manifest = _json(out / "manifest.json")
    assert manifest["command"] == "bound"
    assert manifest["files"]["bound.json"]["sha256"] == sha256_file(out / "bound.json")
    assert manifest["config"]["apertures"][0]["theta_deg"] == pytest.approx(87.5)


def test_bound_reads_a_config_file_and_cli_overrides_it(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("beta_deg = 2.5\nlambda_bar = 0.95\n")
    out = tmp_path / "a"
    assert main(["bound", "--config", str(cfg), "--out", str(out)]) == 0
    assert _json(out / "bound.json")["N"] == 1

    out = tmp_path / "b"
    assert main(["bound", "--config", str(cfg), "--theta-deg", "85", "--out", str(out)]) == 0
    payload = _json(out / "bound.json")
    assert payload["theta_deg"] == pytest.approx(85.0)
    assert payload["N"] == 0


def test_manifest_reproduces_the_run(tmp_path):
    first = tmp_path / "first"
    assert main(["bound", "--theta-deg", "87.5", "--lambda-bar", "0.95", "--out", str(first)]) == 0
    second = tmp_path / "second"
    assert main(["bound", "--config", str(first / "manifest.json"), "--out", str(second)]) == 0
    assert (second / "bound.json").read_bytes() == (first / "bound.json").read_bytes()


def test_bound_compares_with_a_sweep_table(tmp_path):
    theta = math.radians(87.5)
    table = pd.DataFrame({
        "angle_theta_rad": [theta] * 3 + [math.radians(85.0)],
        "j": [1, 2, 3, 1],
        "lambda": [0.7, 0.8, 0.97, 0.75],
        "converged": [True, True, True, True],
        "status": ["ok"] * 4,
    })
    sweep_file = write_table(table, tmp_path / "sweep.csv")
    out = tmp_path / "out"
    args = ["bound", "--theta-deg", "87.5", "--lambda-bar", "0.95", "--sweep-file", str(sweep_file), "--out", str(out)]
    assert main(args) == 0
    payload = _json(out / "bound.json")
    assert payload["fem_count"] == 2
    assert payload["fem_count_ge_N"] is True


def test_usage_errors_exit_with_two(tmp_path, capsys):
    out = tmp_path / "bad"
    assert main(["bound", "--theta-deg", "87.5", "--lambda-bar", "0.5", "--out", str(out)]) == 2
    assert _json(out / "error.json")["error"] == "ConfigError"
    assert "lambda_bar" in capsys.readouterr().err
    assert main(["solve", "--out", str(tmp_path / "none")]) == 2
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        main(["solve", "--theta-deg", "80", "--beta-deg", "10"])


def test_runtime_failure_exits_with_one(tmp_path):
    out = tmp_path / "short"
    # truncation before the inner tip
    assert main(["solve", "--theta-deg", "85", "--s-max", "10", *SMALL, "--out", str(out)]) == 1
    error = _json(out / "error.json")
    assert error["error"] == "DomainError"
    assert "s_max" in error["message"]


# -- solve, sweep, plots, export ---------------------------------------------

def _solve(out, *extra):
    return main(["solve", "--theta-deg", "85", "--s-max", "50", *SMALL, "--out", str(out), *extra])


def test_solve_writes_matching_tables(tmp_path):
    out = tmp_path / "solve"
    assert _solve(out) == 0
    table = read_table(out / "spectrum.csv")
    assert list(table.columns) == ["angle_theta_rad", "m", "j", "lambda", "residual", "ndof", "smax", "converged"]
    assert len(table) >= 1
    assert np.all(table["lambda"] < 1.0)
    assert table["j"].tolist() == list(range(1, len(table) + 1))
    assert np.all(table["angle_theta_rad"] == math.radians(85.0))

    payload = _json(out / "spectrum.json")
    assert payload["columns"] == list(table.columns)
    assert [row["lambda"] for row in payload["rows"]] == table["lambda"].tolist()
    assert payload["metadata"]["beta_deg"] == pytest.approx(5.0)

    manifest = _json(out / "manifest.json")
    assert set(manifest["files"]) == {"spectrum.csv", "spectrum.json"}
    for name, info in manifest["files"].items():
        assert info["sha256"] == sha256_file(out / name)
    assert manifest["mesh"]["n_triangles"] > 0
    assert "total_seconds" in manifest["timings"]


def test_solve_is_byte_reproducible(tmp_path):
    assert _solve(tmp_path / "a") == 0
    assert _solve(tmp_path / "b") == 0
    for name in ("spectrum.csv", "spectrum.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_solve_without_bound_states(tmp_path):
    out = tmp_path / "m1"
    assert main(["solve", "--theta-deg", "45", "--m", "1", "--s-max", "12", *SMALL, "--out", str(out)]) == 0
    table = read_table(out / "spectrum.csv")
    assert table.empty
    assert "lambda" in table.columns
    assert _json(out / "spectrum.json")["rows"] == []


def test_solve_archives_runs(tmp_path):
    db_path = tmp_path / "runs.db"
    assert _solve(tmp_path / "out", "--archive", str(db_path)) == 0
    table = read_table(tmp_path / "out" / "spectrum.csv")
    db = ResultsDatabase(str(db_path))
    runs = db.get_runs()
    assert len(runs) == 1
    assert runs[0].command == "solve"
    assert runs[0].theta_deg == pytest.approx(85.0)
    values = [row.value for row in db.get_eigenvalues(runs[0].id)]
    assert values == table["lambda"].tolist()
    db.close()


def test_sweep_matches_single_solves(tmp_path):
    assert _solve(tmp_path / "solve") == 0
    out = tmp_path / "sweep"
    assert main(["sweep", "--theta-deg", "84,85", "--s-max", "50", *SMALL, "--out", str(out)]) == 0
    table = read_table(out / "sweep.csv")
    assert set(table["status"]) == {"ok"}
    at_85 = table[np.isclose(table["theta_deg"], 85.0)]
    single = read_table(tmp_path / "solve" / "spectrum.csv")
    assert np.allclose(at_85["lambda"].to_numpy(), single["lambda"].to_numpy(), rtol=1e-12, atol=0.0)

    ET.parse(out / "sweep.svg")
    report = _json(out / "sweep_report.json")
    assert report["failed"] == []
    assert len(report["min_gap"]["theta_rad"]) == 2
    assert set(_json(out / "manifest.json")["files"]) == {"sweep.csv", "sweep.svg", "sweep_report.json"}


def test_plot_modes_writes_clean_svg(tmp_path):
    out = tmp_path / "modes"
    args = ["plot-modes", "--theta-deg", "85", "--s-max", "50", *SMALL, "--vertical-scale", "5", "--out", str(out)]
    assert main(args) == 0
    modes = _json(out / "nodal.json")["modes"]
    assert len(modes) >= 1
    assert modes[0]["j"] == 1
    for mode in modes:
        path = out / f"mode_{mode['j']}.svg"
        root = ET.parse(path).getroot()
        for element in root.iter():
            for key, value in element.attrib.items():
                if key.endswith("href"):
                    assert value.startswith("#")
    ET.parse(out / "profiles.svg")


def test_mesh_export_with_matrices(tmp_path):
    out = tmp_path / "mesh"
    args = ["mesh-export", "--theta-deg", "80", "--s-max", "30", "--h", "1.0", "--grading", "2",
            "--matrices", "--out", str(out)]
    assert main(args) == 0
    mesh = read_mesh(out / "mesh.txt")
    manifest = _json(out / "manifest.json")
    assert manifest["mesh"]["s_max"] == 30.0
    A = read_matrix(out / "A.txt")
    B = read_matrix(out / "B.txt")
    assert A.shape == B.shape == (manifest["mesh"]["n_free"],) * 2
    assert A.shape[0] < mesh.n_nodes
    assert set(manifest["files"]) == {"mesh.txt", "A.txt", "B.txt"}
