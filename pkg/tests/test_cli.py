import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from lll_lab.cli import run

FAST = {
    "theta-check": ["--hexa"],
    "lattice-info": ["--rect", "2.0"],
    "stationary": ["--hexa", "--half-width", "12"],
    "simulate": ["--hexa", "--modes", "0:1:0,1:0.3:0.1", "--pad", "8", "--T", "1"],
    "spectrum": ["--hexa", "--grid", "256"],
    "scan-gamma": ["--resolution", "1e-3"],
    "decay": ["--hexa", "--t-min", "100", "--t-max", "1000", "--n-times", "4"],
    "growth": ["--hexa", "--log2-grid", "14", "--t-max", "1e4", "--n-times", "5"],
    "instability": ["--rect", "1.7724538509055159"],
    "moments": ["--hexa", "--T", "2", "--n-times", "3"],
    "mu-profile": ["--hexa", "--grid", "65"],
}


def invoke(tmp_path, command, *extra):
    out = tmp_path / command
    code = run([command, *FAST[command], *extra, "--out", str(out)])
    return code, out


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@pytest.mark.parametrize("command", sorted(FAST))
def test_subcommand_runs_and_writes_manifest(tmp_path, command):
    code, out = invoke(tmp_path, command)
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schema"] == 1 and manifest["status"] == "ok"
    assert manifest["config"]["command"] == command
    assert manifest["wall_time_s"] >= 0
    for name in manifest["config"]["files"]:
        assert (out / name).exists()


@pytest.mark.parametrize("command", ["simulate", "spectrum", "decay", "moments", "mu-profile"])
def test_csv_byte_identical_on_rerun(tmp_path, command):
    _, first = invoke(tmp_path / "a", command)
    _, second = invoke(tmp_path / "b", command)
    csvs = sorted(p.name for p in first.glob("*.csv"))
    assert csvs
    for name in csvs:
        data = (first / name).read_bytes()
        assert data == (second / name).read_bytes()
        assert b"\r" not in data


def test_json_format(tmp_path):
    code, out = invoke(tmp_path, "spectrum", "--format", "json")
    assert code == 0
    table = json.loads((out / "spectrum.json").read_text())
    assert table["schema"] == 1
    assert set(table["columns"]) == {"xi", "a", "b", "mu_squared", "mu_real", "mu_imag", "det"}


def test_hexa_spectrum_det_negative(tmp_path):
    _, out = invoke(tmp_path, "spectrum")
    header, rows = read_csv(out / "spectrum.csv")
    det = np.array([float(r[header.index("det")]) for r in rows])
    xi = np.array([float(r[header.index("xi")]) for r in rows])
    interior = (xi > 0) & (xi < 1)
    assert interior.sum() > 200
    assert np.all(det[interior] < 0)


def test_scan_gamma_value(tmp_path):
    code, out = invoke(tmp_path, "scan-gamma")
    assert code == 0
    assert 2.49 <= json.loads((out / "scan_gamma.json").read_text())["gamma0"] <= 2.53


def test_simulate_cell_closed_form(tmp_path):
    out = tmp_path / "cell"
    assert run(["simulate", "--cell", "--N", "1", "--hexa", "--c", "1", "--T", "10", "--out", str(out)]) == 0
    summary = json.loads((out / "simulate_summary.json").read_text())
    assert summary["closed_form_deviation"] < 1e-8
    header, rows = read_csv(out / "trajectory.csv")
    assert header == ["t", "k", "re", "im", "M", "H", "P"]


@pytest.mark.parametrize(
    "argv",
    [
        ["decay", "--rect", "2"],
        ["simulate", "--hexa", "--T", "-1"],
        ["growth", "--hexa", "--theta", "0.4"],
        ["lattice-info", "--tau-real", "0.2"],
        ["simulate", "--hexa", "--modes", "zero"],
        ["spectrum", "--hexa", "--bogus"],
    ],
)
def test_config_errors_exit_two(tmp_path, argv, capsys):
    assert run([*argv, "--out", str(tmp_path)]) == 2


def test_numeric_error_exit_one(tmp_path, capsys):
    argv = ["simulate", "--hexa", "--T", "1", "--rtol", "1e-300", "--atol", "1e-300", "--out", str(tmp_path)]
    assert run(argv) == 1
    assert capsys.readouterr().err.startswith("StepFailure:")
    assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "StepFailure"


def test_help_documents_columns(capsys):
    assert run(["decay", "--help"]) == 0
    assert "t, sup_norm, fitted_slope_so_far" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "lll_lab", "mu-profile", "--hexa", "--grid", "33", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    header, rows = read_csv(tmp_path / "mu_profile.csv")
    assert header == ["xi", "mu", "mu_1", "mu_2", "mu_3"] and len(rows) > 0
