import json
import subprocess
import sys

import numpy as np
import pytest

from mvgamma.cli import run
from mvgamma.linalg import write_matrix


@pytest.fixture
def sigma_file(tmp_path, sigma3):
    path = tmp_path / "sigma.txt"
    write_matrix(path, sigma3)
    return path


def _report(path):
    rep = json.loads(path.read_text())
    rep.pop("timestamp")
    return rep


def test_identities_pass(tmp_path):
    out = tmp_path / "r.json"
    assert run(["identities", "--random-p", "5", "--output", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and {c["check"] for c in rep["checks"]} == {
        "det_chain", "rhs_lt_closed", "sylvester"}
    for c in rep["checks"]:
        assert set(c) >= {"check", "inputs_digest", "estimate", "std_error", "oracle", "verdict",
                          "seed", "n"}


def test_lt_check_and_workers_identical(tmp_path, sigma_file):
    reports = []
    for workers in (1, 4):
        out = tmp_path / f"w{workers}.json"
        code = run(["lt-check", "--sigma", str(sigma_file), "--alpha", "1.25", "--p1", "1",
                    "--n", "20000", "--seed", "3", "--workers", str(workers), "--output", str(out)])
        assert code == 0
        reports.append(_report(out))
    assert reports[0] == reports[1]
    assert json.dumps(reports[0], sort_keys=True) == json.dumps(reports[1], sort_keys=True)
    assert len(reports[0]["checks"]) == 20


def test_config_and_flag_precedence(tmp_path, sigma_file):
    conf = tmp_path / "exp.conf"
    conf.write_text(f"sigma = {sigma_file}\nalpha = 1.5\nn = 5000\nseed = 9\nt = 0.1,0.2,0.3; 1,1,1\n")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["lt-check", "--config", str(conf), "--output", str(a)]) == 0
    assert run(["lt-check", "--config", str(conf), "--alpha", "2", "--output", str(b)]) == 0
    ra, rb = _report(a), _report(b)
    assert len(ra["checks"]) == 2
    sigma = np.loadtxt(sigma_file, skiprows=1)
    t = np.array([0.1, 0.2, 0.3])
    assert ra["checks"][0]["oracle"] == pytest.approx(np.linalg.det(np.eye(3) + sigma * t) ** -1.5)
    assert ra["checks"][1]["t"] == [1.0, 1.0, 1.0]
    assert ra["inputs_digest"] != rb["inputs_digest"]
    assert rb["checks"][0]["oracle"] < ra["checks"][0]["oracle"]


def test_sample_csv(tmp_path, sigma_file):
    out, table = tmp_path / "r.json", tmp_path / "s.csv"
    assert run(["sample", "--sigma", str(sigma_file), "--alpha", "1.5", "--n", "3000",
                "--method", "gaussian", "--csv", str(table), "--output", str(out)]) == 0
    lines = table.read_text().splitlines()
    assert lines[0] == "x1,x2,x3" and len(lines) == 3001


def test_density_csv(tmp_path, sigma_file):
    table = tmp_path / "d.csv"
    assert run(["density", "--sigma", str(sigma_file), "--alpha", "1.25", "--n", "20000",
                "--x", "0.5,0.5,0.5", "--x", "1,0.3,0.8", "--csv", str(table),
                "--output", str(tmp_path / "r.json")]) == 0
    assert table.read_text().splitlines()[0] == "x1,x2,x3,estimate,std_error"


def test_theorem1_p2(tmp_path, corr2):
    path = tmp_path / "s.txt"
    write_matrix(path, corr2)
    out = tmp_path / "r.json"
    assert run(["theorem1", "--sigma", str(path), "--p1", "1", "--n", "20000", "--count", "3",
                "--x", "0.5,0.5", "--output", str(out)]) == 0
    checks = {c["check"] for c in json.loads(out.read_text())["checks"]}
    assert {"rhs_lt_closed", "rhs_lt_mc", "density_mass", "density_quadrature_lt",
            "density_vs_factorial_mc"} <= checks


def test_precondition_message(tmp_path, capsys):
    code = run(["theorem1", "--random-p", "5", "--p1", "1", "--alpha", "1.25", "--n", "100"])
    assert code == 2
    assert "requires 2α > max(p₁−1, p₂−1) = 3" in capsys.readouterr().err


def test_malformed_matrix(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("3\n1 0 0\n0 1 0\n")
    assert run(["lt-check", "--sigma", str(path)]) == 2
    assert "expected 3 rows, found 2" in capsys.readouterr().err


def test_missing_inputs(capsys):
    assert run(["lt-check"]) == 2
    assert run(["density", "--random-p", "3"]) == 2
    assert run(["lt-check", "--random-p", "3", "--n", "1"]) == 2
    assert run(["lt-check", "--random-p", "3", "--t", "1,2"]) == 2


def test_admissibility(capsys):
    assert run(["admissibility", "--p", "5"]) == 0
    captured = capsys.readouterr()
    assert "threshold 2 (2α > 2; integer 2α always admissible)" in captured.err
    assert json.loads(captured.out)["checks"][0]["estimate"] == 2
    assert run(["admissibility", "--p", "6", "--structure", "m_factorial", "--m", "2"]) == 0
    assert "threshold 1" in capsys.readouterr().err


def test_inequality_and_probe(tmp_path):
    out = tmp_path / "r.json"
    assert run(["inequality", "--random-p", "3", "--alpha", "0.5", "--n", "20000",
                "--output", str(out)]) == 0
    assert json.loads(out.read_text())["checks"][0]["outcome"] in ("consistent", "inconclusive")
    assert run(["probe", "--random-p", "3", "--alpha", "1.5", "--n", "2000",
                "--grid-size", "5", "--output", str(out)]) == 0


def test_failing_verdict_exits_one(tmp_path, sigma_file):
    # a wrong tolerance on a deterministic check must fail the run
    assert run(["identities", "--random-p", "4", "--tol", "1e-30",
                "--output", str(tmp_path / "r.json")]) == 1


def test_module_entry_point(sigma_file):
    proc = subprocess.run([sys.executable, "-m", "mvgamma", "admissibility", "--p", "3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "admissibility"
