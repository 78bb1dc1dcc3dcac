from __future__ import annotations

import json
import subprocess
import sys

import pytest

from kwlab import cli

TREFOIL = "X[1,4,2,5] X[3,6,4,1] X[5,2,6,3]\n"


def _run(argv, tmp_path, capsys):
    out = tmp_path / "report.json"
    code = cli.run(argv + ["--out", str(out)])
    err = capsys.readouterr().err
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report, err


def test_verify_bogomolny_with_charges_file(tmp_path, capsys):
    charges = tmp_path / "charges.json"
    charges.write_text(json.dumps({"sites": [{"pos": [0, 0, 0.25], "n": 1}, {"pos": [0, 0, -0.25], "n": -1}]}))
    csv_path = tmp_path / "table.csv"
    code, rep, err = _run(["verify", "bogomolny", "--charges", str(charges), "--h", "0.05", "--refine", "3",
                           "--csv", str(csv_path)], tmp_path, capsys)
    assert code == 0 and rep["passed"]
    assert "PASS" in err and "FAIL" not in err
    assert rep["config"]["inputs"]["charges"] == str(charges)
    assert rep["tolerances"]["slope"] == 1.9 and rep["version"]
    assert csv_path.read_text().startswith("h,error,slope")


def test_jones_pd_file(tmp_path, capsys):
    pd = tmp_path / "trefoil.pd"
    pd.write_text(TREFOIL)
    code, rep, err = _run(["jones", "--pd", str(pd)], tmp_path, capsys)
    assert code == 0
    assert rep["results"]["polynomial"] == "q^(-1/2) + q^(-3/2) + q^(-5/2) - q^(-9/2)"
    assert rep["results"]["coefficients"] == {"-1/2": 1, "-3/2": 1, "-5/2": 1, "-9/2": -1}


def test_jones_corpus_name_and_framing(tmp_path, capsys):
    code, rep, _ = _run(["jones", "--knot", "unknot", "--framing", "1"], tmp_path, capsys)
    assert code == 0 and rep["results"]["framing"] == 1


def test_weitzenbock_closed_single_t(tmp_path, capsys):
    code, rep, _ = _run(["weitzenbock", "closed", "--seed", "7", "--t", "2", "--n", "8"], tmp_path, capsys)
    assert code == 0
    assert list(rep["results"]) == ["t=2.0"]
    assert rep["results"]["t=2.0"]["discrepancy"] <= 1e-10


def test_tolerance_override_turns_pass_into_fail(tmp_path, capsys):
    code, rep, err = _run(["weitzenbock", "closed", "--t", "2", "--n", "8", "--tol", "identity=0"],
                          tmp_path, capsys)
    assert code == 1 and not rep["passed"]
    assert rep["config"]["tolerance_overrides"] == {"identity": 0.0}
    assert "FAIL" in err


def test_chern_and_morse_and_hecke(tmp_path, capsys):
    assert _run(["chern", "--n", "8"], tmp_path, capsys)[0] == 0
    code, rep, _ = _run(["morse", "--problem", "torus", "--expect-betti", "1,2,1"], tmp_path, capsys)
    assert code == 0 and rep["results"]["complex"]["betti"] == [1, 2, 1]
    code, rep, _ = _run(["morse", "--problem", "sphere", "--expect-betti", "1,1,1"], tmp_path, capsys)
    assert code == 1
    assert _run(["morse", "--problem", "torus", "--tilt", "0"], tmp_path, capsys)[0] == 1
    seq = tmp_path / "seq.json"
    seq.write_text(json.dumps({"events": [{"y": -1.5, "n": 1}, {"y": -0.5, "p": [1, 0], "n": -1},
                                          {"y": 0.5, "p": [0, 1], "n": -1}, {"y": 1.5, "p": [-1, 0.5], "n": 1}]}))
    assert _run(["hecke", "--sequence", str(seq)], tmp_path, capsys)[0] == 0
    assert _run(["hecke"], tmp_path, capsys)[0] == 0


def test_verify_nahm_and_extended(tmp_path, capsys):
    assert _run(["verify", "nahm", "--dims", "2", "--h", "1/8", "--refine", "3"], tmp_path, capsys)[0] == 0
    assert _run(["verify", "extended", "--dims", "2"], tmp_path, capsys)[0] == 0


def test_determinism(tmp_path, capsys):
    a = tmp_path / "a.json"
    argv = ["weitzenbock", "closed", "--t", "0.5", "--n", "8", "--seed", "3", "--out", str(a)]
    assert cli.run(argv) == 0
    first = a.read_bytes()
    assert cli.run(argv) == 0
    assert a.read_bytes() == first
    capsys.readouterr()


def test_usage_and_input_errors(tmp_path, capsys):
    assert cli.run(["nope"]) == 2
    assert cli.run(["jones", "--pd", str(tmp_path / "missing.pd")]) == 2
    bad = tmp_path / "bad.pd"
    bad.write_text("X[1,2,3,4]")
    assert cli.run(["jones", "--pd", str(bad)]) == 2
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{")
    assert cli.run(["verify", "bogomolny", "--charges", str(bad_json)]) == 2
    assert cli.run(["chern", "--threads", "0"]) == 2
    assert cli.run(["weitzenbock", "closed", "--tol", "identity"]) == 2
    capsys.readouterr()


def test_stdout_report_and_version(capsys):
    assert cli.run(["jones", "--knot", "hopf"]) == 0
    out = capsys.readouterr().out
    rep = json.loads(out[out.index("{"):])
    assert rep["config"]["subcommand"] == "jones" and rep["tool"] == "kw-lab"
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["--version"])


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kwlab.cli", "jones", "--knot", "figure_eight"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "q^(5/2) + q^(-5/2)" in proc.stdout + proc.stderr
